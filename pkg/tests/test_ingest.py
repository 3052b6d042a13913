import math

import numpy as np
import pytest

from econokin.distributions import GammaMixParams, GammaTerm, normalize, usa2001_mixture
from econokin.errors import DegenerateInputError, MonotonicityError, ParseError
from econokin.ingest import (
    PARETO_EXPONENT_FLOOR,
    BinningScheme,
    EmpiricalDistribution,
    histogram,
    parse_income_table,
    read_empirical,
    to_empirical,
    write_empirical,
)
from econokin.synthetic import (
    bracket_floors,
    fixture_path,
    load_fixture,
    synthetic_income_table,
    table_to_csv,
)

TABLE = b"floor,ceiling,count,total\n0,10000,500,2000000\n10000,50000,300,6000000\n50000,,20,3000000\n"


def _closure(emp):
    return float(np.sum(emp.density * np.diff(emp.bin_edges)))


# ---- parsing

def test_parse_three_rows():
    t = parse_income_table(TABLE)
    assert len(t.rows) == 3
    assert t.rows[-1].open_ended and not t.rows[0].open_ended
    assert t.rows[1].count == 300 and t.rows[1].total == 6_000_000
    assert t.has_totals


def test_parse_without_totals_and_str_input():
    t = parse_income_table("floor,ceiling,count\n0,1,5\n1,2,5\n")
    assert not t.has_totals and t.rows[1].ceiling == 2.0


def test_parse_decreasing_floor_names_row():
    with pytest.raises(MonotonicityError) as exc:
        parse_income_table("floor,ceiling,count\n0,10,1\n20,30,1\n15,,1\n")
    assert exc.value.row == 3 and "row 3" in str(exc.value)


def test_parse_errors():
    with pytest.raises(ParseError):
        parse_income_table(b"")
    with pytest.raises(ParseError):
        parse_income_table("low,high,n\n0,1,2\n")
    with pytest.raises(ParseError) as exc:
        parse_income_table("floor,ceiling,count\n0,1,abc\n")
    assert exc.value.column == "count"
    with pytest.raises(ParseError):
        parse_income_table("floor,ceiling,count\n0,1,-3\n")
    with pytest.raises(MonotonicityError):
        parse_income_table("floor,ceiling,count\n0,,1\n5,,1\n")
    with pytest.raises(ParseError):
        parse_income_table("floor,ceiling,count\n0,1\n")
    with pytest.raises(ParseError):
        parse_income_table("floor,ceiling,count\n")


# ---- to_empirical

def test_two_bracket_hand_example():
    c = 40
    emp = to_empirical(parse_income_table(f"floor,ceiling,count,total\n0,1,{c},{0.5 * c}\n1,2,{c},{1.5 * c}\n"))
    assert emp.scale == pytest.approx(1.0)
    np.testing.assert_allclose(emp.bin_edges, [0, 1, 2])
    np.testing.assert_allclose(emp.density, [0.5, 0.5])
    assert emp.ccdf[0] == 1.0 and emp.ccdf[-1] == 0.0


def test_midpoint_mean_and_single_bracket_mass():
    emp = to_empirical(parse_income_table("floor,ceiling,count\n0,2,0\n2,4,7\n4,6,0\n"))
    assert emp.scale == pytest.approx(3.0)
    np.testing.assert_allclose(emp.ccdf, [1, 1, 0, 0])
    assert _closure(emp) == pytest.approx(1.0, abs=1e-12)


def test_open_bracket_pareto_rule():
    emp = to_empirical(parse_income_table("floor,ceiling,count\n0,10,1000\n10,20,100\n20,40,20\n40,,5\n"))
    assert emp.metadata["open_mean_rule"] == "pareto_extrapolation"
    assert emp.metadata["pareto_exponent"] >= PARETO_EXPONENT_FLOOR
    assert emp.bin_edges[-1] * emp.scale == pytest.approx(emp.metadata["open_ceiling"])
    assert _closure(emp) == pytest.approx(1.0, abs=1e-9)
    # a flat density forces the exponent floor
    flat = to_empirical(parse_income_table("floor,ceiling,count\n0,10,10\n10,20,10\n20,,10\n"))
    assert flat.metadata["pareto_exponent"] == PARETO_EXPONENT_FLOOR


def test_degenerate_tables():
    with pytest.raises(DegenerateInputError):
        to_empirical(parse_income_table("floor,ceiling,count\n0,1,0\n1,2,0\n"))
    with pytest.raises(DegenerateInputError):
        to_empirical(parse_income_table("floor,ceiling,count\n0,1,5\n"))
    with pytest.raises(MonotonicityError):
        to_empirical(parse_income_table("floor,ceiling,count\n0,1,5\n2,3,5\n"))


def test_round_trip_counts():
    raw = parse_income_table(TABLE)
    emp = to_empirical(raw)
    np.testing.assert_array_equal(np.round(emp.counts), [r.count for r in raw.rows])
    np.testing.assert_allclose(emp.bin_edges[:-1] * emp.scale, [r.floor for r in raw.rows], rtol=1e-12)
    assert emp.scale == pytest.approx(11_000_000 / 820)
    assert _closure(emp) == pytest.approx(1.0, abs=1e-9)
    assert np.all(np.diff(emp.ccdf) <= 0) and emp.ccdf[0] == 1.0


# ---- histogram

def test_histogram_single_sample():
    emp = histogram([2.5])
    assert np.count_nonzero(emp.density) == 1
    assert _closure(emp) == pytest.approx(1.0, abs=1e-12)


def test_histogram_exponential_ks():
    x = np.random.default_rng(0).exponential(size=100_000)
    emp = histogram(x)
    assert emp.metadata["binning"]["bins_per_decade"] == 20
    ks = np.max(np.abs(emp.ccdf - np.exp(-emp.bin_edges)))
    assert ks < 0.01
    assert _closure(emp) == pytest.approx(1.0, abs=1e-9)


def test_histogram_bin_sensitivity():
    x = np.random.default_rng(1).exponential(size=50_000)
    fine = histogram(x, BinningScheme(bins_per_decade=20, anchor=1.0))
    coarse = histogram(x, BinningScheme(bins_per_decade=10, anchor=1.0))
    shared = np.intersect1d(np.round(fine.bin_edges, 12), np.round(coarse.bin_edges, 12))
    qf = np.interp(shared, fine.bin_edges, fine.ccdf)
    qc = np.interp(shared, coarse.bin_edges, coarse.ccdf)
    assert np.max(np.abs(qf - qc)) < 1 / math.sqrt(x.size)
    assert not np.allclose(fine.density[::2][: coarse.density.size], coarse.density)


def test_histogram_zeros_linear_and_errors():
    emp = histogram([0.0, 0.0, 1.0, 2.0])
    assert emp.bin_edges[0] == 0.0 and emp.density[0] > 0
    lin = histogram(np.arange(10.0), BinningScheme(kind="linear", n_bins=5))
    assert lin.density.size == 5 and _closure(lin) == pytest.approx(1.0)
    norm = histogram([1.0, 3.0], BinningScheme(normalize_by_mean=True))
    assert norm.scale == 2.0
    with pytest.raises(DegenerateInputError):
        histogram([])
    with pytest.raises(DegenerateInputError):
        histogram([1.0, -1.0])
    with pytest.raises(DegenerateInputError):
        histogram([0.0, 0.0])


def test_empirical_validation_and_rescale():
    with pytest.raises(MonotonicityError):
        EmpiricalDistribution([0, 2, 1], [0.5, 0.5], [1, 0.5, 0], 2)
    emp = histogram(np.random.default_rng(3).exponential(size=1000))
    r = emp.rescaled(10.0)
    np.testing.assert_allclose(r.bin_edges, emp.bin_edges * 10)
    np.testing.assert_allclose(r.mass, emp.mass)
    assert r.mean() == pytest.approx(10 * emp.mean())


def test_write_read_round_trip(tmp_path):
    emp = to_empirical(parse_income_table(TABLE))
    csv_path, json_path = write_empirical(emp, tmp_path / "emp")
    assert csv_path.suffix == ".csv" and json_path.exists()
    back = read_empirical(csv_path)
    np.testing.assert_array_equal(back.bin_edges, emp.bin_edges)
    np.testing.assert_array_equal(back.density, emp.density)
    np.testing.assert_allclose(back.ccdf, emp.ccdf, atol=1e-15)
    assert back.scale == emp.scale and back.total_count == emp.total_count
    assert back.metadata["open_mean_rule"] == emp.metadata["open_mean_rule"]
    (tmp_path / "bad.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ParseError):
        read_empirical(tmp_path / "bad.csv")


# ---- synthetic fixture

def test_bracket_floors_round_numbers():
    f = bracket_floors()
    assert f[0] == 0 and f[1] == 100 and f[-1] == 10_000_000
    assert np.all(np.diff(f) > 0)


def test_synthetic_table_is_deterministic_and_consistent():
    model = normalize(usa2001_mixture())
    a = synthetic_income_table(model, 10_000, seed=4)
    b = synthetic_income_table(model, 10_000, seed=4)
    assert a == b
    assert sum(r.count for r in a.rows) == 10_000
    assert parse_income_table(table_to_csv(a)).rows[3].count == a.rows[3].count


def test_synthetic_exponential_mean():
    exp = GammaMixParams((GammaTerm(1.0, 0.0),), 1.0)
    t = synthetic_income_table(exp, 1_000_000, seed=0, scale=1000.0)
    emp = to_empirical(t)
    assert emp.scale == pytest.approx(1000.0, rel=0.01)


def test_shipped_fixture_is_labelled_synthetic():
    raw, meta = load_fixture()
    assert meta["synthetic"] is True and "SYNTHETIC" in meta["description"]
    assert sum(r.count for r in raw.rows) == meta["n_returns"]
    assert fixture_path().name.endswith(".csv")
    # regenerating from the recorded recipe reproduces the file
    model = normalize(usa2001_mixture())
    again = synthetic_income_table(model, meta["n_returns"], meta["seed"], meta["dollars_per_unit"])
    assert table_to_csv(again) == fixture_path().read_text()

"""Synthetic bracket tables for testing the ingest and fitting pipeline.

The tables mimic the layout of published tax-return statistics (dollar
brackets with return counts and total income) but are drawn from a known
model, so a fit can be checked against the generating parameters.  They are
not real data.
"""

from __future__ import annotations

import csv
import io
import json
import math
from importlib import resources

import numpy as np

from .distributions import DistSpec, cdf, partial_moment, total_mass, usa2001_mixture
from .ingest import RawIncomeTable, IncomeRow, parse_income_table

__all__ = [
    "BRACKET_MULTIPLIERS",
    "bracket_floors",
    "synthetic_income_table",
    "table_to_csv",
    "fixture_path",
    "load_fixture",
    "FIXTURE_SCALE",
    "FIXTURE_RETURNS",
    "FIXTURE_SEED",
]

# round-number bracket floors, ten per decade
BRACKET_MULTIPLIERS = (1.0, 1.25, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 7.5)
FIXTURE_SCALE = 40_000.0  # dollars per model income unit
FIXTURE_RETURNS = 130_000_000
FIXTURE_SEED = 2001


def bracket_floors(lowest: float = 100.0, highest: float = 10_000_000.0) -> np.ndarray:
    """0 followed by round-number floors from ``lowest`` to ``highest`` inclusive."""
    floors = [0.0]
    decade = lowest
    while decade <= highest:
        for m in BRACKET_MULTIPLIERS:
            v = m * decade
            if v > highest * (1 + 1e-12):
                break
            floors.append(v)
        decade *= 10.0
    return np.array(floors)


def synthetic_income_table(model: DistSpec, n_returns: int, seed: int, scale: float = FIXTURE_SCALE,
                           floors=None) -> RawIncomeTable:
    """Bracket counts and income totals for ``n_returns`` draws from ``model``.

    Counts are one multinomial draw over the exact bracket probabilities, which
    has the same law as binning ``n_returns`` samples.  Totals are count times
    the exact conditional mean income of each bracket.  Model income ``x``
    maps to ``x * scale`` dollars.
    """
    floors = bracket_floors() if floors is None else np.asarray(floors, dtype=float)
    x = floors / scale
    mass = total_mass(model)
    F = np.append(np.asarray(cdf(model, x), dtype=float) / mass, 1.0)
    probs = np.clip(np.diff(F), 0.0, None)
    counts = np.random.default_rng(seed).multinomial(int(n_returns), probs / probs.sum())
    rows = []
    for k, fl in enumerate(floors):
        hi = x[k + 1] if k + 1 < x.size else math.inf
        p = F[k + 1] - F[k]
        cond_mean = partial_moment(model, x[k], hi) / mass / p if p > 0 else 0.0
        ceiling = float(floors[k + 1]) if k + 1 < floors.size else None
        c = int(counts[k])
        rows.append(IncomeRow(float(fl), ceiling, c, c * cond_mean * scale))
    return RawIncomeTable(tuple(rows))


def table_to_csv(table: RawIncomeTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["floor", "ceiling", "count", "total"])
    for r in table.rows:
        w.writerow([f"{r.floor:.0f}", "" if r.ceiling is None else f"{r.ceiling:.0f}", r.count,
                    "" if r.total is None else f"{r.total:.2f}"])
    return buf.getvalue()


def fixture_path():
    """Path of the shipped synthetic table, drawn from the normalized USA-2001 mixture."""
    return resources.files("econokin") / "data" / "synthetic_usa2001_brackets.csv"


def load_fixture() -> tuple[RawIncomeTable, dict]:
    base = resources.files("econokin") / "data"
    meta = json.loads((base / "synthetic_usa2001_brackets.json").read_text())
    return parse_income_table((base / "synthetic_usa2001_brackets.csv").read_text()), meta


def _build_fixture(out_dir) -> None:
    from pathlib import Path
    from .distributions import to_dict

    model = usa2001_mixture(normalized=True)
    table = synthetic_income_table(model, FIXTURE_RETURNS, FIXTURE_SEED)
    out = Path(out_dir)
    (out / "synthetic_usa2001_brackets.csv").write_text(table_to_csv(table))
    meta = {
        "synthetic": True,
        "description": "SYNTHETIC bracket table drawn from the normalized USA-2001 mixture; not real tax data",
        "generating_model": to_dict(model),
        "dollars_per_unit": FIXTURE_SCALE,
        "n_returns": FIXTURE_RETURNS,
        "seed": FIXTURE_SEED,
        "generator": "econokin.synthetic.synthetic_income_table",
    }
    (out / "synthetic_usa2001_brackets.json").write_text(json.dumps(meta, indent=2))


if __name__ == "__main__":
    import sys

    _build_fixture(sys.argv[1] if len(sys.argv) > 1 else resources.files("econokin") / "data")

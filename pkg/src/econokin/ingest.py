"""Empirical income tables and binned empirical distributions."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateInputError, MonotonicityError, ParseError

__all__ = [
    "IncomeRow",
    "RawIncomeTable",
    "EmpiricalDistribution",
    "BinningScheme",
    "parse_income_table",
    "to_empirical",
    "histogram",
    "read_empirical",
    "write_empirical",
    "PARETO_EXPONENT_FLOOR",
]

PARETO_EXPONENT_FLOOR = 1.1


@dataclass(frozen=True)
class IncomeRow:
    floor: float
    ceiling: float | None  # None marks the open-ended top bracket
    count: int
    total: float | None = None

    @property
    def open_ended(self) -> bool:
        return self.ceiling is None


@dataclass(frozen=True)
class RawIncomeTable:
    rows: tuple

    def __post_init__(self):
        rows = tuple(self.rows)
        object.__setattr__(self, "rows", rows)
        for k, row in enumerate(rows):
            if row.count < 0:
                raise ParseError("negative return count", row=k + 1, column="count")
            if k and not row.floor > rows[k - 1].floor:
                raise MonotonicityError("bracket floors must be strictly increasing", row=k + 1, column="floor")
            if row.open_ended and k != len(rows) - 1:
                raise MonotonicityError("only the top bracket may be open-ended", row=k + 1, column="ceiling")
            if not row.open_ended and not row.ceiling > row.floor:
                raise MonotonicityError("ceiling must exceed floor", row=k + 1, column="ceiling")

    @property
    def has_totals(self) -> bool:
        return all(r.total is not None for r in self.rows)


def _number(text, row, column, kind=float):
    try:
        v = kind(text)
    except ValueError:
        try:
            v = float(text)
            if kind is int and not v.is_integer():
                raise ValueError
            v = kind(v)
        except ValueError:
            raise ParseError(f"cannot read {text!r} as a number", row=row, column=column) from None
    if isinstance(v, float) and not math.isfinite(v):
        raise ParseError(f"non-finite value {text!r}", row=row, column=column)
    return v


def parse_income_table(content) -> RawIncomeTable:
    """Parse CSV with header ``floor,ceiling,count[,total]``.

    An empty ``ceiling`` marks the open-ended top bracket.  Row numbers in
    errors count data rows from 1.
    """
    if isinstance(content, Path):
        content = content.read_bytes()
    if isinstance(content, bytes):
        content = content.decode("utf-8-sig")
    reader = csv.reader(io.StringIO(content))
    try:
        header = [h.strip().lower() for h in next(reader)]
    except StopIteration:
        raise ParseError("empty income table") from None
    required = ["floor", "ceiling", "count"]
    if header[:3] != required or len(header) > 4 or (len(header) == 4 and header[3] != "total"):
        raise ParseError(f"header must be floor,ceiling,count[,total], got {','.join(header)}", row=0)
    with_total = len(header) == 4
    rows = []
    for k, rec in enumerate(reader, start=1):
        if not rec or all(not c.strip() for c in rec):
            continue
        if len(rec) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(rec)}", row=k)
        floor = _number(rec[0].strip(), k, "floor")
        ceiling = rec[1].strip()
        ceiling = None if ceiling == "" else _number(ceiling, k, "ceiling")
        count = _number(rec[2].strip(), k, "count", int)
        total = None
        if with_total and rec[3].strip() != "":
            total = _number(rec[3].strip(), k, "total")
        rows.append(IncomeRow(floor, ceiling, count, total))
    if not rows:
        raise ParseError("income table has no data rows")
    return RawIncomeTable(tuple(rows))


@dataclass
class EmpiricalDistribution:
    """Binned distribution in relative income units.

    ``ccdf[k]`` is the fraction of the population at or above ``bin_edges[k]``;
    it has one more entry than ``density`` (the last is the mass beyond the
    final edge, zero for closed binnings).
    """

    bin_edges: np.ndarray
    density: np.ndarray
    ccdf: np.ndarray
    total_count: int
    scale: float = 1.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.bin_edges = np.asarray(self.bin_edges, dtype=float)
        self.density = np.asarray(self.density, dtype=float)
        self.ccdf = np.asarray(self.ccdf, dtype=float)
        if self.bin_edges.size != self.density.size + 1 or self.ccdf.size != self.bin_edges.size:
            raise ValueError("inconsistent empirical array lengths")
        if np.any(np.diff(self.bin_edges) <= 0):
            raise MonotonicityError("bin edges must be strictly increasing")

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    @property
    def mass(self) -> np.ndarray:
        return self.density * self.widths

    @property
    def counts(self) -> np.ndarray:
        return self.mass * self.total_count

    @property
    def counts_above(self) -> np.ndarray:
        return self.ccdf * self.total_count

    def mean(self) -> float:
        """Midpoint estimate of the mean."""
        mid = 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])
        return float(np.sum(mid * self.mass))

    def rescaled(self, c: float) -> "EmpiricalDistribution":
        """Same distribution with incomes multiplied by ``c``."""
        return EmpiricalDistribution(self.bin_edges * c, self.density / c, self.ccdf.copy(),
                                     self.total_count, self.scale / c, dict(self.metadata))


def _ccdf_from_mass(mass: np.ndarray) -> np.ndarray:
    suffix = np.concatenate([np.cumsum(mass[::-1])[::-1], [0.0]])
    return suffix / suffix[0]


def _open_bracket_mean(rows) -> tuple[float, dict]:
    top = rows[-1]
    closed = [r for r in rows[:-1] if r.count > 0]
    if top.total is not None and top.count > 0:
        return top.total / top.count, {"open_mean_rule": "reported_total"}
    if len(closed) < 2:
        a = PARETO_EXPONENT_FLOOR
        note = "too few closed brackets; exponent floor used"
    else:
        r1, r2 = closed[-2], closed[-1]
        d1 = r1.count / (r1.ceiling - r1.floor)
        d2 = r2.count / (r2.ceiling - r2.floor)
        x1 = 0.5 * (r1.floor + r1.ceiling)
        x2 = 0.5 * (r2.floor + r2.ceiling)
        pdf_slope = math.log(d2 / d1) / math.log(x2 / x1) if x1 > 0 else -math.inf
        a = max(-pdf_slope - 1.0, PARETO_EXPONENT_FLOOR)
        note = "pareto_extrapolation"
    floor = max(top.floor, 1e-300)
    return floor * a / (a - 1.0), {"open_mean_rule": note, "pareto_exponent": a}


def to_empirical(raw: RawIncomeTable) -> EmpiricalDistribution:
    """Normalize a bracket table by its mean income.

    The open-ended top bracket is closed at ``2 * bracket_mean - floor`` so its
    uniform-density representation keeps the bracket's mean and count.
    """
    rows = raw.rows
    counts = np.array([r.count for r in rows], dtype=float)
    total = counts.sum()
    if not total > 0:
        raise DegenerateInputError("income table has no returns")
    if len(rows) < 2:
        raise DegenerateInputError("a single bracket carries no distributional information")
    meta = {"source": "income_table", "mean_from": "totals" if raw.has_totals else "midpoints"}
    means = []
    for r in rows:
        if r.open_ended:
            m, info = _open_bracket_mean(rows)
            meta.update(info)
        elif raw.has_totals and r.count > 0:
            m = r.total / r.count
        else:
            m = 0.5 * (r.floor + r.ceiling)
        means.append(m)
    means = np.array(means)
    mean_income = float(np.sum(means * counts) / total)
    if not mean_income > 0:
        raise DegenerateInputError("mean income must be positive")
    edges = [r.floor for r in rows]
    top = rows[-1]
    if top.open_ended:
        ceiling = 2.0 * means[-1] - top.floor
        if not ceiling > top.floor:
            raise DegenerateInputError("open bracket mean does not exceed its floor")
        meta["open_ceiling"] = ceiling
        edges.append(ceiling)
    else:
        edges.append(top.ceiling)
    # gaps between a ceiling and the next floor are not allowed to carry mass
    for k, r in enumerate(rows[:-1]):
        if r.ceiling is not None and not math.isclose(r.ceiling, rows[k + 1].floor, rel_tol=1e-12, abs_tol=1e-12):
            raise MonotonicityError("bracket ceiling must equal the next floor", row=k + 1, column="ceiling")
    edges = np.array(edges) / mean_income
    mass = counts / total
    density = mass / np.diff(edges)
    return EmpiricalDistribution(edges, density, _ccdf_from_mass(mass), int(round(total)),
                                 scale=mean_income, metadata=meta)


@dataclass(frozen=True)
class BinningScheme:
    kind: str = "log"  # "log" or "linear"
    bins_per_decade: int = 20
    n_bins: int = 50  # linear only
    anchor: float | None = None  # log edges sit at anchor * 10**(k/bins_per_decade); default: sample mean
    normalize_by_mean: bool = False

    def to_dict(self) -> dict:
        return {"kind": self.kind, "bins_per_decade": self.bins_per_decade, "n_bins": self.n_bins,
                "anchor": self.anchor, "normalize_by_mean": self.normalize_by_mean}


def _log_edges(lo, hi, anchor, bpd):
    k0 = math.floor(bpd * math.log10(lo / anchor))
    k1 = math.floor(bpd * math.log10(hi / anchor)) + 1
    while anchor * 10.0 ** (k0 / bpd) > lo:
        k0 -= 1
    while anchor * 10.0 ** (k1 / bpd) <= hi:
        k1 += 1
    return anchor * 10.0 ** (np.arange(k0, k1 + 1) / bpd)


def histogram(samples, scheme: BinningScheme = BinningScheme()) -> EmpiricalDistribution:
    """Bin raw incomes; the binning scheme is recorded in the metadata."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise DegenerateInputError("cannot bin an empty sample")
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise DegenerateInputError("incomes must be finite and non-negative")
    mean = float(x.mean())
    scale = 1.0
    if scheme.normalize_by_mean:
        if not mean > 0:
            raise DegenerateInputError("mean income must be positive")
        scale = mean
        x = x / mean
        mean = 1.0
    lo, hi = float(x.min()), float(x.max())
    if scheme.kind == "log":
        positive = x[x > 0]
        if positive.size == 0:
            raise DegenerateInputError("log binning needs positive incomes")
        anchor = scheme.anchor or (mean if mean > 0 else 1.0)
        edges = _log_edges(float(positive.min()), hi, anchor, scheme.bins_per_decade)
        if lo == 0.0:
            edges = np.concatenate([[0.0], edges])
    elif scheme.kind == "linear":
        top = hi if hi > lo else lo + 1.0
        edges = np.linspace(lo, np.nextafter(top, np.inf), scheme.n_bins + 1)
    else:
        raise ValueError(f"unknown binning kind {scheme.kind!r}")
    counts, _ = np.histogram(x, bins=edges)
    mass = counts / x.size
    with np.errstate(over="ignore", divide="ignore"):
        density = mass / np.diff(edges)
    if not np.all(np.isfinite(density)):
        raise DegenerateInputError("bin widths underflow; rescale the incomes before binning")
    meta = {"source": "samples", "binning": scheme.to_dict()}
    return EmpiricalDistribution(edges, density, _ccdf_from_mass(mass), int(x.size),
                                 scale=scale, metadata=meta)


def write_empirical(emp: EmpiricalDistribution, path) -> tuple[Path, Path]:
    """Write ``<path>.csv`` (edge_low, edge_high, density, ccdf) and ``<path>.json``."""
    path = Path(path)
    csv_path, json_path = path.with_suffix(".csv"), path.with_suffix(".json")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["edge_low", "edge_high", "density", "ccdf"])
        for k in range(emp.density.size):
            w.writerow([repr(float(emp.bin_edges[k])), repr(float(emp.bin_edges[k + 1])),
                        repr(float(emp.density[k])), repr(float(emp.ccdf[k]))])
    meta = {"scale": emp.scale, "total_count": emp.total_count, **emp.metadata}
    json_path.write_text(json.dumps(meta, indent=2, default=float))
    return csv_path, json_path


def read_empirical(path) -> EmpiricalDistribution:
    """Read an empirical distribution CSV, plus its JSON sidecar when present."""
    path = Path(path)
    text = path.read_text()
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ParseError("empty empirical distribution file") from None
    if header != ["edge_low", "edge_high", "density", "ccdf"]:
        raise ParseError(f"unexpected header {','.join(header)}", row=0)
    lo, hi, dens, cc = [], [], [], []
    for k, rec in enumerate(reader, start=1):
        if not rec:
            continue
        if len(rec) != 4:
            raise ParseError(f"expected 4 fields, got {len(rec)}", row=k)
        vals = [_number(v, k, c) for v, c in zip(rec, header)]
        lo.append(vals[0]); hi.append(vals[1]); dens.append(vals[2]); cc.append(vals[3])
    if not lo:
        raise ParseError("empirical distribution has no rows")
    if not np.allclose(lo[1:], hi[:-1], rtol=1e-12, atol=0):
        raise MonotonicityError("bins must be contiguous")
    edges = np.array(lo + [hi[-1]])
    density = np.array(dens)
    mass = density * np.diff(edges)
    ccdf = np.concatenate([cc, [max(0.0, cc[-1] - mass[-1])]])
    meta, scale, total = {}, 1.0, 0
    sidecar = path.with_suffix(".json")
    if sidecar.exists():
        meta = json.loads(sidecar.read_text())
        scale = float(meta.pop("scale", 1.0))
        total = int(meta.pop("total_count", 0))
    return EmpiricalDistribution(edges, density, ccdf, total, scale=scale, metadata=meta)

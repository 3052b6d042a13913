"""Kinetic wealth-exchange Monte Carlo with quenched saving propensities.

A closed economy of agents trades pairwise: at each step a random pair
``(i, j)`` and a random fraction ``eps`` are drawn and

    dm = eps * (1 - lam_j) * m_j - (1 - eps) * (1 - lam_i) * m_i
    m_i += dm;  m_j -= dm

Agents belong to group B (fixed propensity ``lambda_B``) or group T (quenched
``lam = 1 - u**(1/alpha)`` with ``u`` uniform on (0, 1]).  Every realization
draws its propensities and its trade stream from a generator keyed on
``(seed, realization_index)``, so an ensemble is bit-reproducible regardless
of how realizations are scheduled across threads.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numba
import numpy as np

from .errors import DomainError, EmptyGroupError, InvalidParameterError

__all__ = [
    "GROUP_B",
    "GROUP_T",
    "SimConfig",
    "TradeOutcome",
    "BinnedDistribution",
    "LambdaProfile",
    "SimResult",
    "assign_lambdas",
    "quenched_lambda",
    "trade_step",
    "apply_trades",
    "run_realization",
    "run_ensemble",
    "income_by_lambda",
    "log_edges",
    "worker_count",
    "TailFit",
    "ccdf_tail_slope",
]

GROUP_B = 0
GROUP_T = 1
LAMBDA_MAX = 1.0 - 1e-12
BINS_PER_DECADE = 40
DECADES = 3  # histogram spans [10**-3, 10**3] * mean money
CHECK_EVERY = 10_000
CHUNK = 1 << 17


@dataclass(frozen=True)
class SimConfig:
    n_agents: int = 1000
    frac_T: float = 0.10
    lambda_B: float = 0.0
    quench_alpha: float = 1.25
    n_trades: int = 1_000_000
    n_realizations: int = 200
    seed: int = 0
    initial_money: float = 1.0
    lambda_bins: int = 20

    def __post_init__(self):
        for name in ("n_agents", "n_realizations", "lambda_bins"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise InvalidParameterError(f"{name} must be a positive integer, got {v!r}")
        if isinstance(self.n_trades, bool) or not isinstance(self.n_trades, (int, np.integer)) or self.n_trades < 0:
            raise InvalidParameterError(f"n_trades must be a non-negative integer, got {self.n_trades!r}")
        if self.n_trades > 0 and self.n_agents < 2:
            raise InvalidParameterError("trading needs at least two agents")
        if not 0.0 <= self.frac_T <= 1.0:
            raise InvalidParameterError(f"frac_T must lie in [0, 1], got {self.frac_T}")
        if not 0.0 <= self.lambda_B < 1.0:
            raise InvalidParameterError(f"lambda_B must lie in [0, 1), got {self.lambda_B}")
        if not self.quench_alpha > 0:
            raise InvalidParameterError(f"quench_alpha must be positive, got {self.quench_alpha}")
        if not self.initial_money > 0 or not math.isfinite(self.initial_money):
            raise InvalidParameterError(f"initial_money must be positive, got {self.initial_money}")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidParameterError("seed must be a 64-bit unsigned integer")

    @property
    def n_T(self) -> int:
        return int(math.floor(self.frac_T * self.n_agents + 1e-9))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        unknown = set(d) - set(known)
        if unknown:
            raise InvalidParameterError(f"unknown SimConfig fields: {sorted(unknown)}")
        return cls(**known)


class TradeOutcome(NamedTuple):
    delta_m: float
    new_money_i: float
    new_money_j: float


def _streams(seed: int, realization_index: int):
    root = np.random.SeedSequence(int(seed), spawn_key=(int(realization_index),))
    lam_seq, trade_seq = root.spawn(2)
    return np.random.default_rng(lam_seq), np.random.default_rng(trade_seq)


def quenched_lambda(u, alpha: float):
    """``1 - u**(1/alpha)`` for ``u`` in (0, 1], clamped to ``LAMBDA_MAX``."""
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0) | (u > 1)):
        raise DomainError("u must lie in (0, 1]")
    return np.minimum(1.0 - u ** (1.0 / alpha), LAMBDA_MAX)


def assign_lambdas(config: SimConfig, seed) -> tuple[np.ndarray, np.ndarray]:
    """Propensities and group labels; group B agents come first.

    ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n_T = config.n_T
    lam = np.full(config.n_agents, config.lambda_B, dtype=float)
    groups = np.zeros(config.n_agents, dtype=np.int8)
    if n_T:
        u = 1.0 - rng.random(n_T)  # (0, 1]
        lam[-n_T:] = quenched_lambda(u, config.quench_alpha)
        groups[-n_T:] = GROUP_T
    return lam, groups


def trade_step(m_i, lam_i, m_j, lam_j, eps) -> TradeOutcome:
    if not 0.0 <= eps <= 1.0:
        raise DomainError(f"eps must lie in [0, 1], got {eps}")
    if not (m_i >= 0 and m_j >= 0 and math.isfinite(m_i) and math.isfinite(m_j)):
        raise DomainError("money must be finite and non-negative")
    dm = eps * (1.0 - lam_j) * m_j - (1.0 - eps) * (1.0 - lam_i) * m_i
    return TradeOutcome(dm, m_i + dm, m_j - dm)


@numba.njit(nogil=True, cache=True)
def _trade_kernel(money, lam, ii, jj, eps, total0, check_every, counter, check_nonneg):
    # returns (max relative drift seen at checkpoints, index of first negative or -1)
    max_drift = 0.0
    bad = -1
    for t in range(ii.shape[0]):
        i = ii[t]
        j = jj[t]
        e = eps[t]
        mi = money[i]
        mj = money[j]
        dm = e * (1.0 - lam[j]) * mj - (1.0 - e) * (1.0 - lam[i]) * mi
        money[i] = mi + dm
        money[j] = mj - dm
        if check_nonneg and bad < 0 and (money[i] < 0.0 or money[j] < 0.0):
            bad = counter + t
        if (counter + t + 1) % check_every == 0:
            s = 0.0
            for k in range(money.shape[0]):
                s += money[k]
            d = abs(s - total0) / total0
            if d > max_drift:
                max_drift = d
    return max_drift, bad


def apply_trades(money, lambdas, i, j, eps, check_nonneg: bool = False) -> float:
    """Apply a fixed trade stream in place; returns the max relative money drift."""
    money = np.asarray(money)
    if money.dtype != np.float64 or not money.flags.writeable:
        raise InvalidParameterError("money must be a writeable float64 array")
    i = np.ascontiguousarray(i, dtype=np.int64)
    j = np.ascontiguousarray(j, dtype=np.int64)
    eps = np.ascontiguousarray(eps, dtype=np.float64)
    if np.any(i == j):
        raise InvalidParameterError("a trade needs two distinct agents")
    total0 = float(money.sum())
    drift, bad = _trade_kernel(money, np.asarray(lambdas, dtype=np.float64), i, j, eps,
                               total0, CHECK_EVERY, 0, check_nonneg)
    if bad >= 0:
        raise AssertionError(f"negative money after trade {bad}")
    s = float(money.sum())
    return max(drift, abs(s - total0) / total0 if total0 else 0.0)


class _Realization(NamedTuple):
    money: np.ndarray
    lambdas: np.ndarray
    groups: np.ndarray
    half_money: np.ndarray  # state after n_trades // 2 trades
    drift: float


def _realize(config: SimConfig, realization_index: int, check_nonneg=False) -> _Realization:
    lam_rng, trade_rng = _streams(config.seed, realization_index)
    lam, groups = assign_lambdas(config, lam_rng)
    n = config.n_agents
    money = np.full(n, config.initial_money, dtype=np.float64)
    total0 = float(money.sum())
    half_at = config.n_trades // 2
    half = money.copy()
    drift = 0.0
    done = 0
    while done < config.n_trades:
        stop = min(config.n_trades, done + CHUNK)
        if done < half_at:
            stop = min(stop, half_at)
        m = stop - done
        ii = trade_rng.integers(0, n, size=m)
        jj = trade_rng.integers(0, n - 1, size=m)
        jj += jj >= ii
        eps = trade_rng.random(m)
        d, bad = _trade_kernel(money, lam, ii, jj, eps, total0, CHECK_EVERY, done, check_nonneg)
        if bad >= 0:
            raise AssertionError(f"negative money after trade {bad} in realization {realization_index}")
        drift = max(drift, d)
        done = stop
        if done == half_at:
            half = money.copy()
    drift = max(drift, abs(float(money.sum()) - total0) / total0)
    return _Realization(money, lam, groups, half, drift)


def run_realization(config: SimConfig, realization_index: int, check_nonneg: bool = False):
    """Final ``(money, lambdas, groups)`` arrays of one realization."""
    r = _realize(config, realization_index, check_nonneg)
    return r.money, r.lambdas, r.groups


# --------------------------------------------------------------------------
# histograms


def log_edges(mean_money: float, bins_per_decade: int = BINS_PER_DECADE, decades: int = DECADES):
    k = np.arange(-decades * bins_per_decade, decades * bins_per_decade + 1)
    return mean_money * 10.0 ** (k / bins_per_decade)


@dataclass
class BinnedDistribution:
    """Log-binned counts; masses and CCDF are relative to ``population``."""

    edges: np.ndarray
    counts: np.ndarray
    underflow: int
    overflow: int
    population: int
    group: str

    @classmethod
    def from_values(cls, values, edges, population, group):
        counts, _ = np.histogram(values, bins=edges)
        under = int(np.count_nonzero(values < edges[0]))
        over = int(np.count_nonzero(values >= edges[-1]))
        # np.histogram closes the last bin on the right
        if over:
            counts[-1] -= np.count_nonzero(values == edges[-1])
        return cls(edges, counts.astype(np.int64), under, over, int(population), group)

    @property
    def total(self) -> int:
        return int(self.counts.sum()) + self.underflow + self.overflow

    @property
    def mass(self) -> np.ndarray:
        return self.counts / self.population

    @property
    def density(self) -> np.ndarray:
        return self.mass / np.diff(self.edges)

    @property
    def ccdf(self) -> np.ndarray:
        """Fraction of the population at or above each left edge."""
        suffix = np.cumsum(self.counts[::-1])[::-1] + self.overflow
        return suffix / self.population

    def ccdf_within(self) -> np.ndarray:
        """CCDF normalized by this group's own size."""
        return self.ccdf * self.population / max(self.total, 1)

    def mode(self) -> float:
        """Geometric center of the bin with the largest density."""
        k = int(np.argmax(self.density))
        return float(math.sqrt(self.edges[k] * self.edges[k + 1]))


class LambdaProfile(NamedTuple):
    edges: np.ndarray
    centers: np.ndarray
    shares: np.ndarray
    counts: np.ndarray


def income_by_lambda(lambdas, money, groups=None, n_bins: int = 20) -> LambdaProfile:
    """Share of group-T income held by agents in each equal-width lambda bin."""
    lambdas = np.asarray(lambdas, dtype=float)
    money = np.asarray(money, dtype=float)
    if groups is not None:
        sel = np.asarray(groups) == GROUP_T
        lambdas, money = lambdas[sel], money[sel]
    if lambdas.size == 0:
        raise EmptyGroupError("no group-T agents to profile")
    total = money.sum()
    if not total > 0:
        raise EmptyGroupError("group T holds no money")
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    idx = np.minimum((lambdas * n_bins).astype(np.int64), n_bins - 1)
    sums = np.bincount(idx, weights=money, minlength=n_bins)
    counts = np.bincount(idx, minlength=n_bins)
    return LambdaProfile(edges, 0.5 * (edges[:-1] + edges[1:]), sums / total, counts)


class TailFit(NamedTuple):
    slope: float
    intercept: float
    r2: float
    x_lo: float
    x_hi: float
    n_points: int


def ccdf_tail_slope(values, edges=None, min_above: int = 10, decades: float = 1.0) -> TailFit:
    """Least-squares slope of log10 CCDF against log10 income over the top of the sample.

    The window ends at the highest edge with at least ``min_above`` values at
    or above it and spans ``decades`` decades downward.  The CCDF is evaluated
    at every edge inside the window.
    """
    v = np.sort(np.asarray(values, dtype=float))
    if v.size < min_above:
        raise EmptyGroupError(f"need at least {min_above} values for a tail fit")
    if edges is None:
        edges = log_edges(float(v.mean()))
    edges = np.asarray(edges, dtype=float)
    above = v.size - np.searchsorted(v, edges, side="left")
    ok = np.flatnonzero(above >= min_above)
    if ok.size == 0:
        raise EmptyGroupError("no edge has enough values above it")
    x_hi = edges[ok[-1]]
    x_lo = x_hi / 10.0**decades
    sel = (edges >= x_lo * (1 - 1e-12)) & (edges <= x_hi) & (above > 0)
    if np.count_nonzero(sel) < 3:
        raise EmptyGroupError("tail window holds fewer than three points")
    lx = np.log10(edges[sel])
    ly = np.log10(above[sel] / v.size)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    r2 = 1.0 - float(resid @ resid) / float(((ly - ly.mean()) ** 2).sum())
    return TailFit(float(slope), float(intercept), r2, float(x_lo), float(x_hi), int(sel.sum()))


def _ks_between(a: BinnedDistribution, b: BinnedDistribution) -> float:
    return float(np.max(np.abs(a.ccdf_within() - b.ccdf_within())))


@dataclass
class SimResult:
    config: SimConfig
    hist_total: BinnedDistribution
    hist_B: BinnedDistribution
    hist_T: BinnedDistribution
    lambda_profile: LambdaProfile | None
    realization_count: int
    mean_money: float
    conservation_drift: float
    convergence_ks: float
    runtime_s: float
    money: np.ndarray = field(repr=False)
    lambdas: np.ndarray = field(repr=False)
    groups: np.ndarray = field(repr=False)

    def summary(self) -> dict:
        return {
            "realization_count": self.realization_count,
            "n_agents": self.config.n_agents,
            "n_B": int(np.count_nonzero(self.groups == GROUP_B)) // self.realization_count,
            "n_T": int(np.count_nonzero(self.groups == GROUP_T)) // self.realization_count,
            "mean_money": self.mean_money,
            "conservation_drift": self.conservation_drift,
            "convergence_ks": self.convergence_ks,
            "convergence_ok": self.convergence_ks < 0.01,
            "mode_total": self.hist_total.mode(),
            "runtime_s": self.runtime_s,
        }


def worker_count() -> int:
    env = os.environ.get("ECONOKIN_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise InvalidParameterError(f"ECONOKIN_THREADS must be an integer, got {env!r}") from exc
        return max(1, n)
    return os.cpu_count() or 1


def run_ensemble(config: SimConfig, workers: int | None = None) -> SimResult:
    """Run ``n_realizations`` independent realizations and merge them.

    Realizations are merged in index order, so the result does not depend on
    the number of worker threads.
    """
    t0 = time.perf_counter()
    workers = worker_count() if workers is None else max(1, int(workers))
    idx = range(config.n_realizations)
    if workers == 1:
        runs = [_realize(config, k) for k in idx]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(lambda k: _realize(config, k), idx))

    money = np.concatenate([r.money for r in runs])
    half = np.concatenate([r.half_money for r in runs])
    lambdas = np.concatenate([r.lambdas for r in runs])
    groups = np.concatenate([r.groups for r in runs])
    population = money.size
    edges = log_edges(config.initial_money)

    def binned(values, sel, name):
        return BinnedDistribution.from_values(values[sel], edges, population, name)

    everyone = np.ones(population, dtype=bool)
    is_T = groups == GROUP_T
    hist_total = binned(money, everyone, "total")
    half_total = binned(half, everyone, "total")
    profile = income_by_lambda(lambdas, money, groups, config.lambda_bins) if is_T.any() else None
    return SimResult(
        config=config,
        hist_total=hist_total,
        hist_B=binned(money, ~is_T, "B"),
        hist_T=binned(money, is_T, "T"),
        lambda_profile=profile,
        realization_count=len(runs),
        mean_money=float(money.mean()),
        conservation_drift=max(r.drift for r in runs),
        convergence_ks=_ks_between(hist_total, half_total),
        runtime_s=time.perf_counter() - t0,
        money=money,
        lambdas=lambdas,
        groups=groups,
    )

"""Inequality metrics, income stratification and multi-group money flow.

Deciles are population (headcount) deciles: the decile ratio compares the
income held by the richest 10% of agents with that held by the poorest 10%.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate, optimize

from .distributions import (
    DistSpec,
    GammaMixParams,
    MixtureModel,
    TsallisParams,
    ccdf,
    cdf,
    dist_mean,
    partial_moment,
    quad_moment,
    total_mass,
)
from .errors import DegenerateInputError, InvalidParameterError, QuadratureError

__all__ = [
    "ZeroShareError",
    "gini",
    "gini_pairwise",
    "lorenz",
    "decile_ratio",
    "StratumRecord",
    "StratificationReport",
    "stratify",
    "GroupSpec",
    "group_from_spec",
    "FlowReport",
    "equilibrium_beta",
    "money_flow",
]

BOTTOM, TOP = 0.1, 0.9


class ZeroShareError(DegenerateInputError, ZeroDivisionError):
    pass


def _is_spec(x) -> bool:
    return isinstance(x, (TsallisParams, GammaMixParams, MixtureModel))


def _incomes(values) -> np.ndarray:
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise DegenerateInputError("no incomes given")
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise DegenerateInputError("incomes must be finite and non-negative")
    if not x.sum() > 0:
        raise DegenerateInputError("all incomes are zero")
    return x


def gini_pairwise(incomes) -> float:
    """O(N^2) mean absolute difference form; kept as a test oracle."""
    x = _incomes(incomes)
    return float(np.abs(x[:, None] - x[None, :]).sum() / (2.0 * x.size**2 * x.mean()))


def _spec_gini(spec: DistSpec) -> float:
    mass = total_mass(spec)
    mu = dist_mean(spec)
    F = lambda t: cdf(spec, t) / mass
    Q = lambda t: ccdf(spec, t) / mass
    # integrate F(1 - F) in log x up to a cut where the tail is negligible
    hi = mu
    while Q(hi) > 1e-13:
        hi *= 10.0
    lo = mu
    while F(lo) > 1e-13:
        lo /= 10.0
    g = lambda s: math.exp(s) * F(math.exp(s)) * Q(math.exp(s))
    edges = np.arange(math.log(lo), math.log(hi) + math.log(10), math.log(10))
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, err = integrate.quad(g, a, b, epsabs=0.0, epsrel=1e-11, limit=200)
        if err > 1e-8 * max(abs(val), 1e-300) and err > 1e-14:
            raise QuadratureError("Lorenz integral did not converge")
        total += val
    # remainder beyond the cut: the integral of Q is the shifted first moment
    x_cut = float(np.exp(edges[-1]))
    total += partial_moment(spec, x_cut, order=1) / mass - x_cut * Q(x_cut)
    return total / mu


def gini(data) -> float:
    """Gini coefficient of a sample of incomes or of a distribution spec."""
    if _is_spec(data):
        return _spec_gini(data)
    x = np.sort(_incomes(data))
    n = x.size
    ranks = 2.0 * np.arange(1, n + 1) - n - 1
    return float(max(np.dot(ranks, x) / (n * x.sum()), 0.0))


def lorenz(incomes, p):
    """Piecewise-linear Lorenz curve of a sample at population fractions ``p``."""
    x = np.sort(_incomes(incomes))
    cum = np.concatenate([[0.0], np.cumsum(x)])
    return np.interp(p, np.linspace(0.0, 1.0, x.size + 1), cum / cum[-1])


def _spec_quantile(spec: DistSpec, p: float) -> float:
    mass = total_mass(spec)
    f = lambda t: cdf(spec, t) / mass - p
    hi = max(dist_mean(spec), 1e-300)
    while f(hi) < 0:
        hi *= 2.0
    lo = hi
    while f(lo) > 0:
        lo /= 2.0
    return optimize.brentq(f, lo, hi, xtol=1e-300, rtol=1e-14, maxiter=500)


def decile_ratio(data) -> float:
    """Income share of the top population decile over that of the bottom decile."""
    if _is_spec(data):
        x_lo = _spec_quantile(data, BOTTOM)
        x_hi = _spec_quantile(data, TOP)
        bottom = partial_moment(data, 0.0, x_lo)
        top = partial_moment(data, x_hi)
    else:
        bottom, top_cum = lorenz(data, [BOTTOM, TOP])
        top = 1.0 - top_cum
    if not bottom > 0:
        raise ZeroShareError("the bottom decile holds no income")
    return float(top / bottom)


# --------------------------------------------------------------------------
# stratification


@dataclass(frozen=True)
class StratumRecord:
    population: float  # fraction of all agents
    money_share: float  # fraction of all income
    mean: float  # per-agent income; nan when the stratum is empty


@dataclass(frozen=True)
class StratificationReport:
    threshold: float
    strata: dict  # "B_NP", "B_P", "T_NP", "T_P" -> StratumRecord
    mean_B: float
    mean_T: float
    population_ratio_BNP_TNP: float
    mean_ratio_TNP_B: float
    T_fraction_NP: float

    def to_dict(self) -> dict:
        def clean(v):
            return None if isinstance(v, float) and math.isnan(v) else v

        return {
            "threshold": self.threshold,
            "strata": {k: {f: clean(getattr(r, f)) for f in ("population", "money_share", "mean")}
                       for k, r in self.strata.items()},
            "mean_B": self.mean_B,
            "mean_T": self.mean_T,
            "population_ratio_BNP_TNP": clean(self.population_ratio_BNP_TNP),
            "mean_ratio_TNP_B": clean(self.mean_ratio_TNP_B),
            "T_fraction_NP": self.T_fraction_NP,
        }

    def rows(self) -> list:
        return [{"stratum": k, "population": r.population, "money_share": r.money_share, "mean": r.mean}
                for k, r in self.strata.items()]


def _ratio(a, b):
    return a / b if b > 0 else math.nan


def stratify(model: MixtureModel, threshold: float = 4.0) -> StratificationReport:
    """Population, income share and mean of each component below/above ``threshold``.

    NP strata are ``[0, threshold)``, P strata ``[threshold, inf)``.  Integrals
    are adaptive quadrature; fractions are taken relative to the model's total
    mass, so a slightly unnormalized model still closes to one.
    """
    if not isinstance(model, MixtureModel):
        raise InvalidParameterError("stratify needs a MixtureModel")
    if not (threshold > 0 and math.isfinite(threshold)):
        raise InvalidParameterError("threshold must be positive and finite")
    parts = {}
    for name, w, comp in (("B", model.w_B, model.B), ("T", model.w_T, model.T)):
        for region, lo, hi in (("NP", 0.0, threshold), ("P", threshold, math.inf)):
            if w == 0:
                parts[f"{name}_{region}"] = (0.0, 0.0)
                continue
            pop = w * quad_moment(comp, lo, hi, order=0)
            money = w * quad_moment(comp, lo, hi, order=1)
            parts[f"{name}_{region}"] = (pop, money)
    pop_total = sum(p for p, _ in parts.values())
    money_total = sum(m for _, m in parts.values())
    strata = {k: StratumRecord(p / pop_total, m / money_total, _ratio(m, p)) for k, (p, m) in parts.items()}

    def group_mean(g):
        p = parts[f"{g}_NP"][0] + parts[f"{g}_P"][0]
        m = parts[f"{g}_NP"][1] + parts[f"{g}_P"][1]
        return _ratio(m, p), p

    mean_B, _ = group_mean("B")
    mean_T, pop_T = group_mean("T")
    return StratificationReport(
        threshold=float(threshold),
        strata=strata,
        mean_B=mean_B,
        mean_T=mean_T,
        population_ratio_BNP_TNP=_ratio(parts["B_NP"][0], parts["T_NP"][0]),
        mean_ratio_TNP_B=_ratio(strata["T_NP"].mean, mean_B),
        T_fraction_NP=_ratio(parts["T_NP"][0], pop_T),
    )


# --------------------------------------------------------------------------
# equilibrium money flow


@dataclass(frozen=True)
class GroupSpec:
    """Weight ``c``, degeneracy exponent ``n``, entropic index ``q``, scale ``beta``."""

    c: float
    n: float
    q: float
    beta: float

    def __post_init__(self):
        if not 0.0 <= self.c <= 1.0:
            raise InvalidParameterError(f"group weight must lie in [0, 1], got {self.c}")
        if not self.n > -1:
            raise InvalidParameterError(f"n must exceed -1, got {self.n}")
        if not 1.0 <= self.q < 2.0:
            raise InvalidParameterError(f"q must lie in [1, 2), got {self.q}")
        if not self.beta > 0:
            raise InvalidParameterError(f"beta must be positive, got {self.beta}")
        if not self.k > 0:
            raise InvalidParameterError("group mean diverges: need n + 2 < 1/(q - 1)")

    @property
    def alpha(self) -> float:
        return self.n + 1.0

    @property
    def k(self) -> float:
        return 1.0 + (self.n + 2.0) * (1.0 - self.q)

    @property
    def weight(self) -> float:
        """alpha * k, the factor multiplying beta in the group's mean income."""
        return self.alpha * self.k

    @property
    def mean(self) -> float:
        """Group mean as booked by the flow algebra, ``alpha * k * beta``.

        Exact for Gamma groups (q = 1).  For q > 1 the exact mean of the
        density is ``alpha * beta / k``; see ``distributions.dist_mean``.
        """
        return self.weight * self.beta


def group_from_spec(c: float, spec) -> GroupSpec:
    """GroupSpec for a single Gamma term or a Tsallis component."""
    if isinstance(spec, TsallisParams):
        return GroupSpec(c, spec.n, spec.q, 1.0 / spec.beta_star)
    if isinstance(spec, GammaMixParams) and len(spec.terms) == 1:
        return GroupSpec(c, spec.terms[0].exponent, 1.0, spec.beta)
    raise InvalidParameterError("a group is a single Gamma term or a Tsallis component")


def _check_groups(groups: Sequence[GroupSpec]):
    if not groups:
        raise InvalidParameterError("no groups given")
    total = math.fsum(g.c for g in groups)
    if abs(total - 1.0) > 1e-12:
        raise InvalidParameterError(f"group weights must sum to 1, got {total!r}")


def equilibrium_beta(groups: Sequence[GroupSpec]) -> float:
    """Common scale reached when total money is conserved."""
    _check_groups(groups)
    den = math.fsum(g.c * g.weight for g in groups)
    if den == 0:
        raise ZeroShareError("sum of c * alpha * k vanishes")
    return math.fsum(g.c * g.weight * g.beta for g in groups) / den


@dataclass(frozen=True)
class FlowReport:
    beta_final: float
    delta: tuple  # change of mean income per group
    initial_mean: tuple
    final_mean: tuple
    conservation_residual: float  # sum of c_j * delta_j

    def to_dict(self) -> dict:
        return {"beta_final": self.beta_final, "delta": list(self.delta),
                "initial_mean": list(self.initial_mean), "final_mean": list(self.final_mean),
                "conservation_residual": self.conservation_residual}


def money_flow(groups: Sequence[GroupSpec]) -> FlowReport:
    beta_f = equilibrium_beta(groups)
    delta = tuple(g.weight * (beta_f - g.beta) for g in groups)
    return FlowReport(
        beta_final=beta_f,
        delta=delta,
        initial_mean=tuple(g.mean for g in groups),
        final_mean=tuple(g.weight * beta_f for g in groups),
        conservation_residual=math.fsum(g.c * d for g, d in zip(groups, delta)),
    )

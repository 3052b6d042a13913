"""Least-squares fitting of Gamma-mixture, Tsallis and mixture models to binned data.

Models are fit in a normalized parameterization (component weights and shape
parameters only, every component integrating to one), so the fitted spec is
normalized by construction.  Model CCDFs come from the closed-form integrals
of the densities; bin densities are bin averages, ``(Q(lo) - Q(hi)) / width``.

The optimizer is a projected Levenberg-Marquardt iteration with a central
difference Jacobian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from .distributions import (
    DistSpec,
    GammaMixParams,
    GammaTerm,
    MixtureModel,
    TsallisParams,
    ccdf,
    normalize,
    rescale,
    total_mass,
    to_dict,
)
from .errors import BoundViolationError, DegenerateInputError, FitError, SingularJacobianError
from .ingest import EmpiricalDistribution

__all__ = [
    "FitOptions",
    "FitResult",
    "ModelFamily",
    "family_of",
    "fit",
    "goodness",
    "levenberg_marquardt",
    "LMResult",
]

TARGETS = ("ccdf", "pdf", "joint")


@dataclass(frozen=True)
class FitOptions:
    target: str = "ccdf"
    residual_space: str = "log"
    refine_pdf: bool = True  # after a ccdf fit, refine on the bin densities
    max_iterations: int = 200
    tolerance: float = 1e-6  # scaled projected gradient, see levenberg_marquardt
    bounds: dict = field(default_factory=dict)  # name -> (lo, hi), overrides defaults
    weights: np.ndarray | None = None  # explicit per-bin (pdf) / per-edge (ccdf) weights
    weighting: str = "poisson"  # "poisson" or "uniform"; ignored when weights are given
    fixed: dict = field(default_factory=dict)  # name -> value held constant during the fit
    min_count: float = 10.0  # bins or tails with fewer samples are left out
    n_starts: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.target not in TARGETS:
            raise ValueError(f"target must be one of {TARGETS}, got {self.target!r}")
        if self.residual_space not in ("linear", "log"):
            raise ValueError(f"residual_space must be 'linear' or 'log', got {self.residual_space!r}")
        if self.weighting not in ("poisson", "uniform"):
            raise ValueError(f"weighting must be 'poisson' or 'uniform', got {self.weighting!r}")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1 or self.n_starts < 1:
            raise ValueError("max_iterations and n_starts must be positive")
        for name, (lo, hi) in self.bounds.items():
            if not lo < hi:
                raise ValueError(f"bounds for {name} are inconsistent: {lo} >= {hi}")

    def to_dict(self) -> dict:
        return {"target": self.target, "residual_space": self.residual_space, "refine_pdf": self.refine_pdf,
                "max_iterations": self.max_iterations, "tolerance": self.tolerance,
                "bounds": {k: list(v) for k, v in self.bounds.items()},
                "weights": None if self.weights is None else list(map(float, self.weights)),
                "weighting": self.weighting, "fixed": dict(self.fixed),
                "min_count": self.min_count, "n_starts": self.n_starts, "seed": self.seed}


# --------------------------------------------------------------------------
# model families in normalized coordinates


def _gamma_q(a, beta, x):
    return special.gammaincc(a + 1.0, x / beta)


def _tsallis_q(n, s, b, x):
    # normalized mass above x of x**n (1 + b x)**(-(n + 1 + s))
    return special.betainc(s, n + 1.0, 1.0 / (1.0 + b * x))


@dataclass(frozen=True)
class ModelFamily:
    """Maps a parameter vector to normalized CCDFs and to a DistSpec."""

    kind: str  # "gamma_mix", "tsallis" or "mixture"
    n_terms: int = 1

    @property
    def names(self) -> tuple:
        if self.kind == "tsallis":
            return ("n", "s", "rate")
        gamma = self._gamma_names()
        if self.kind == "gamma_mix":
            return gamma
        return ("w_B",) + gamma + ("n", "s", "rate")

    def _gamma_names(self) -> tuple:
        fracs = tuple(f"f{k}" for k in range(1, self.n_terms))
        exps = tuple(f"a{k}" for k in range(self.n_terms))
        return fracs + exps + ("beta",)

    def _split_gamma(self, p):
        k = self.n_terms
        fr = p[: k - 1]
        weights, left = [], 1.0
        for f in fr:
            weights.append(left * f)
            left *= 1.0 - f
        weights.append(left)
        return np.array(weights), p[k - 1: 2 * k - 1], p[2 * k - 1]

    def canonical(self, p) -> np.ndarray:
        """Same model with Gamma terms ordered by increasing exponent."""
        p = np.array(p, dtype=float)
        if self.kind == "tsallis" or self.n_terms == 1:
            return p
        off = 1 if self.kind == "mixture" else 0
        k = self.n_terms
        w, a, beta = self._split_gamma(p[off: off + 2 * k])
        order = np.argsort(a, kind="stable")
        w, a = w[order], a[order]
        fr, left = [], 1.0
        for wk in w[:-1]:
            fr.append(min(max(wk / left, 0.0), 1.0) if left > 0 else 0.0)
            left -= wk
        p[off: off + 2 * k] = np.concatenate([fr, a, [beta]])
        return p

    def ccdf(self, p, x):
        p = np.asarray(p, dtype=float)
        if self.kind == "tsallis":
            return _tsallis_q(p[0], p[1], p[2], x)
        if self.kind == "gamma_mix":
            w, a, beta = self._split_gamma(p)
            return sum(wk * _gamma_q(ak, beta, x) for wk, ak in zip(w, a))
        m = 2 * self.n_terms
        w, a, beta = self._split_gamma(p[1: 1 + m])
        qb = sum(wk * _gamma_q(ak, beta, x) for wk, ak in zip(w, a))
        return p[0] * qb + (1.0 - p[0]) * _tsallis_q(p[1 + m], p[2 + m], p[3 + m], x)

    def _tsallis_spec(self, n, s, b):
        return normalize(TsallisParams.from_power_form(1.0, n + 1.0 + s, b, n))

    def _gamma_spec(self, p):
        w, a, beta = self._split_gamma(p)
        terms = []
        for wk, ak in zip(w, a):
            # coefficient of a unit-mass Gamma term scaled by its weight
            c = max(wk, 1e-300) / math.exp(special.gammaln(ak + 1) + (ak + 1) * math.log(beta))
            terms.append(GammaTerm(c, float(ak)))
        return GammaMixParams(tuple(terms), float(beta))

    def to_spec(self, p) -> DistSpec:
        p = np.asarray(p, dtype=float)
        if self.kind == "tsallis":
            return self._tsallis_spec(*p)
        if self.kind == "gamma_mix":
            return self._gamma_spec(p)
        m = 2 * self.n_terms
        wB = float(p[0])
        return MixtureModel(wB, self._gamma_spec(p[1: 1 + m]), 1.0 - wB, self._tsallis_spec(*p[1 + m:]))

    def _gamma_vector(self, g: GammaMixParams):
        if len(g.terms) != self.n_terms:
            raise FitError(f"init has {len(g.terms)} Gamma terms, family expects {self.n_terms}")
        masses = np.array([t.coeff * math.exp(special.gammaln(t.exponent + 1) + (t.exponent + 1) * math.log(g.beta))
                           for t in g.terms])
        w = masses / masses.sum()
        fr, left = [], 1.0
        for wk in w[:-1]:
            fr.append(wk / left if left > 0 else 0.0)
            left -= wk
        return fr + [t.exponent for t in g.terms] + [g.beta]

    def from_spec(self, spec: DistSpec) -> np.ndarray:
        if self.kind == "tsallis":
            if not isinstance(spec, TsallisParams) or spec.q == 1:
                raise FitError("tsallis family needs a TsallisParams init with q > 1")
            return np.array([spec.n, spec.power - spec.n - 1.0, spec.rate])
        if self.kind == "gamma_mix":
            if not isinstance(spec, GammaMixParams):
                raise FitError("gamma_mix family needs a GammaMixParams init")
            return np.array(self._gamma_vector(spec), dtype=float)
        if not isinstance(spec, MixtureModel) or spec.T.q == 1:
            raise FitError("mixture family needs a MixtureModel init with q > 1")
        T = spec.T
        return np.array([spec.w_B] + self._gamma_vector(spec.B) + [T.n, T.power - T.n - 1.0, T.rate])

    def default_bounds(self, scale: float) -> dict:
        b = {"w_B": (0.0, 1.0), "n": (-0.95, 20.0), "s": (0.05, 50.0), "rate": (1e-8 / scale, 1e8 / scale),
             "beta": (1e-6 * scale, 1e6 * scale)}
        for k in range(self.n_terms):
            b[f"a{k}"] = (-0.95, 30.0)
        for k in range(1, self.n_terms):
            b[f"f{k}"] = (0.0, 1.0)
        return b

    def default_init(self, mean: float) -> DistSpec:
        """w_B = 0.9, q = 1.3, exponents around 1; scales chosen to match ``mean``."""
        q, n = 1.3, 1.0
        # mean of x**n (1 - (1-q) beta* x)**(1/(1-q)) is (n+1) / (beta* [1 + (n+2)(1-q)])
        beta_star = (n + 1.0) / (mean * (1.0 + (n + 2.0) * (1.0 - q)))
        T = TsallisParams(1.0, q, beta_star, n)
        if self.n_terms == 1:
            exps = [1.0]
        else:
            exps = list(np.linspace(0.5, 1.5, self.n_terms))
        beta = mean / (float(np.mean(exps)) + 1.0)  # mean = (exponent + 1) beta
        G = GammaMixParams(tuple(GammaTerm(1.0, e) for e in exps), beta)
        if self.kind == "tsallis":
            return normalize(T)
        if self.kind == "gamma_mix":
            return normalize(G)
        return normalize(MixtureModel(0.9, G, 0.1, T))


def family_of(template) -> ModelFamily:
    if isinstance(template, ModelFamily):
        return template
    if isinstance(template, str):
        name, _, terms = template.partition(":")
        if name in ("gamma", "gamma_mix"):
            return ModelFamily("gamma_mix", int(terms or 1))
        if name == "tsallis":
            return ModelFamily("tsallis")
        if name == "mixture":
            return ModelFamily("mixture", int(terms or 2))
        raise ValueError(f"unknown family {template!r}")
    if isinstance(template, TsallisParams):
        return ModelFamily("tsallis")
    if isinstance(template, GammaMixParams):
        return ModelFamily("gamma_mix", len(template.terms))
    if isinstance(template, MixtureModel):
        return ModelFamily("mixture", len(template.B.terms))
    raise ValueError(f"cannot infer a model family from {template!r}")


# --------------------------------------------------------------------------
# optimizer


@dataclass
class LMResult:
    x: np.ndarray
    cost: float
    residuals: np.ndarray
    jacobian: np.ndarray
    converged: bool
    iterations: int
    gradient_norm: float
    history: list  # cost after every accepted step, starting with the initial cost
    message: str = ""


def _jacobian(fun, x, f0, lo, hi, floor, rel_step=1e-6):
    J = np.empty((f0.size, x.size))
    for k in range(x.size):
        h = rel_step * max(abs(x[k]), floor[k])
        xp, xm = x.copy(), x.copy()
        up, dn = x[k] + h <= hi[k], x[k] - h >= lo[k]
        if up and dn:
            xp[k] += h
            xm[k] -= h
            J[:, k] = (fun(xp) - fun(xm)) / (2 * h)
        elif up:
            xp[k] += h
            J[:, k] = (fun(xp) - f0) / h
        else:
            xm[k] -= h
            J[:, k] = (f0 - fun(xm)) / h
    return J


def _projected_gradient(g, x, lo, hi):
    pg = g.copy()
    pg[(x <= lo) & (g > 0)] = 0.0
    pg[(x >= hi) & (g < 0)] = 0.0
    return pg


def _scaled_gradient(J, r, x, lo, hi) -> float:
    """Largest |cos| between the residual vector and a free Jacobian column."""
    pg = _projected_gradient(J.T @ r, x, lo, hi)
    norms = np.linalg.norm(J, axis=0) * np.linalg.norm(r)
    with np.errstate(divide="ignore", invalid="ignore"):
        cos = np.where(norms > 0, np.abs(pg) / norms, 0.0)
    return float(np.max(cos)) if cos.size else 0.0


def levenberg_marquardt(fun: Callable, x0, lo, hi, max_iterations=200, tolerance=1e-6,
                        project: Callable | None = None, step_floor=None) -> LMResult:
    """Minimize ``0.5 * |fun(x)|**2`` subject to ``lo <= x <= hi``.

    Trial points are projected back onto the box (and through ``project`` for
    any extra feasibility rule); a step is accepted only if it lowers the cost.
    Jacobian columns use central differences with step
    ``1e-6 * max(|x_k|, step_floor_k)`` (one-sided at an active bound).
    Convergence is declared when the scale-free gradient measure (the largest
    cosine between the residual vector and a free Jacobian column) falls below
    ``tolerance``.
    """
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    floor = np.full(lo.size, 1e-3) if step_floor is None else np.asarray(step_floor, float)
    proj = lambda v: (project(np.clip(v, lo, hi)) if project else np.clip(v, lo, hi))
    x = proj(np.asarray(x0, dtype=float))
    r = fun(x)
    if not np.all(np.isfinite(r)):
        raise FitError("residuals are not finite at the initial point")
    cost = 0.5 * float(r @ r)
    history = [cost]
    damping = 1e-3
    message = "max iterations reached"
    J = _jacobian(fun, x, r, lo, hi, floor)
    if not np.all(np.isfinite(J)) or not np.any(J):
        raise SingularJacobianError("Jacobian is zero or non-finite at the initial point")
    it = 0
    for it in range(1, max_iterations + 1):
        g = J.T @ r
        if _scaled_gradient(J, r, x, lo, hi) < tolerance:
            message = "projected gradient below tolerance"
            it -= 1
            break
        A = J.T @ J
        d = np.diag(A).copy()
        d = np.maximum(d, 1e-12 * max(d.max(), 1e-300))
        accepted = False
        while damping < 1e12:
            try:
                step = np.linalg.solve(A + damping * np.diag(d), -g)
            except np.linalg.LinAlgError:
                damping *= 4.0
                continue
            x_new = proj(x + step)
            r_new = fun(x_new)
            c_new = 0.5 * float(r_new @ r_new) if np.all(np.isfinite(r_new)) else math.inf
            if c_new < cost:
                accepted = True
                break
            damping *= 4.0
        if not accepted:
            message = "no descent step found"
            break
        small = abs(cost - c_new) <= 1e-15 * max(cost, 1e-300) and np.allclose(x_new, x, rtol=1e-13, atol=0)
        x, r, cost = x_new, r_new, c_new
        history.append(cost)
        damping = max(damping / 3.0, 1e-12)
        J = _jacobian(fun, x, r, lo, hi, floor)
        if small:
            message = "step stagnated"
            break
    gnorm = _scaled_gradient(J, r, x, lo, hi)
    return LMResult(x, cost, r, J, gnorm < tolerance, it, gnorm, history, message)


# --------------------------------------------------------------------------
# objectives


def _edges_and_weights(emp: EmpiricalDistribution, target: str, opts: FitOptions):
    """Residual sites: ('ccdf', edge indices) and/or ('pdf', bin indices)."""
    sites = {}
    n = emp.total_count if emp.total_count else None
    if target in ("ccdf", "joint"):
        enough = emp.ccdf[:-1] > 0
        if n:
            enough &= emp.counts_above[:-1] >= opts.min_count
        sites["ccdf"] = np.nonzero(enough)[0]
    if target in ("pdf", "joint"):
        enough = emp.density > 0
        if n:
            enough &= emp.counts >= opts.min_count
        sites["pdf"] = np.nonzero(enough)[0]
    return sites


def _make_residual(family: ModelFamily, emp: EmpiricalDistribution, target: str, opts: FitOptions):
    sites = _edges_and_weights(emp, target, opts)
    edges = emp.bin_edges
    log = opts.residual_space == "log"
    parts = []
    n = emp.total_count
    poisson = opts.weighting == "poisson" and n > 0
    if "ccdf" in sites:
        k = sites["ccdf"]
        Q = emp.ccdf[k]
        if opts.weights is not None:
            w = np.asarray(opts.weights, float)[k]
        elif poisson:
            # sd of log Q_hat is about sqrt((1 - Q) / (n Q))
            sd = np.sqrt(np.maximum(1.0 - Q, 1.0 / n) / (n * Q))
            w = 1.0 / (sd if log else sd * Q)
        else:
            w = np.ones(k.size)
        parts.append(("ccdf", k, Q, w))
    if "pdf" in sites:
        k = sites["pdf"]
        if opts.weights is not None:
            w = np.asarray(opts.weights, float)[k]
        elif poisson:
            counts = emp.counts[k]
            w = np.sqrt(counts) if log else np.sqrt(counts) / emp.density[k]
        else:
            w = np.ones(k.size)
        parts.append(("pdf", k, emp.density[k], w))
    n_res = sum(p[1].size for p in parts)
    if n_res == 0:
        raise DegenerateInputError("no bins with enough data to fit")
    widths = emp.widths

    def residuals(p):
        Q = np.asarray(family.ccdf(p, edges), dtype=float)
        out = []
        for kind, k, obs, w in parts:
            if kind == "ccdf":
                model = Q[k]
            else:
                model = (Q[k] - Q[k + 1]) / widths[k]
            if log:
                with np.errstate(divide="ignore", invalid="ignore"):
                    res = np.log(np.maximum(model, 1e-300)) - np.log(obs)
            else:
                res = model - obs
            out.append(w * res)
        return np.concatenate(out)

    return residuals, n_res


def _feasible(family: ModelFamily):
    if family.kind == "gamma_mix":
        return None
    idx_n, idx_s = family.names.index("n"), family.names.index("s")

    def project(v):
        # q < 2 requires 1/(q-1) = n + 1 + s > 1
        if v[idx_n] + v[idx_s] <= 1e-3:
            v = v.copy()
            v[idx_s] = 1e-3 - v[idx_n]
        return v

    return project


# --------------------------------------------------------------------------
# public surface


@dataclass
class FitResult:
    model: DistSpec
    residual_norm: float
    std_errors: dict
    converged: bool
    iterations: int
    parameters: dict
    gradient_norm: float
    target: str
    initialization: dict
    starts: list  # per-start diagnostics
    best_start: int
    n_residuals: int
    history: dict  # objective values after each accepted step, per pass

    @property
    def tsallis_power(self) -> float | None:
        T = self.model.T if isinstance(self.model, MixtureModel) else self.model
        return T.power if isinstance(T, TsallisParams) else None

    def to_dict(self) -> dict:
        return {"model": to_dict(self.model), "residual_norm": self.residual_norm,
                "std_errors": self.std_errors, "converged": self.converged, "iterations": self.iterations,
                "parameters": self.parameters, "gradient_norm": self.gradient_norm, "target": self.target,
                "initialization": self.initialization, "starts": self.starts, "best_start": self.best_start,
                "n_residuals": self.n_residuals}


def _std_errors(J, cost, n_res):
    dof = max(n_res - J.shape[1], 1)
    A = J.T @ J
    try:
        cov = np.linalg.inv(A) * (2.0 * cost / dof)
        se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    except np.linalg.LinAlgError:
        se = np.full(J.shape[1], math.inf)
    return se


def _jitter(x0, names, lo, hi, rng, k):
    if k == 0:
        return x0.copy()
    x = x0.copy()
    for i, name in enumerate(names):
        if name in ("beta", "rate"):
            x[i] *= math.exp(rng.normal(0.0, 0.4))
        elif name in ("w_B",) or name.startswith("f"):
            x[i] += rng.normal(0.0, 0.05)
        else:
            x[i] += rng.normal(0.0, 0.4)
    return np.clip(x, lo, hi)


def fit(empirical: EmpiricalDistribution, family="mixture", init: DistSpec | None = None,
        options: FitOptions = FitOptions()) -> FitResult:
    """Fit a model family to a binned empirical distribution.

    ``family`` is a template spec, a ModelFamily or one of "gamma", "gamma:K",
    "tsallis", "mixture".  With target "ccdf" and ``refine_pdf`` every start's
    CCDF solution is refined on the bin densities, and the start with the lowest
    final residual wins (lowest start index on ties).  Parameters named in
    ``options.fixed`` are held at the given values.
    """
    fam = family_of(family)
    unit = empirical.mean()
    if not unit > 0:
        raise DegenerateInputError("empirical distribution has no positive mean")
    # work in units of the empirical mean; scales are mapped back at the end
    empirical = empirical.rescaled(1.0 / unit)
    init_spec = init if init is not None else rescale(fam.default_init(1.0), unit)
    x0 = fam.from_spec(rescale(init_spec, 1.0 / unit))
    bounds = fam.default_bounds(1.0)
    for name, (a, b) in options.bounds.items():
        if name == "beta":
            a, b = a / unit, b / unit
        elif name == "rate":
            a, b = a * unit, b * unit
        bounds[name] = (a, b)
    fixed = {n: (v / unit if n == "beta" else v * unit if n == "rate" else v) for n, v in options.fixed.items()}
    names = fam.names
    lo = np.array([bounds[n][0] for n in names], dtype=float)
    hi = np.array([bounds[n][1] for n in names], dtype=float)
    unknown = set(fixed) - set(names)
    if unknown:
        raise FitError(f"cannot fix unknown parameters {sorted(unknown)}; family has {names}")
    for name, value in fixed.items():
        x0[names.index(name)] = value
    bad = [n for n, v, a, b in zip(names, x0, lo, hi) if not a <= v <= b]
    if bad:
        raise BoundViolationError(f"initial parameters outside bounds: {bad}")
    free = np.array([n not in fixed for n in names])
    if not free.any():
        raise FitError("every parameter is fixed")
    free_names = tuple(n for n, f in zip(names, free) if f)
    to_user = np.array([unit if n == "beta" else 1.0 / unit if n == "rate" else 1.0 for n in names])

    def embed(v):
        full = x0.copy()
        full[free] = v
        return full

    feasible = _feasible(fam)
    project = None if feasible is None else (lambda v: feasible(embed(v))[free])
    flo, fhi = lo[free], hi[free]
    # scale parameters are strictly positive, so their steps can be purely relative
    step_floor = np.array([0.0 if n in ("beta", "rate") else 1e-3 for n in free_names])
    rng = np.random.default_rng(options.seed)

    def run(target, start):
        res, n_res = _make_residual(fam, empirical, target, options)
        out = levenberg_marquardt(lambda v: res(embed(v)), start, flo, fhi,
                                  options.max_iterations, options.tolerance, project, step_floor)
        return out, n_res

    refine = options.target == "ccdf" and options.refine_pdf
    starts, best, best_k, history = [], None, -1, {}
    for k in range(options.n_starts):
        xs = _jitter(x0[free], free_names, flo, fhi, rng, k)
        try:
            out, n_res = run(options.target, xs)
            trace = {options.target: list(out.history)}
            if refine:
                first = out
                out, n_res = run("pdf", first.x)
                out.iterations += first.iterations
                trace["pdf"] = list(out.history)
        except FitError as exc:
            starts.append({"start": k, "error": str(exc)})
            continue
        starts.append({"start": k, "init": dict(zip(free_names, map(float, xs * to_user[free]))),
                       "residual_norm": math.sqrt(2 * out.cost), "converged": out.converged,
                       "iterations": out.iterations})
        # strict comparison keeps the lowest index on ties
        if best is None or out.cost < best.cost:
            best, best_k, history, best_n_res = out, k, trace, n_res
    if best is None:
        raise FitError("every start failed: " + "; ".join(s.get("error", "") for s in starts))
    n_res = best_n_res
    target = "ccdf+pdf" if refine else options.target

    x_best = fam.canonical(embed(best.x))
    se = dict.fromkeys(names, 0.0)
    free_scale = to_user[free]
    if not np.array_equal(x_best, embed(best.x)):
        # term order changed; the Jacobian must follow the canonical parameters
        res, _ = _make_residual(fam, empirical, "pdf" if refine else options.target, options)
        xb = x_best[free]
        best.jacobian = _jacobian(lambda v: res(embed(v)), xb, res(embed(xb)), flo, fhi, step_floor)
    se.update(zip(free_names, map(float, _std_errors(best.jacobian, best.cost, n_res) * free_scale)))
    params = dict(zip(names, map(float, x_best * to_user)))
    if "s" in params:
        params["power"] = params["n"] + 1.0 + params["s"]
        params["q"] = 1.0 + 1.0 / params["power"]
    return FitResult(
        model=rescale(fam.to_spec(x_best), unit),
        residual_norm=math.sqrt(2.0 * best.cost),
        std_errors=se,
        converged=best.converged,
        iterations=best.iterations,
        parameters=params,
        gradient_norm=best.gradient_norm,
        target=target,
        initialization={"spec": to_dict(init_spec), "vector": dict(zip(names, map(float, x0 * to_user))),
                        "n_starts": options.n_starts, "seed": options.seed, "fixed": dict(options.fixed)},
        starts=starts,
        best_start=best_k,
        n_residuals=n_res,
        history=history,
    )


def goodness(model: DistSpec, empirical: EmpiricalDistribution, weights=None) -> dict:
    """KS distance, linear/log RMSE of bin densities and a per-bin residual table."""
    mass = total_mass(model)
    edges = empirical.bin_edges
    Q = np.asarray(ccdf(model, edges), dtype=float) / mass if mass > 0 else np.zeros(edges.size)
    model_density = (Q[:-1] - Q[1:]) / empirical.widths
    if not mass > 0 or not np.any(model_density > 0):
        raise DegenerateInputError("model carries no probability mass on the empirical support")
    w = np.ones(model_density.size) if weights is None else np.asarray(weights, dtype=float)
    obs = empirical.density
    lin = model_density - obs
    occupied = (obs > 0) & (model_density > 0)
    logres = np.full(obs.size, np.nan)
    logres[occupied] = np.log(model_density[occupied]) - np.log(obs[occupied])
    wsum = w.sum()
    rmse_lin = math.sqrt(float(np.sum(w * lin**2) / wsum))
    wl = w[occupied]
    rmse_log = math.sqrt(float(np.sum(wl * logres[occupied] ** 2) / wl.sum())) if wl.size else math.nan
    table = [{"edge_low": float(edges[k]), "edge_high": float(edges[k + 1]), "observed": float(obs[k]),
              "model": float(model_density[k]), "residual": float(lin[k]),
              "log_residual": None if np.isnan(logres[k]) else float(logres[k])}
             for k in range(obs.size)]
    return {"ks": float(np.max(np.abs(Q - empirical.ccdf))), "rmse_linear": rmse_lin, "rmse_log": rmse_log,
            "residuals": table}

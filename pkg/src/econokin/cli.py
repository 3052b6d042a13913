"""Command-line front end: simulate, ingest, fit, analyze, report.

Every command writes ``manifest_<command>.json`` into ``--out`` listing the
resolved configuration, inputs, outputs (with SHA-256 digests), seed, tool
version and wall-clock time.

Option values resolve in order: built-in defaults, then ``--config FILE``
(a JSON object keyed by option name), then explicit flags.

    econokin simulate --agents 1000 --frac-t 0.1 --seed 7 --out run
    econokin fit econokin/data/synthetic_usa2001_brackets.csv --family mixture --out run
    econokin analyze --model run/model.json --threshold 4 --out run
    econokin report run
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as _dt
import hashlib
import json
import math
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .distributions import MixtureModel, TsallisParams, ccdf, eval_pdf, from_dict, rescale, to_dict, total_mass
from .errors import EconokinError, ParseError
from .exchange import SimConfig, SimResult, run_ensemble, worker_count
from .fitting import FitOptions, fit, goodness
from .inequality import GroupSpec, decile_ratio, gini, money_flow, stratify
from .ingest import (
    BinningScheme,
    EmpiricalDistribution,
    histogram,
    parse_income_table,
    read_empirical,
    to_empirical,
    write_empirical,
)

__all__ = ["RunManifest", "main", "build_parser"]


class CLIError(EconokinError):
    pass


@dataclasses.dataclass
class RunManifest:
    command: str
    config: dict
    inputs: list
    outputs: list  # [{"path", "sha256", "bytes"}]
    seed: int | None
    version: str
    duration_s: float
    argv: list
    created_utc: str
    environment: dict

    def write(self, out_dir: Path) -> Path:
        path = out_dir / f"manifest_{self.command}.json"
        path.write_text(json.dumps(dataclasses.asdict(self), indent=2, default=_json_default))
        return path


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _dump_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=2, default=_json_default, allow_nan=False))
    return path


def _write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow(["" if v is None or (isinstance(v, float) and math.isnan(v)) else
                        repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return path


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# --------------------------------------------------------------------------
# option resolution


def _resolve(args, defaults: dict) -> dict:
    """defaults < config file < explicit flags, restricted to ``defaults``' keys."""
    cfg = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"config file is not valid JSON: {exc.msg}", row=exc.lineno, column=exc.colno) from None
        if not isinstance(cfg, dict):
            raise CLIError("config file must hold a JSON object")
        unknown = set(cfg) - set(defaults)
        if unknown:
            raise CLIError(f"unknown config keys for {args.command}: {sorted(unknown)}")
    resolved = dict(defaults)
    resolved.update(cfg)
    for key in defaults:
        v = getattr(args, key, None)
        if v is not None:
            resolved[key] = v
    return resolved


def _pairs(items, name, parse):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise CLIError(f"{name} entries look like NAME=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = parse(v)
    return out


def _parse_bounds(v):
    lo, _, hi = v.partition(":")
    return (float(lo), float(hi))


# --------------------------------------------------------------------------
# input loading


def _sidecar_metadata(path: Path) -> dict:
    side = path.with_suffix(".json")
    if side.exists() and side != path:
        try:
            return json.loads(side.read_text())
        except json.JSONDecodeError:
            return {}
    return {}


def _header(path: Path) -> list:
    text = path.read_text(encoding="utf-8-sig")
    first = text.splitlines()[0] if text.strip() else ""
    return [h.strip().lower() for h in first.split(",")]


def load_distribution(path, fmt: str = "auto", scheme: BinningScheme | None = None) -> EmpiricalDistribution:
    """Empirical distribution from a bracket table, an empirical CSV or raw samples."""
    path = Path(path)
    if not path.exists():
        raise CLIError(f"input file not found: {path}")
    head = _header(path)
    if fmt == "auto":
        if head[:1] == ["floor"]:
            fmt = "table"
        elif head[:1] == ["edge_low"]:
            fmt = "empirical"
        else:
            fmt = "samples"
    if fmt == "table":
        emp = to_empirical(parse_income_table(path))
        side = _sidecar_metadata(path)
        if side:
            emp.metadata["source_metadata"] = side
    elif fmt == "empirical":
        emp = read_empirical(path)
    elif fmt == "samples":
        try:
            values = np.loadtxt(path, delimiter=",", ndmin=1, comments="#")
        except ValueError:
            try:
                values = np.loadtxt(path, delimiter=",", ndmin=1, comments="#", skiprows=1)
            except ValueError as exc:
                raise ParseError(f"cannot read samples: {exc}") from None
        if values.ndim != 1:
            raise ParseError("sample files hold a single column of incomes")
        emp = histogram(values, scheme or BinningScheme(normalize_by_mean=True))
    else:
        raise CLIError(f"unknown input format {fmt!r}")
    emp.metadata.setdefault("input", str(path))
    return emp


def _load_model(path: Path):
    d = json.loads(Path(path).read_text())
    if isinstance(d.get("model"), dict):
        d = d["model"]
    return from_dict(d)


def _load_groups(path: Path) -> list:
    d = json.loads(Path(path).read_text())
    items = d["groups"] if isinstance(d, dict) else d
    try:
        return [GroupSpec(float(g["c"]), float(g["n"]), float(g["q"]), float(g["beta"])) for g in items]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"group entries need c, n, q, beta: {exc}") from None


# --------------------------------------------------------------------------
# commands


def _hist_rows(h):
    if h.total == 0:
        return []
    return [(h.edges[k], h.edges[k + 1], int(h.counts[k]), h.density[k], h.ccdf[k], h.group)
            for k in range(h.counts.size)]


def sim_empirical(result: SimResult) -> EmpiricalDistribution:
    """The ensemble's total histogram as an EmpiricalDistribution."""
    h = result.hist_total
    cc = np.append(h.ccdf, h.overflow / h.population)
    meta = {"source": "simulate", "underflow": h.underflow, "overflow": h.overflow,
            "config": result.config.to_dict()}
    return EmpiricalDistribution(h.edges.copy(), h.density, cc, h.population,
                                 scale=result.config.initial_money, metadata=meta)


def cmd_simulate(args, out: Path) -> tuple[dict, list, list]:
    cfg = _resolve(args, SimConfig().to_dict())
    config = SimConfig.from_dict(cfg)
    result = run_ensemble(config)
    outputs = []
    hist_header = ["edge_low", "edge_high", "count", "density", "ccdf", "group"]
    for name, h in (("total", result.hist_total), ("B", result.hist_B), ("T", result.hist_T)):
        outputs.append(_write_csv(out / f"hist_{name}.csv", hist_header, _hist_rows(h)))
    prof = result.lambda_profile
    rows = [] if prof is None else [(prof.edges[k], prof.edges[k + 1], prof.centers[k], prof.shares[k],
                                     int(prof.counts[k])) for k in range(prof.shares.size)]
    outputs.append(_write_csv(out / "lambda_profile.csv",
                              ["lambda_low", "lambda_high", "lambda_center", "share", "count"], rows))
    outputs.extend(write_empirical(sim_empirical(result), out / "empirical_total"))
    summary = dict(result.summary())
    # wall-clock time lives in the manifest so that data files are bit-identical on rerun
    summary.pop("runtime_s", None)
    summary["underflow"] = result.hist_total.underflow
    summary["overflow"] = result.hist_total.overflow
    summary["config"] = config.to_dict()
    outputs.append(_dump_json(out / "summary.json", summary))
    print(f"simulate: {result.realization_count} realizations, drift {result.conservation_drift:.2e}, "
          f"convergence KS {result.convergence_ks:.4f}, {result.runtime_s:.2f}s")
    return config.to_dict(), [], outputs


FIT_KEYS = ("target", "residual_space", "refine_pdf", "max_iterations", "tolerance", "bounds", "weights",
            "weighting", "fixed", "min_count", "n_starts", "seed")


def cmd_fit(args, out: Path):
    defaults = {k: v for k, v in FitOptions().to_dict().items() if k in FIT_KEYS}
    defaults.update({"family": "mixture", "allow_nonconverged": False, "format": "auto"})
    args.fixed = _pairs(args.fixed, "--fixed", float) or None
    args.bounds = _pairs(args.bounds, "--bounds", _parse_bounds) or None
    cfg = _resolve(args, defaults)
    opts = dict((k, cfg[k]) for k in FIT_KEYS)
    opts["bounds"] = {k: tuple(v) for k, v in (opts["bounds"] or {}).items()}
    opts["fixed"] = dict(opts["fixed"] or {})
    if opts["weights"] is not None:
        opts["weights"] = np.asarray(opts["weights"], dtype=float)
    options = FitOptions(**opts)
    emp = load_distribution(args.input, cfg["format"])
    result = fit(emp, cfg["family"], options=options)
    good = goodness(result.model, emp)
    report = result.to_dict()
    report["history"] = result.history
    report["family"] = cfg["family"]
    report["goodness"] = {k: good[k] for k in ("ks", "rmse_linear", "rmse_log")}
    report["data_scale"] = emp.scale
    outputs = [_dump_json(out / "fit.json", report),
               _dump_json(out / "model.json", to_dict(result.model))]
    outputs.append(_write_csv(out / "residuals.csv",
                              ["edge_low", "edge_high", "observed", "model", "residual", "log_residual"],
                              [tuple(r.values()) for r in good["residuals"]]))
    outputs.extend(write_empirical(emp, out / "empirical_fit"))
    p = result.parameters
    print(f"fit[{cfg['family']}]: converged={result.converged} residual={result.residual_norm:.4g} "
          + " ".join(f"{k}={v:.4g}" for k, v in p.items()))
    resolved = {**options.to_dict(), "family": cfg["family"], "allow_nonconverged": cfg["allow_nonconverged"],
                "format": cfg["format"]}
    if not result.converged and not cfg["allow_nonconverged"]:
        raise _NonConverged(resolved, [str(args.input)], outputs)
    return resolved, [str(args.input)], outputs


class _NonConverged(Exception):
    def __init__(self, config, inputs, outputs):
        super().__init__("fit did not converge (pass --allow-nonconverged to accept)")
        self.payload = (config, inputs, outputs)


def cmd_ingest(args, out: Path):
    defaults = {**BinningScheme().to_dict(), "format": "auto"}
    defaults["normalize_by_mean"] = True
    cfg = _resolve(args, defaults)
    scheme = BinningScheme(**{k: cfg[k] for k in BinningScheme().to_dict()})
    emp = load_distribution(args.input, cfg["format"], scheme)
    outputs = list(write_empirical(emp, out / "empirical"))
    print(f"ingest: {emp.density.size} bins, {emp.total_count} observations, scale {emp.scale:.6g}")
    return cfg, [str(args.input)], outputs


def cmd_analyze(args, out: Path):
    cfg = _resolve(args, {"model": None, "groups": None, "threshold": 4.0, "rescale": 1.0})
    if cfg["model"] is None and cfg["groups"] is None:
        raise CLIError("analyze needs --model and/or --groups")
    c = float(cfg["rescale"])
    if not c > 0:
        raise CLIError("--rescale must be positive")
    report, outputs, inputs = {"rescale": c}, [], []
    if cfg["model"] is not None:
        inputs.append(str(cfg["model"]))
        model = _load_model(Path(cfg["model"]))
        if c != 1.0:
            model = rescale(model, c)
        report["model"] = to_dict(model)
        report["gini"] = gini(model)
        report["decile_ratio"] = decile_ratio(model)
        report["decile_definition"] = "population deciles: top 10% of agents over bottom 10% of agents"
        if isinstance(model, MixtureModel):
            strat = stratify(model, float(cfg["threshold"]) * c)
            report["stratification"] = strat.to_dict()
            outputs.append(_write_csv(out / "stratification.csv", ["stratum", "population", "money_share", "mean"],
                                      [tuple(r.values()) for r in strat.rows()]))
        print(f"analyze: gini={report['gini']:.6f} R={report['decile_ratio']:.4f}")
    if cfg["groups"] is not None:
        inputs.append(str(cfg["groups"]))
        groups = _load_groups(Path(cfg["groups"]))
        if c != 1.0:
            groups = [dataclasses.replace(g, beta=g.beta * c) for g in groups]
        flow = money_flow(groups)
        report["flow"] = flow.to_dict()
        outputs.append(_write_csv(out / "flow.csv", ["group", "c", "n", "q", "beta", "initial_mean", "final_mean",
                                                     "delta"],
                                  [(k, g.c, g.n, g.q, g.beta, flow.initial_mean[k], flow.final_mean[k],
                                    flow.delta[k]) for k, g in enumerate(groups)]))
        print(f"analyze: beta_final={flow.beta_final:.6g} delta={[round(d, 6) for d in flow.delta]}")
    outputs.insert(0, _dump_json(out / "analysis.json", report))
    return cfg, inputs, outputs


# ---- report


def _read_table(path: Path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: np.array([float(r[k]) if r[k] != "" else math.nan for r in rows]) if k != "group" else
            [r[k] for r in rows] for k in (rows[0].keys() if rows else [])}


def _components(model):
    """(name, spec, weight) contributions whose sum is the model."""
    if isinstance(model, MixtureModel):
        return [("B", model.B, model.w_B), ("T", model.T, model.w_T)]
    return []


def _generating_model(emp: EmpiricalDistribution):
    src = emp.metadata.get("source_metadata", {})
    gen = src.get("generating_model")
    if gen is None or "dollars_per_unit" not in src:
        return None
    return rescale(from_dict(gen), float(src["dollars_per_unit"]) / emp.scale)


def _fig_data(run: Path):
    """Collect the inputs available in a run directory."""
    have = {}
    if (run / "fit.json").exists() and (run / "empirical_fit.csv").exists():
        have["fit"] = (_load_model(run / "fit.json"), read_empirical(run / "empirical_fit.csv"))
    if (run / "empirical_total.csv").exists():
        have["simulate"] = read_empirical(run / "empirical_total.csv")
    if (run / "lambda_profile.csv").exists():
        prof = _read_table(run / "lambda_profile.csv")
        if prof and prof["share"].size:
            have["lambda"] = prof
    return have


def _svg(path: Path, series, xlabel, ylabel, logx=True, logy=True, title=""):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4.5))
    for label, x, y, style in series:
        ok = np.isfinite(y) & (y > 0 if logy else True) & (x > 0 if logx else True)
        ax.plot(x[ok], y[ok], style, label=label, ms=3, lw=1.2)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    plt.rcParams["svg.hashsalt"] = "econokin"
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def cmd_report(args, out: Path):
    run = Path(args.run_dir)
    if not run.is_dir():
        raise CLIError(f"run directory not found: {run}")
    have = _fig_data(run)
    if "fit" not in have and "simulate" not in have:
        raise CLIError("nothing to report: expected fit outputs (fit.json, empirical_fit.csv) "
                       "and/or simulate outputs (empirical_total.csv, lambda_profile.csv) in " + str(run))
    outputs, inputs, missing = [], [], []
    if "fit" in have:
        model, emp = have["fit"]
        inputs += [str(run / "fit.json"), str(run / "empirical_fit.csv")]
    else:
        model, emp = None, have["simulate"]
        inputs.append(str(run / "empirical_total.csv"))
        missing.append("fit outputs (model curves omitted)")
    gen = _generating_model(emp)
    edges = emp.bin_edges
    group_ccdf = {}
    if model is None:
        for g in ("B", "T"):
            p = run / f"hist_{g}.csv"
            if p.exists():
                t = _read_table(p)
                if t and t["ccdf"].size == edges.size - 1:
                    group_ccdf[g] = np.append(t["ccdf"], math.nan)
                    inputs.append(str(p))

    # fig1_ccdf.csv: CCDF at x = 0 and at every bin edge
    x1 = edges if edges[0] == 0.0 else np.concatenate([[0.0], edges])
    emp_cc = emp.ccdf if edges[0] == 0.0 else np.concatenate([[1.0], emp.ccdf])
    cols1 = {"x": x1, "empirical_ccdf": emp_cc}
    for g, v in group_ccdf.items():
        cols1[f"empirical_{g}"] = v if edges[0] == 0.0 else np.concatenate([[math.nan], v])
    if model is not None:
        m = total_mass(model)
        cols1["model_ccdf"] = np.asarray(ccdf(model, x1), dtype=float) / m
        for name, spec, w in _components(model):
            cols1[f"model_{name}"] = w * np.asarray(ccdf(spec, x1), dtype=float) / m
    if gen is not None:
        cols1["generating_ccdf"] = np.asarray(ccdf(gen, x1), dtype=float) / total_mass(gen)
    fig1 = _write_csv(out / "fig1_ccdf.csv", list(cols1), zip(*cols1.values()))

    # fig2_pdf.csv: density at bin centres
    lo, hi = edges[:-1], edges[1:]
    x2 = np.where(lo > 0, np.sqrt(lo * np.where(lo > 0, hi, 1.0)), 0.5 * hi)
    cols2 = {"x": x2, "edge_low": lo, "edge_high": hi, "empirical_pdf": emp.density}
    if model is not None:
        m = total_mass(model)
        cols2["model_pdf"] = np.asarray(eval_pdf(model, x2), dtype=float) / m
        for name, spec, w in _components(model):
            cols2[f"model_{name}"] = w * np.asarray(eval_pdf(spec, x2), dtype=float) / m
    if gen is not None:
        cols2["generating_pdf"] = np.asarray(eval_pdf(gen, x2), dtype=float) / total_mass(gen)
    fig2 = _write_csv(out / "fig2_pdf.csv", list(cols2), zip(*cols2.values()))

    s1 = [("empirical", x1, cols1["empirical_ccdf"], "o")]
    s2 = [("empirical", x2, cols2["empirical_pdf"], "o")]
    for key, style in (("model_ccdf", "-"), ("model_B", "--"), ("model_T", ":"), ("generating_ccdf", "-."),
                       ("empirical_B", "s"), ("empirical_T", "^")):
        if key in cols1:
            s1.append((key.replace("_ccdf", ""), x1, cols1[key], style))
    for key, style in (("model_pdf", "-"), ("model_B", "--"), ("model_T", ":"), ("generating_pdf", "-.")):
        if key in cols2:
            s2.append((key.replace("_pdf", ""), x2, cols2[key], style))
    outputs += [fig1, _svg(out / "fig1_ccdf.svg", s1, "income / mean", "fraction at or above"),
                fig2, _svg(out / "fig2_pdf.svg", s2, "income / mean", "probability density")]

    if "lambda" in have:
        prof = have["lambda"]
        inputs.append(str(run / "lambda_profile.csv"))
        fig3 = _write_csv(out / "fig3_lambda.csv", ["lambda_center", "lambda_low", "lambda_high", "share"],
                          zip(prof["lambda_center"], prof["lambda_low"], prof["lambda_high"], prof["share"]))
        outputs += [fig3, _svg(out / "fig3_lambda.svg",
                               [("group T", prof["lambda_center"], prof["share"], "o-")],
                               "saving propensity", "share of group-T income", logx=False, logy=False)]
    else:
        missing.append("lambda_profile.csv (fig3 omitted)")
    for note in missing:
        print(f"report: missing {note}", file=sys.stderr)
    print(f"report: wrote {len(outputs)} files to {out}")
    return {"run_dir": str(run), "missing": missing}, inputs, outputs


# --------------------------------------------------------------------------
# parser


def _common(p):
    p.add_argument("--seed", type=int, default=None, help="random seed (recorded in the manifest)")
    p.add_argument("--out", type=Path, default=None, help="output directory (default: ./run)")
    p.add_argument("--config", type=Path, default=None, help="JSON file of option values")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="econokin", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"econokin {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the two-group kinetic exchange ensemble")
    _common(p)
    p.add_argument("--n-agents", "--agents", dest="n_agents", type=int)
    p.add_argument("--frac-T", "--frac-t", dest="frac_T", type=float)
    p.add_argument("--lambda-B", "--lambda-b", dest="lambda_B", type=float)
    p.add_argument("--quench-alpha", "--alpha", dest="quench_alpha", type=float)
    p.add_argument("--n-trades", "--trades", dest="n_trades", type=int)
    p.add_argument("--n-realizations", "--realizations", dest="n_realizations", type=int)
    p.add_argument("--initial-money", dest="initial_money", type=float)
    p.add_argument("--lambda-bins", dest="lambda_bins", type=int)

    p = sub.add_parser("ingest", help="bracket table or samples -> empirical distribution CSV")
    _common(p)
    p.add_argument("input", type=Path)
    p.add_argument("--format", choices=["auto", "table", "empirical", "samples"])
    p.add_argument("--kind", choices=["log", "linear"])
    p.add_argument("--bins-per-decade", dest="bins_per_decade", type=int)
    p.add_argument("--n-bins", dest="n_bins", type=int)
    p.add_argument("--anchor", type=float)
    p.add_argument("--normalize-by-mean", dest="normalize_by_mean", action=argparse.BooleanOptionalAction)

    p = sub.add_parser("fit", help="fit a model family to an empirical distribution")
    _common(p)
    p.add_argument("input", type=Path, help="bracket table, empirical CSV or sample file")
    p.add_argument("--format", choices=["auto", "table", "empirical", "samples"])
    p.add_argument("--family", help="mixture, tsallis, gamma or gamma:K")
    p.add_argument("--target", choices=["ccdf", "pdf", "joint"])
    p.add_argument("--residual-space", dest="residual_space", choices=["linear", "log"])
    p.add_argument("--refine-pdf", dest="refine_pdf", action=argparse.BooleanOptionalAction)
    p.add_argument("--max-iterations", dest="max_iterations", type=int)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--bounds", action="append", metavar="NAME=LO:HI")
    p.add_argument("--weighting", choices=["poisson", "uniform"])
    p.add_argument("--fixed", action="append", metavar="NAME=VALUE")
    p.add_argument("--min-count", dest="min_count", type=float)
    p.add_argument("--n-starts", dest="n_starts", type=int)
    p.add_argument("--allow-nonconverged", dest="allow_nonconverged", action="store_true", default=None)

    p = sub.add_parser("analyze", help="stratification, Gini, decile ratio and money flow")
    _common(p)
    p.add_argument("--model", type=Path, help="model JSON (or a fit.json)")
    p.add_argument("--groups", type=Path, help="JSON list of {c, n, q, beta}")
    p.add_argument("--threshold", type=float)
    p.add_argument("--rescale", type=float, help="multiply all incomes by this factor first")

    p = sub.add_parser("report", help="figure data (CSV) and SVG renders from a run directory")
    _common(p)
    p.add_argument("run_dir", type=Path)
    return parser


COMMANDS = {"simulate": cmd_simulate, "ingest": cmd_ingest, "fit": cmd_fit, "analyze": cmd_analyze,
            "report": cmd_report}


def _check_outputs(paths) -> list:
    listed = []
    for p in paths:
        p = Path(p)
        if not p.is_file() or p.stat().st_size == 0:
            raise CLIError(f"output not written: {p}")
        listed.append({"path": str(p), "sha256": _sha256(p), "bytes": p.stat().st_size})
    return listed


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    out = args.out or (args.run_dir if args.command == "report" else Path("run"))
    t0 = time.perf_counter()
    status, message = 0, None
    try:
        if args.command == "report" and not Path(args.run_dir).is_dir():
            raise CLIError(f"run directory not found: {args.run_dir}")
        out.mkdir(parents=True, exist_ok=True)
        try:
            config, inputs, outputs = COMMANDS[args.command](args, out)
        except _NonConverged as exc:
            config, inputs, outputs = exc.payload
            status, message = 3, str(exc)
        listed = _check_outputs(outputs)
        seed = config.get("seed") if isinstance(config, dict) else None
        manifest = RunManifest(
            command=args.command,
            config=config,
            inputs=inputs,
            outputs=listed,
            seed=seed if seed is not None else args.seed,
            version=__version__,
            duration_s=time.perf_counter() - t0,
            argv=argv,
            created_utc=_dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            environment={"python": platform.python_version(), "numpy": np.__version__,
                         "platform": platform.platform(), "threads": worker_count(),
                         "ECONOKIN_THREADS": os.environ.get("ECONOKIN_THREADS")},
        )
        manifest.write(out)
    except (EconokinError, OSError, ValueError, KeyError, TypeError) as exc:
        print(f"econokin {args.command}: error: {exc}", file=sys.stderr)
        return 1
    if message:
        print(f"econokin {args.command}: error: {message}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())

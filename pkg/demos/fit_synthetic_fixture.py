"""Fit the Gamma + Tsallis mixture to the shipped synthetic bracket table.

The fixture is drawn from a known model, so the fitted weights and scales can
be checked against the generating values printed alongside.

    python3 demos/fit_synthetic_fixture.py
"""

from econokin.distributions import from_dict, normalize
from econokin.fitting import fit, goodness
from econokin.ingest import to_empirical
from econokin.synthetic import load_fixture


def main():
    raw, meta = load_fixture()
    emp = to_empirical(raw)
    print(f"{len(raw.rows)} brackets, {meta['n_returns']:,} returns, mean income {emp.scale:,.0f}")

    gen = normalize(from_dict(meta["generating_model"]))
    # the generating model is in its own units; the table is in units of its measured mean
    unit = emp.scale / meta["dollars_per_unit"]
    print(f"generating: w_B={gen.w_B:.3f} beta={gen.B.beta / unit:.3f} power={gen.T.power:.2f}")

    for family in ("gamma", "tsallis", "mixture"):
        r = fit(emp, family)
        g = goodness(r.model, emp)
        shown = ", ".join(f"{k}={v:.3f}" for k, v in r.parameters.items())
        print(f"{family:8s} residual {r.residual_norm:8.3f}  KS {g['ks']:.4f}  {shown}")


if __name__ == "__main__":
    main()

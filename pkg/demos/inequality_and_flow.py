"""Stratification, Gini and decile ratio of the reference mixture, plus money flow.

    python3 demos/inequality_and_flow.py --threshold 4
"""

import argparse

from econokin.distributions import normalize, usa2001_mixture
from econokin.inequality import GroupSpec, decile_ratio, gini, money_flow, stratify


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--threshold", type=float, default=4.0)
    args = ap.parse_args()

    model = usa2001_mixture()
    rep = stratify(model, args.threshold)
    print(f"threshold {rep.threshold}")
    print(f"{'stratum':8s} {'population':>10s} {'money':>8s} {'mean':>8s}")
    for name, s in rep.strata.items():
        print(f"{name:8s} {s.population:10.4f} {s.money_share:8.4f} {s.mean:8.3f}")
    print(f"B_NP / T_NP population {rep.population_ratio_BNP_TNP:.2f}, "
          f"T_NP / B mean {rep.mean_ratio_TNP_B:.3f}")

    spec = normalize(model)
    print(f"Gini {gini(spec):.4f}, top/bottom decile ratio {decile_ratio(spec):.2f}")

    # a wide group with a small scale starts richer yet still gains money
    groups = [GroupSpec(0.5, 5.0, 1.0, 0.5), GroupSpec(0.5, 0.0, 1.0, 1.0)]
    flow = money_flow(groups)
    print(f"equilibrium beta {flow.beta_final:.4f}")
    for g, d in zip(groups, flow.delta):
        print(f"  start mean {g.mean:.2f}, beta {g.beta:.2f} -> change {d:+.4f}")
    print(f"  weighted sum of changes {flow.conservation_residual:.1e}")


if __name__ == "__main__":
    main()

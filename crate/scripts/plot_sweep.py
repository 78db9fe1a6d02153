#!/usr/bin/env python3
"""Plot the decay-ratio trend from a sweep CSV.

Usage: plot_sweep.py sweep.csv [out.png]

Reads the CSV produced by `gpextremes sweep` and plots the empirical ratio
-log(p_hat) / M(u; T) against the threshold level u, with its confidence
band propagated from the probability half-width. The ratio approaching 1
from above is the asymptotic prediction.
"""

import csv
import math
import sys


def main() -> int:
    if len(sys.argv) < 2:
        print(__doc__.strip(), file=sys.stderr)
        return 2
    path = sys.argv[1]
    out = sys.argv[2] if len(sys.argv) > 2 else "sweep_ratio.png"

    us, ratios, los, his = [], [], [], []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            if not row.get("ratio"):
                continue  # no exceedance observed at this level
            u = float(row["u"])
            p = float(row["p_hat"])
            m = float(row["m_of_u_T"])
            hw = float(row["half_width"])
            us.append(u)
            ratios.append(float(row["ratio"]))
            # CI on -log p / m from the CI on p
            lo_p, hi_p = max(p - hw, 1e-300), p + hw
            los.append(-math.log(hi_p) / m)
            his.append(-math.log(lo_p) / m)

    if not us:
        print("no rows with an observed exceedance", file=sys.stderr)
        return 1

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not available; ratio table:")
        for u, r, lo, hi in zip(us, ratios, los, his):
            print(f"  u = {u:g}: ratio = {r:.4f}  [{lo:.4f}, {hi:.4f}]")
        return 0

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(
        us,
        ratios,
        yerr=[[r - lo for r, lo in zip(ratios, los)], [hi - r for r, hi in zip(ratios, his)]],
        fmt="o-",
        capsize=3,
        label="-log p_hat / M(u; T)",
    )
    ax.axhline(1.0, color="gray", linestyle="--", linewidth=1, label="asymptotic limit")
    ax.set_xlabel("u")
    ax.set_ylabel("ratio")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

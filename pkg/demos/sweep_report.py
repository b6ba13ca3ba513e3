"""A small eta sweep on the hinge + l1 preset, written out as CSVs and SVG plots.

The same thing from the shell:

    adadiff-bench sweep --preset hinge --N 200 --d 40 --budget 300 \
        --eta-grid 1e-3,10,9 --seeds 0-2 --out demo_out
"""

import sys

from adadiff.bench.config import ExperimentConfig
from adadiff.bench.report import write_sweep
from adadiff.bench.sweep import sweep


def main(out="demo_out"):
    cfg = ExperimentConfig(preset="hinge", N=200, d=40, budget=300, eta_grid=(1e-3, 10, 9), seeds=(0, 1, 2))
    res = sweep(cfg)
    print(f"F* estimate {res.fstar.value:.6f} (pool {res.fstar.pool_min:.6f}, "
          f"refined {res.fstar.refined_min:.6f})")
    print("best eta per policy:", res.best_eta)
    print("panel etas:", ", ".join(f"{e:.3g}" for e in res.panel_etas))
    for row in res.aggregates:
        print(f"  {row['policy']:>13} eta={row['eta']:<10.3g} mean gap={row['mean_gap']:.3e}")
    write_sweep(res, out, plot=True)
    print("written to", out)


if __name__ == "__main__":
    main(*sys.argv[1:])

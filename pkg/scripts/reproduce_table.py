"""Run every algorithm on several datasets and print mean test risk / certificate per cell.

    python scripts/reproduce_table.py --datasets tictactoe wdbc --seeds 0 1 2 --out-dir runs/table
"""

from __future__ import annotations

import argparse
from collections import defaultdict
from dataclasses import replace

import numpy as np

from selfbound.experiment import ExperimentConfig, run_experiment
from selfbound.optim import ALGORITHMS, TrainConfig


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--datasets", nargs="+", default=["tictactoe", "wdbc", "digits1vs7", "digits4vs9", "digits5vs6"])
    ap.add_argument("--seeds", nargs="+", type=int, default=[0])
    ap.add_argument("--iterations", type=int, default=2000)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out-dir", default="runs/table")
    a = ap.parse_args()

    cfg = ExperimentConfig(datasets=tuple(a.datasets), seeds=tuple(a.seeds), workers=a.workers,
                           train=replace(TrainConfig(), iterations=a.iterations))
    rows = run_experiment(cfg, a.out_dir).rows()

    cells = defaultdict(list)
    for row in rows:
        cells[row["dataset"], row["algorithm"]].append((row["test_mv_risk"], row["bound"]))
    algs = sorted(ALGORITHMS)
    print(f"{'dataset':<14}" + "".join(f"{alg + ' risk/bound':>22}" for alg in algs))
    means = defaultdict(list)
    for name in dict.fromkeys(r["dataset"] for r in rows):
        line = f"{name:<14}"
        for alg in algs:
            risk, bound = np.mean(cells[name, alg], axis=0)
            means[alg].append((risk, bound))
            line += f"{risk:>13.3f} / {bound:.3f}"
        print(line)
    print(f"{'mean':<14}" + "".join(f"{np.mean(means[alg], axis=0)[0]:>13.3f} / {np.mean(means[alg], axis=0)[1]:.3f}"
                                    for alg in algs))
    print(f"report written to {a.out_dir}/report.csv")


if __name__ == "__main__":
    main()

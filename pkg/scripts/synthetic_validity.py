"""Check how often each certificate covers the true risk on synthetic tasks.

A 50,000-example sample from the same generator stands in for the data
distribution.

    python scripts/synthetic_validity.py --tasks 20 --iterations 2000
"""

from __future__ import annotations

import argparse
from dataclasses import replace

from selfbound.datasets import SyntheticTask
from selfbound.experiment import prepare_voters, run_algorithm
from selfbound.forest import predict_matrix
from selfbound.optim import ALGORITHMS, TrainConfig
from selfbound.stats import mv_risk


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tasks", type=int, default=20)
    ap.add_argument("--train-size", type=int, default=1000)
    ap.add_argument("--proxy-size", type=int, default=50_000)
    ap.add_argument("--iterations", type=int, default=2000)
    ap.add_argument("--delta", type=float, default=0.05)
    a = ap.parse_args()

    cfg = replace(TrainConfig(), iterations=a.iterations, delta=a.delta)
    algs = sorted(ALGORITHMS)
    covered = dict.fromkeys(algs, 0)
    print(f"{'task':<6}" + "".join(f"{alg + ' bound/risk':>20}" for alg in algs))
    for seed in range(a.tasks):
        task = SyntheticTask(seed)
        vs = prepare_voters(task.sample(a.train_size), seed)
        proxy = predict_matrix(vs.trees, task.sample(a.proxy_size, stream=1))
        line = f"{seed:<6}"
        for alg in algs:
            run = run_algorithm(vs, alg, cfg, f"synthetic{seed}", seed)
            bound, risk = run.result.certificate.value, mv_risk(proxy, run.result.posterior)
            covered[alg] += bound >= risk
            line += f"{bound:>12.3f} / {risk:.3f}"
        print(line, flush=True)
    print("covered: " + ", ".join(f"{alg} {covered[alg]}/{a.tasks}" for alg in algs))


if __name__ == "__main__":
    main()

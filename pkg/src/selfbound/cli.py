"""Command-line entry point.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import bounds, experiment
from .bounds import ComplexityTerms
from .forest import DEFAULT_N_VOTERS, load_matrix, save_forest, save_matrix
from .optim import ALGORITHMS, TrainConfig, TrainingError, config_dict, learn, write_trace
from .stats import Posterior, kl_posterior_prior, load_posterior, moments, mv_risk, save_posterior

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _delta(text: str) -> float:
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"delta must lie in (0, 1), got {text}")
    return v


def _fraction(text: str) -> float:
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"fraction must lie in (0, 1), got {text}")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0.0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text}")
    return v


def _pos_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _seeds(text: str) -> list[int]:
    try:
        out = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not out or any(s < 0 for s in out):
        raise argparse.ArgumentTypeError("seeds must be nonnegative integers")
    return out


def _train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algorithm", choices=sorted(ALGORITHMS), default="alg3")
    p.add_argument("--iterations", type=_nonneg_int, default=TrainConfig.iterations)
    p.add_argument("--lambda", dest="lam", type=_positive_float, default=TrainConfig.lam)
    p.add_argument("--delta", type=_delta, default=TrainConfig.delta)
    p.add_argument("--optimizer", choices=("gd", "cocob"), default=TrainConfig.optimizer)
    p.add_argument("--step", type=_positive_float, default=TrainConfig.step, help="plain gradient-descent step size")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="selfbound", description="Self-bounding majority votes over tree voters.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    tv = sub.add_parser("train-voters", help="split a dataset, grow trees, write prediction matrices")
    tv.add_argument("--dataset", required=True, help="CSV path or built-in name (tictactoe, wdbc, ...)")
    tv.add_argument("--out-dir", required=True)
    tv.add_argument("--n-voters", type=_pos_int, default=DEFAULT_N_VOTERS)
    tv.add_argument("--seed", type=_nonneg_int, default=0)
    tv.add_argument("--test-fraction", type=_fraction, default=0.5)
    tv.add_argument("--voter-fraction", type=_fraction, default=0.5)
    tv.add_argument("--feature-sampling", choices=("split", "tree"), default="split")
    tv.add_argument("--label-column", type=int, default=-1)
    tv.add_argument("--has-header", action="store_true")

    ln = sub.add_parser("learn", help="minimize a certificate over the posterior")
    ln.add_argument("--matrix", required=True, help="prediction matrix of the posterior-training set")
    ln.add_argument("--test-matrix", help="optional held-out matrix for reporting test risk")
    ln.add_argument("--out-dir", required=True)
    ln.add_argument("--seed", type=_nonneg_int, default=0)
    _train_flags(ln)

    ce = sub.add_parser("certify", help="evaluate every certificate kind for a posterior")
    ce.add_argument("--matrix", required=True)
    ce.add_argument("--posterior", help="posterior file; uniform when omitted")
    ce.add_argument("--delta", type=_delta, default=TrainConfig.delta)
    ce.add_argument("--out-dir")

    ex = sub.add_parser("experiment", help="run the full protocol from a key=value config file")
    ex.add_argument("config", nargs="?", help="config file; defaults apply when omitted")
    ex.add_argument("--out-dir", required=True)
    ex.add_argument("--dataset", action="append", help="overrides the config datasets (repeatable)")
    ex.add_argument("--algorithm", action="append", choices=sorted(ALGORITHMS))
    ex.add_argument("--seed", type=_seeds, help="comma-separated seed list")
    ex.add_argument("--iterations", type=_nonneg_int)
    ex.add_argument("--lambda", dest="lam", type=_positive_float)
    ex.add_argument("--delta", type=_delta)
    ex.add_argument("--optimizer", choices=("gd", "cocob"))
    ex.add_argument("--n-voters", type=_pos_int)
    return ap


def cmd_train_voters(a) -> int:
    data = experiment.resolve_dataset(a.dataset, a.label_column, a.has_header)
    vs = experiment.prepare_voters(data, a.seed, a.n_voters, a.test_fraction, a.voter_fraction, a.feature_sampling)
    out = Path(a.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_forest(vs.trees, out / "forest.txt", {k: vs.meta[k] for k in ("dataset", "seed", "n_voters",
                                                                           "feature_sampling", "rng")})
    save_matrix(vs.train, out / "matrix_train.csv")
    save_matrix(vs.test, out / "matrix_test.csv")
    (out / "split.json").write_text(json.dumps(vs.meta, sort_keys=True, indent=1, default=str) + "\n",
                                    encoding="utf-8")
    print(f"wrote {len(vs.trees)} trees; posterior set m={vs.train.m}, test set m={vs.test.m} -> {out}")
    return EXIT_OK


def cmd_learn(a) -> int:
    pm = load_matrix(a.matrix)
    test = load_matrix(a.test_matrix) if a.test_matrix else None
    if test is not None and test.n_voters != pm.n_voters:
        raise ValueError("test matrix has a different number of voters")
    cfg = TrainConfig(iterations=a.iterations, lam=a.lam, optimizer=a.optimizer, step=a.step,
                      delta=a.delta, seed=a.seed)
    out = Path(a.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        res = learn(a.algorithm, pm, Posterior.uniform(pm.n_voters), cfg)
    except TrainingError as exc:
        write_trace(exc.trace, out / "trace.csv")
        raise
    save_posterior(res.posterior, out / "posterior.txt")
    rec = bounds.dumps_certificate(res.certificate)
    if test is not None:
        rec += f"test_mv_risk={mv_risk(test, res.posterior)!r}\n"
    (out / "certificate.txt").write_text(rec, encoding="utf-8")
    write_trace(res.trace, out / "trace.csv")
    (out / "config.json").write_text(json.dumps(config_dict(cfg) | {"algorithm": a.algorithm}, sort_keys=True,
                                                indent=1) + "\n", encoding="utf-8")
    cert = res.certificate
    msg = f"{a.algorithm}: {cert.kind} = {cert.value:.6f} (confidence {cert.confidence:.2f})"
    if test is not None:
        msg += f", test MV risk {mv_risk(test, res.posterior):.4f}"
    print(msg)
    return EXIT_OK


def cmd_certify(a) -> int:
    pm = load_matrix(a.matrix)
    q = load_posterior(a.posterior) if a.posterior else Posterior.uniform(pm.n_voters)
    if len(q) != pm.n_voters:
        raise ValueError(f"posterior has {len(q)} voters but the matrix has {pm.n_voters}")
    prior = Posterior.uniform(pm.n_voters)
    terms = ComplexityTerms.from_kl(kl_posterior_prior(q, prior), pm.m, a.delta)
    certs = bounds.certify_all(moments(pm, q), terms)
    text = "".join(f"[{k}]\n{bounds.dumps_certificate(c)}\n" for k, c in certs.items())
    if a.out_dir:
        out = Path(a.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "certificates.txt").write_text(text, encoding="utf-8")
    for k, c in certs.items():
        conf = "-" if c.confidence is None else f"{c.confidence:.2f}"
        print(f"{k:<14}{c.value:.6f}  confidence {conf}{'  (degenerate)' if c.degenerate else ''}")
    return EXIT_OK


def cmd_experiment(a) -> int:
    try:
        cfg = experiment.load_config(a.config) if a.config else experiment.ExperimentConfig()
    except ValueError as exc:
        raise UsageError(f"bad config {a.config}: {exc}") from None
    train = cfg.train
    for flag, key in (("iterations", "iterations"), ("lam", "lam"), ("delta", "delta"), ("optimizer", "optimizer")):
        if getattr(a, flag) is not None:
            train = replace(train, **{key: getattr(a, flag)})
    over = {"train": train}
    if a.dataset:
        over["datasets"] = tuple(a.dataset)
    if a.algorithm:
        over["algorithms"] = tuple(a.algorithm)
    if a.seed:
        over["seeds"] = tuple(a.seed)
    if a.n_voters:
        over["n_voters"] = a.n_voters
    cfg = replace(cfg, **over)
    report = experiment.run_experiment(cfg, a.out_dir)
    print(experiment.summarize(report.rows()))
    return EXIT_OK


COMMANDS = {"train-voters": cmd_train_voters, "learn": cmd_learn, "certify": cmd_certify,
            "experiment": cmd_experiment}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[a.command](a)
    except UsageError as exc:
        print(f"selfbound {a.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, TrainingError) as exc:
        print(f"selfbound {a.command}: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

"""End-to-end protocol: split, grow voters, learn each algorithm, certify, report."""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import bounds, edmax
from .data import Dataset, SplitSpec, load_csv, split, split_for_voters, split_metadata
from .datasets import builtin
from .forest import DEFAULT_N_VOTERS, PredictionMatrix, predict_matrix, train_forest
from .optim import ALGORITHMS, LearnResult, TrainConfig, canonical_algorithm, learn, write_trace
from .stats import EmpiricalMoments, Posterior, moments, mv_risk

REPORT_COLUMNS = ("dataset", "algorithm", "seed", "test_mv_risk", "bound", "kind", "confidence",
                  "r_S", "d_S", "e_S", "KL", "m", "delta", "seconds", "skipped_steps",
                  "r_upper", "d_lower", "e_star", "d_star")
PLOT_GRID = 201


@dataclass(frozen=True)
class ExperimentConfig:
    datasets: tuple[str, ...] = ("tictactoe",)
    algorithms: tuple[str, ...] = tuple(ALGORITHMS)
    seeds: tuple[int, ...] = (0,)
    n_voters: int = DEFAULT_N_VOTERS
    feature_sampling: str = "split"
    test_fraction: float = 0.5
    voter_fraction: float = 0.5
    label_column: int = -1
    has_header: bool = False
    workers: int = 1
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        object.__setattr__(self, "algorithms", tuple(canonical_algorithm(a) for a in self.algorithms))
        if not self.datasets or not self.algorithms or not self.seeds:
            raise ValueError("datasets, algorithms and seeds must be nonempty")
        if self.n_voters < 1:
            raise ValueError("n_voters must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


_TRAIN_KEYS = {f.name for f in fields(TrainConfig)} | {"lambda"}
_LIST_KEYS = {"datasets", "algorithms", "seeds"}


def _coerce(value: str, like):
    if isinstance(like, bool):
        if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"not a boolean: {value!r}")
        return value.lower() in ("true", "1", "yes")
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    return value


def parse_config(text: str) -> ExperimentConfig:
    """Flat ``key = value`` lines; ``#`` starts a comment; lists are comma-separated.

    Keys are the ExperimentConfig fields plus any TrainConfig field
    (``lambda`` is accepted for ``lam``). Unset keys keep their defaults.
    """
    top, train = {}, {}
    base, base_train = ExperimentConfig(), TrainConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key in _LIST_KEYS:
            items = tuple(s.strip() for s in value.split(",") if s.strip())
            top[key] = tuple(int(s) for s in items) if key == "seeds" else items
        elif key in _TRAIN_KEYS:
            name = "lam" if key == "lambda" else key
            train[name] = _coerce(value, getattr(base_train, name))
        elif key in {f.name for f in fields(ExperimentConfig)} - {"train"}:
            top[key] = _coerce(value, getattr(base, key))
        else:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
    return ExperimentConfig(**top, train=TrainConfig(**train))


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def resolve_dataset(name: str, label_column: int = -1, has_header: bool = False) -> Dataset:
    """A path to a CSV file, otherwise one of the built-in dataset names."""
    p = Path(name)
    if p.suffix or p.exists():
        return load_csv(p, label_column=label_column, has_header=has_header)
    return builtin(name)


@dataclass
class VoterSplit:
    trees: list
    train: PredictionMatrix
    test: PredictionMatrix
    meta: dict


def prepare_voters(data: Dataset, seed: int = 0, n_voters: int = DEFAULT_N_VOTERS,
                   test_fraction: float = 0.5, voter_fraction: float = 0.5,
                   feature_sampling: str = "split") -> VoterSplit:
    """Split off a test set, grow voters on part of the rest, predict on the remainder and on the test set."""
    spec = SplitSpec(seed, test_fraction, voter_fraction)
    tr, te = split(data, spec)
    vt, pt = split_for_voters(tr, spec)
    trees = train_forest(vt, n_voters, seed, feature_sampling)
    meta = split_metadata(tr, te, vt, pt) | {"seed": seed, "n_voters": n_voters,
                                            "feature_sampling": feature_sampling, "dataset": data.name}
    return VoterSplit(trees, predict_matrix(trees, pt), predict_matrix(trees, te), meta)


@dataclass
class RunResult:
    dataset: str
    algorithm: str
    seed: int
    test_mv_risk: float
    result: LearnResult
    seconds: float

    def row(self) -> dict:
        cert = self.result.certificate
        c = cert.components
        tr = self.result.trace[-1]
        out = {"dataset": self.dataset, "algorithm": self.algorithm, "seed": self.seed,
               "test_mv_risk": self.test_mv_risk, "bound": cert.value, "kind": cert.kind,
               "confidence": cert.confidence, "r_S": tr["r_S"], "d_S": tr["d_S"], "e_S": tr["e_S"],
               "KL": tr["KL"], "m": cert.m, "delta": cert.delta, "seconds": self.seconds,
               "skipped_steps": self.result.skipped_steps}
        for k in ("r_upper", "d_lower", "e_star", "d_star"):
            out[k] = c.get(k, "")
        return out


def run_algorithm(vs: VoterSplit, algorithm: str, cfg: TrainConfig, dataset: str, seed: int) -> RunResult:
    t0 = time.perf_counter()
    res = learn(algorithm, vs.train, Posterior.uniform(vs.train.n_voters), replace(cfg, seed=seed))
    secs = time.perf_counter() - t0
    return RunResult(dataset, canonical_algorithm(algorithm), seed, mv_risk(vs.test, res.posterior), res, secs)


@dataclass
class ExperimentReport:
    runs: list[RunResult]

    def rows(self) -> list[dict]:
        return [r.row() for r in sorted(self.runs, key=lambda r: (r.dataset, r.algorithm, r.seed))]

    def write_csv(self, path) -> None:
        with open(Path(path), "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS)
            w.writeheader()
            for row in self.rows():
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def read_report(path) -> list[dict]:
    with open(Path(path), newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def recompute_row(row: dict) -> float:
    """Certificate value from a report row's components alone."""
    comps = {k: float(row[k]) for k in ("r_S", "d_S", "e_S", "r_upper", "d_lower", "e_star", "d_star")
             if row.get(k) not in (None, "")}
    cert = bounds.BoundCertificate(float(row["bound"]), row["kind"], float(row["delta"]), int(row["m"]), comps,
                                   degenerate=float(row["bound"]) >= 1.0)
    return bounds.recompute_value(cert)


def cl_grid(n: int = PLOT_GRID) -> list[tuple[float, float, float]]:
    """C-bound level values on the admissible (e, d) triangle: e, d >= 0 and 2e + d <= 1."""
    out = []
    for e in np.linspace(0.0, 0.5, n):
        for d in np.linspace(0.0, 1.0, n):
            if 2.0 * e + d <= 1.0 + 1e-12:
                out.append((float(e), float(d), float(edmax.cl(e, d))))
    return out


def _cell(args):
    name, seed, cfg = args
    data = resolve_dataset(name, cfg.label_column, cfg.has_header)
    vs = prepare_voters(data, seed, cfg.n_voters, cfg.test_fraction, cfg.voter_fraction, cfg.feature_sampling)
    prior = moments(vs.train, Posterior.uniform(vs.train.n_voters))
    runs = [run_algorithm(vs, a, cfg.train, name, seed) for a in cfg.algorithms]
    return name, seed, prior, runs


def _label(name: str) -> str:
    return Path(name).stem if Path(name).suffix else name


def run_experiment(cfg: ExperimentConfig, out_dir) -> ExperimentReport:
    """Run every dataset x seed x algorithm cell and write the report, traces and plot data."""
    out = Path(out_dir)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    (out / "plot").mkdir(exist_ok=True)
    jobs = [(name, seed, cfg) for name in cfg.datasets for seed in cfg.seeds]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            cells = list(pool.map(_cell, jobs))
    else:
        cells = [_cell(j) for j in jobs]

    runs, scatter = [], []
    for name, seed, prior, cell_runs in sorted(cells, key=lambda c: (_label(c[0]), c[1])):
        label = _label(name)
        scatter.append((label, seed, "prior", prior.e, prior.d, bounds.empirical_cbound(prior)))
        for r in cell_runs:
            r.dataset = label
            runs.append(r)
            write_trace(r.result.trace, out / "traces" / f"{label}_{r.algorithm}_seed{seed}.csv")
            last = r.result.trace[-1]
            c_s = bounds.empirical_cbound(EmpiricalMoments(last["r_S"], last["d_S"], last["e_S"]))
            scatter.append((label, seed, r.algorithm, last["e_S"], last["d_S"], c_s))
    report = ExperimentReport(runs)
    report.write_csv(out / "report.csv")
    with open(out / "plot" / "scatter.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(("dataset", "seed", "posterior", "e_S", "d_S", "C_S"))
        w.writerows((a, b, c, repr(float(e)), repr(float(d)), repr(float(v))) for a, b, c, e, d, v in scatter)
    with open(out / "plot" / "cbound_grid.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(("e", "d", "C"))
        w.writerows((repr(e), repr(d), repr(v)) for e, d, v in cl_grid())
    return report


def summarize(rows: list[dict]) -> str:
    lines = [f"{'dataset':<14}{'alg':<6}{'seed':>5}{'risk':>8}{'bound':>8}"]
    for row in rows:
        lines.append(f"{row['dataset']:<14}{row['algorithm']:<6}{int(row['seed']):>5}"
                     f"{float(row['test_mv_risk']):>8.3f}{float(row['bound']):>8.3f}")
    return "\n".join(lines)


def isclose_row(row: dict, tol: float = 1e-9) -> bool:
    return math.isclose(recompute_row(row), float(row["bound"]), rel_tol=0.0, abs_tol=tol)

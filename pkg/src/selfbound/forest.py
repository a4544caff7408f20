"""Voter set: fully grown Gini trees with random feature sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset

FOREST_FORMAT = "selfbound-forest v1"
DEFAULT_N_VOTERS = 100


@dataclass(frozen=True)
class DecisionTree:
    """Binary tree stored as parallel arrays in preorder.

    Internal nodes route ``x[feature] <= threshold`` to ``left``; leaves have
    ``feature == -1`` and carry ``label``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    label: np.ndarray
    feature_subset: tuple[int, ...]

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def is_constant(self) -> bool:
        return self.n_nodes == 1

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim != 2:
            raise ValueError("expected a 2-d feature matrix")
        used = self.feature[self.feature >= 0]
        if used.size and used.max() >= x.shape[1]:
            raise ValueError(f"tree uses feature {used.max()} but data has {x.shape[1]} features")
        node = np.zeros(x.shape[0], dtype=np.int64)
        rows = np.arange(x.shape[0])
        while True:
            f = self.feature[node]
            active = f >= 0
            if not active.any():
                break
            r, n = rows[active], node[active]
            go_left = x[r, f[active]] <= self.threshold[n]
            node[active] = np.where(go_left, self.left[n], self.right[n])
        return self.label[node].astype(np.int8)


@dataclass(frozen=True)
class PredictionMatrix:
    """n_voters x m_examples matrix of voter outputs in {-1, +1}, with the true labels."""

    entries: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.entries)
        y = np.asarray(self.labels)
        if h.ndim != 2 or y.ndim != 1:
            raise ValueError("entries must be 2-d and labels 1-d")
        if h.shape[1] != y.shape[0]:
            raise ValueError(f"{h.shape[1]} columns but {y.shape[0]} labels")
        if h.shape[0] < 1 or h.shape[1] < 1:
            raise ValueError("prediction matrix must be nonempty")
        if not (np.all(np.isin(h, (-1, 1))) and np.all(np.isin(y, (-1, 1)))):
            raise ValueError("entries and labels must be -1 or +1")
        h = h.astype(np.int8)
        y = y.astype(np.int8)
        h.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "entries", h)
        object.__setattr__(self, "labels", y)
        # cached indicator matrices used by every statistic
        err = (h != y).astype(float)
        pos = (h == 1).astype(float)
        err.flags.writeable = False
        pos.flags.writeable = False
        object.__setattr__(self, "errors", err)
        object.__setattr__(self, "positives", pos)

    @property
    def n_voters(self) -> int:
        return self.entries.shape[0]

    @property
    def m(self) -> int:
        return self.entries.shape[1]

    def voter_risks(self) -> np.ndarray:
        return self.errors.mean(axis=1)


def _best_split(x: np.ndarray, y: np.ndarray, features) -> tuple[int, float] | None:
    """Split maximizing sum_child (n_pos^2 + n_neg^2) / n_child, i.e. minimizing weighted Gini.

    Ties go to the lowest feature index, then the lowest threshold.
    """
    n = len(y)
    best, best_score = None, -math.inf
    pos = (y == 1).astype(float)
    for f in features:
        order = np.argsort(x[:, f], kind="stable")
        v = x[order, f]
        cand = np.flatnonzero(v[1:] != v[:-1])
        if cand.size == 0:
            continue
        cpos = np.cumsum(pos[order])
        n_l = cand + 1.0
        a_l = cpos[cand]
        b_l = n_l - a_l
        n_r = n - n_l
        a_r = cpos[-1] - a_l
        b_r = n_r - a_r
        score = (a_l**2 + b_l**2) / n_l + (a_r**2 + b_r**2) / n_r
        k = int(np.argmax(score))
        tol = 1e-12 * n
        if score[k] > best_score + tol:
            best_score = score[k]
            best = (int(f), 0.5 * (v[cand[k]] + v[cand[k] + 1]))
    return best


def _leaf_label(y: np.ndarray) -> int:
    return 1 if np.sum(y == 1) >= np.sum(y == -1) else -1


def grow_tree(x: np.ndarray, y: np.ndarray, feature_subset, split_rng: np.random.Generator | None = None,
              split_k: int | None = None) -> DecisionTree:
    """Grow until every leaf is label-pure or no split on the subset separates its rows.

    With `split_rng`, each node draws `split_k` candidate features from the
    subset and falls back to the whole subset when none of them separates.
    """
    feats = tuple(sorted(int(f) for f in feature_subset))
    feature, threshold, left, right, label = [], [], [], [], []

    def build(idx: np.ndarray) -> int:
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        yi = y[idx]
        label.append(_leaf_label(yi))
        if np.all(yi == yi[0]):
            return node
        split = None
        if split_rng is not None:
            cand = sorted(int(f) for f in split_rng.choice(feats, size=min(split_k, len(feats)), replace=False))
            split = _best_split(x[idx], yi, cand)
        if split is None:
            split = _best_split(x[idx], yi, feats)
        if split is None:
            return node
        f, t = split
        mask = x[idx, f] <= t
        feature[node] = f
        threshold[node] = t
        left[node] = build(idx[mask])
        right[node] = build(idx[~mask])
        return node

    build(np.arange(len(y)))
    return DecisionTree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=float),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        label=np.array(label, dtype=np.int8),
        feature_subset=feats,
    )


def n_subset_features(d: int) -> int:
    return min(d, math.ceil(math.sqrt(d)))


def train_forest(voter_train: Dataset, n_voters: int = DEFAULT_N_VOTERS, seed: int = 0,
                 feature_sampling: str = "split") -> list[DecisionTree]:
    """Train `n_voters` trees on the whole voter set (no bootstrap).

    feature_sampling="tree": each tree sees ceil(sqrt(d)) distinct features
    drawn uniformly without replacement. "split": every tree sees all
    features and each node draws ceil(sqrt(d)) candidates (random-forest
    style). Every tree has its own sub-seed, so trees could be grown in parallel.
    """
    if feature_sampling not in ("tree", "split"):
        raise ValueError(f"feature_sampling must be 'tree' or 'split', got {feature_sampling!r}")
    if n_voters < 1:
        raise ValueError("n_voters must be at least 1")
    d = voter_train.d
    if d < 1:
        raise ValueError("need at least one feature")
    k = n_subset_features(d)
    children = np.random.SeedSequence(int(seed)).spawn(n_voters)
    trees = []
    for ss in children:
        rng = np.random.Generator(np.random.PCG64(ss))
        if feature_sampling == "tree":
            subset = rng.choice(d, size=k, replace=False)
            trees.append(grow_tree(voter_train.features, voter_train.labels, subset))
        else:
            trees.append(grow_tree(voter_train.features, voter_train.labels, range(d), rng, k))
    return trees


def predict_matrix(trees, data: Dataset) -> PredictionMatrix:
    trees = list(trees)
    if not trees:
        raise ValueError("empty tree collection")
    entries = np.vstack([t.predict(data.features) for t in trees])
    return PredictionMatrix(entries, data.labels)


# --- serialization ---------------------------------------------------------

def _tree_tokens(t: DecisionTree) -> list[str]:
    out = []

    def walk(n):
        if t.feature[n] < 0:
            out.append(f"L {int(t.label[n])}")
        else:
            out.append(f"S {int(t.feature[n])} {float(t.threshold[n])!r}")
            walk(t.left[n])
            walk(t.right[n])

    walk(0)
    return out


def dumps_forest(trees, meta: dict | None = None) -> str:
    lines = [FOREST_FORMAT]
    for k, v in sorted((meta or {}).items()):
        lines.append(f"# {k}={v}")
    lines.append(f"n_trees {len(trees)}")
    for i, t in enumerate(trees):
        subset = ",".join(str(f) for f in t.feature_subset)
        lines.append(f"tree {i} features={subset} nodes={' ; '.join(_tree_tokens(t))}")
    return "\n".join(lines) + "\n"


def _parse_tree(tokens: list[str], subset) -> DecisionTree:
    feature, threshold, left, right, label = [], [], [], [], []
    pos = 0

    def read() -> int:
        nonlocal pos
        if pos >= len(tokens):
            raise ValueError("truncated tree record")
        parts = tokens[pos].split()
        pos += 1
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        label.append(1)
        if parts[0] == "L":
            label[node] = int(parts[1])
            return node
        if parts[0] != "S":
            raise ValueError(f"bad node token {tokens[pos - 1]!r}")
        feature[node] = int(parts[1])
        threshold[node] = float(parts[2])
        left[node] = read()
        right[node] = read()
        return node

    read()
    if pos != len(tokens):
        raise ValueError("trailing tokens in tree record")
    return DecisionTree(np.array(feature, dtype=np.int64), np.array(threshold, dtype=float),
                        np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                        np.array(label, dtype=np.int8), tuple(subset))


def loads_forest(text: str) -> list[DecisionTree]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != FOREST_FORMAT:
        raise ValueError(f"not a {FOREST_FORMAT!r} file")
    body = [ln for ln in lines[1:] if not ln.startswith("#")]
    n = int(body[0].split()[1])
    trees = []
    for ln in body[1:]:
        head, nodes = ln.split(" nodes=", 1)
        subset_str = head.split("features=", 1)[1]
        subset = tuple(int(s) for s in subset_str.split(",") if s)
        trees.append(_parse_tree([t.strip() for t in nodes.split(";")], subset))
    if len(trees) != n:
        raise ValueError(f"expected {n} trees, found {len(trees)}")
    return trees


def save_forest(trees, path, meta: dict | None = None) -> None:
    Path(path).write_text(dumps_forest(trees, meta), encoding="utf-8")


def load_forest(path) -> list[DecisionTree]:
    return loads_forest(Path(path).read_text(encoding="utf-8"))


def save_matrix(pm: PredictionMatrix, path) -> None:
    """CSV with the labels on the first row and one voter per following row."""
    rows = [pm.labels] + list(pm.entries)
    Path(path).write_text("\n".join(",".join(str(int(v)) for v in r) for r in rows) + "\n", encoding="utf-8")


def load_matrix(path) -> PredictionMatrix:
    arr = np.loadtxt(path, delimiter=",", dtype=np.int64, ndmin=2)
    if arr.shape[0] < 2:
        raise ValueError(f"{path}: need a label row and at least one voter row")
    return PredictionMatrix(arr[1:], arr[0])

"""Built-in datasets: the tic-tac-toe endgame set and a seeded synthetic task."""

from __future__ import annotations

import numpy as np

from .data import Dataset

_LINES = ((0, 1, 2), (3, 4, 5), (6, 7, 8), (0, 3, 6), (1, 4, 7), (2, 5, 8), (0, 4, 8), (2, 4, 6))


def _winner(board) -> int:
    for a, b, c in _LINES:
        if board[a] != 0 and board[a] == board[b] == board[c]:
            return board[a]
    return 0


def tictactoe() -> Dataset:
    """All 958 distinct terminal boards of games where x moves first.

    Squares are encoded x=+1, o=-1, blank=0 (row-major); the label is +1 iff x
    has three in a row.
    """
    finals = set()

    def play(board, player):
        if _winner(board) or 0 not in board:
            finals.add(tuple(board))
            return
        for i in range(9):
            if board[i] == 0:
                board[i] = player
                play(board, -player)
                board[i] = 0

    play([0] * 9, 1)
    boards = sorted(finals, reverse=True)
    x = np.array(boards, dtype=float)
    y = np.array([1 if _winner(b) == 1 else -1 for b in boards])
    return Dataset(x, y, "tictactoe")


class SyntheticTask:
    """Fixed two-class distribution: uniform inputs, nonlinear ground truth, label noise.

    The rule depends only on the constructor arguments, so independent
    samples from the same task share one distribution; a large sample can
    stand in for D.
    """

    def __init__(self, seed: int = 0, d: int = 10, noise: float = 0.05, informative: int = 2, wiggle: float = 0.5):
        rng = np.random.Generator(np.random.PCG64([int(seed), 7]))
        self.seed, self.d, self.noise, self.informative, self.wiggle = int(seed), d, noise, informative, wiggle
        self.w = rng.normal(size=informative)
        self.centers = rng.uniform(-1.0, 1.0, size=informative)
        # balance the classes using a reference sample
        self.offset = float(np.median(self._score(rng.uniform(-1.0, 1.0, size=(20_000, d)))))

    def _score(self, x):
        z = x[:, : self.informative]
        return z @ self.w + self.wiggle * np.sin(3.0 * (z - self.centers)).sum(axis=1)

    def sample(self, m: int, stream: int = 0, name: str | None = None) -> Dataset:
        rng = np.random.Generator(np.random.PCG64([self.seed, 11, int(stream)]))
        x = rng.uniform(-1.0, 1.0, size=(m, self.d))
        y = np.where(self._score(x) > self.offset, 1, -1)
        y = np.where(rng.uniform(size=m) < self.noise, -y, y)
        return Dataset(x, y, name or f"synthetic{self.seed}")


def synthetic(m: int, d: int = 10, seed: int = 0, noise: float = 0.05, informative: int = 2) -> Dataset:
    return SyntheticTask(seed, d, noise, informative).sample(m)


def sklearn_dataset(name: str) -> Dataset:
    """Small UCI-style binary tasks shipped with scikit-learn (optional dependency).

    ``wdbc`` (breast cancer) and ``digitsAvsB`` (e.g. ``digits1vs7``).
    """
    from sklearn import datasets as skd

    if name == "wdbc":
        b = skd.load_breast_cancer()
        return Dataset(b.data, np.where(b.target == 1, 1, -1), name)
    if name.startswith("digits") and "vs" in name:
        a, c = (int(s) for s in name[len("digits"):].split("vs"))
        b = skd.load_digits()
        keep = np.isin(b.target, (a, c))
        return Dataset(b.data[keep], np.where(b.target[keep] == a, 1, -1), name)
    raise ValueError(f"unknown scikit-learn dataset {name!r}")


def builtin(name: str) -> Dataset:
    if name == "tictactoe":
        return tictactoe()
    if name.startswith("synthetic"):
        seed = int(name[len("synthetic"):] or 0)
        return synthetic(1000, seed=seed)
    return sklearn_dataset(name)


BUILTIN_NAMES = ("tictactoe", "synthetic<seed>", "wdbc", "digits<a>vs<b>")

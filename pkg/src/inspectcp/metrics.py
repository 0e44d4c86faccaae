"""Distances between changepoint sets and agreement of induced segmentations."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import InvalidInputError

__all__ = [
    "Segmentation",
    "hausdorff",
    "wasserstein1",
    "adjusted_rand_index",
    "segment_labels",
]


@dataclass(frozen=True)
class Segmentation:
    """A partition of ``1..n`` by changepoints (last index of each left segment)."""

    n: int
    changepoints: tuple[int, ...] = ()

    def __post_init__(self):
        cps = tuple(int(z) for z in self.changepoints)
        object.__setattr__(self, "changepoints", cps)
        if self.n < 1:
            raise InvalidInputError(f"n must be positive, got {self.n}")
        if any(b <= a for a, b in zip(cps, cps[1:])):
            raise InvalidInputError("changepoints must be strictly increasing")
        if cps and (cps[0] < 1 or cps[-1] > self.n - 1):
            raise InvalidInputError(f"changepoints must lie in [1, {self.n - 1}]")

    @property
    def boundaries(self) -> np.ndarray:
        return np.array((0, *self.changepoints, self.n))


def segment_labels(seg: Segmentation) -> np.ndarray:
    """Label of time ``t`` (1..n) is the number of changepoints strictly before ``t``."""
    t = np.arange(1, seg.n + 1)
    return np.searchsorted(np.asarray(seg.changepoints, dtype=int), t, side="left")


def hausdorff(A: Sequence[float], B: Sequence[float]) -> float:
    """Hausdorff distance between two nonempty finite subsets of the real line."""
    a = np.asarray(A, dtype=float).ravel()
    b = np.asarray(B, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise InvalidInputError("Hausdorff distance needs two nonempty sets")
    d = np.abs(a[:, None] - b[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def _as_measure(P):
    if isinstance(P, tuple) and len(P) == 2 and np.ndim(P[0]) == 1 and np.ndim(P[1]) == 1:
        atoms = np.asarray(P[0], dtype=float)
        weights = np.asarray(P[1], dtype=float)
    else:
        atoms = np.asarray(P, dtype=float).ravel()
        if atoms.size == 0:
            raise InvalidInputError("empty measure")
        weights = np.full(atoms.size, 1.0 / atoms.size)
    if atoms.shape != weights.shape or atoms.size == 0:
        raise InvalidInputError("atoms and weights must be nonempty and of equal length")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise InvalidInputError(f"weights must be nonnegative with total mass 1, got {weights.sum()!r}")
    order = np.argsort(atoms, kind="stable")
    return atoms[order], weights[order]


def wasserstein1(P, Q) -> float:
    """L1-Wasserstein distance between two discrete probability measures on the line.

    Each measure is either a sequence of atoms (equal weights) or a pair
    ``(atoms, weights)``.  Computed through the quantile coupling: both quantile
    functions are step functions on [0, 1], and the distance is the integral of
    their absolute difference.
    """
    xa, wa = _as_measure(P)
    xb, wb = _as_measure(Q)
    ca = np.cumsum(wa)
    cb = np.cumsum(wb)
    ca[-1] = cb[-1] = 1.0
    levels = np.union1d(ca, cb)
    lo = np.concatenate(([0.0], levels[:-1]))
    mid = 0.5 * (lo + levels)
    qa = xa[np.minimum(np.searchsorted(ca, mid, side="left"), xa.size - 1)]
    qb = xb[np.minimum(np.searchsorted(cb, mid, side="left"), xb.size - 1)]
    return float(np.sum((levels - lo) * np.abs(qa - qb)))


def _pairs(x):
    x = np.asarray(x, dtype=float)
    return x * (x - 1) / 2


def adjusted_rand_index(S1: Segmentation, S2: Segmentation) -> float:
    """Adjusted Rand index of the labelings induced by two segmentations.

    When the index is degenerate (maximum equals expected index, e.g. both
    segmentations have a single segment) the result is 1 for identical
    labelings and 0 otherwise.
    """
    if S1.n != S2.n:
        raise InvalidInputError(f"segmentations have different lengths: {S1.n} vs {S2.n}")
    b1 = S1.boundaries
    b2 = S2.boundaries
    # contingency entry (i, j) = overlap length of segment i of S1 and segment j of S2
    lo = np.maximum(b1[:-1, None], b2[None, :-1])
    hi = np.minimum(b1[1:, None], b2[None, 1:])
    table = np.clip(hi - lo, 0, None)
    index = _pairs(table).sum()
    a = _pairs(np.diff(b1)).sum()
    b = _pairs(np.diff(b2)).sum()
    total = _pairs(S1.n)
    expected = a * b / total if total > 0 else 0.0
    max_index = 0.5 * (a + b)
    if max_index == expected:
        return 1.0 if S1.changepoints == S2.changepoints else 0.0
    return float((index - expected) / (max_index - expected))

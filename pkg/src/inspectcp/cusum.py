"""CUSUM transformation of p x n data matrices and single-change mean structure.

Rows are coordinates, columns are time.  The CUSUM of a p x n matrix is a
p x (n-1) matrix whose column ``t`` (1-based) contrasts the means of columns
``1..t`` and ``t+1..n`` with the scaling ``sqrt(t (n - t) / n)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidInputError

__all__ = [
    "PiecewiseMeanSpec",
    "as_observations",
    "cusum_transform",
    "cusum_from_prefix",
    "gamma_vector",
    "prefix_sums",
]


def as_observations(X, *, min_cols: int = 2) -> np.ndarray:
    """Validate and return ``X`` as a finite 2-d float array."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[np.newaxis, :]
    if X.ndim != 2:
        raise InvalidInputError(f"expected a 2-d p x n matrix, got shape {X.shape}")
    if X.shape[0] < 1:
        raise InvalidInputError("need at least one coordinate (p >= 1)")
    if X.shape[1] < min_cols:
        raise InvalidInputError(
            f"need at least {min_cols} time points, got n = {X.shape[1]}"
        )
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("observation matrix contains non-finite entries")
    return X


def prefix_sums(X) -> np.ndarray:
    """Row-wise partial sums of the row-centred data, with a leading zero column.

    Accumulation happens in ``np.longdouble``; the result is returned as float64
    because centred partial sums are O(sqrt(n)) and lose nothing of interest in
    the downcast.  Interval CUSUMs can be read off this table with
    :func:`cusum_from_prefix` without re-accumulating.
    """
    X = np.asarray(X, dtype=float)
    wide = X.astype(np.longdouble)
    wide -= wide.mean(axis=1, keepdims=True)
    out = np.zeros((X.shape[0], X.shape[1] + 1))
    out[:, 1:] = np.cumsum(wide, axis=1)
    return out


def cusum_from_prefix(prefix: np.ndarray, s: int, e: int) -> np.ndarray:
    """CUSUM of columns ``s+1..e`` (1-based), i.e. ``X[:, s:e]``, from a prefix table."""
    m = e - s
    if m < 2:
        raise InvalidInputError(f"interval ({s}, {e}] has fewer than 2 points")
    t = np.arange(1, m)
    partial = prefix[:, s + 1 : e] - prefix[:, [s]]
    total = prefix[:, [e]] - prefix[:, [s]]
    scale = np.sqrt(m / (t * (m - t)))
    return scale * (t / m * total - partial)


def cusum_transform(X) -> np.ndarray:
    """CUSUM transformation of a p x n matrix.

    Entry ``(j, t)`` of the result, for ``1 <= t <= n-1``, is::

        sqrt(t (n-t) / n) * (mean(X[j, t:]) - mean(X[j, :t]))

    Parameters
    ----------
    X : array_like, shape (p, n)
        Observation matrix with ``n >= 2``.  A 1-d input is treated as p = 1.

    Returns
    -------
    numpy.ndarray, shape (p, n-1)
    """
    X = as_observations(X)
    return cusum_from_prefix(prefix_sums(X), 0, X.shape[1])


def gamma_vector(n: int, z: int) -> np.ndarray:
    """Row profile of the CUSUM of a unit mean change at ``z``.

    For a mean matrix with a single change ``theta`` after time ``z``, the CUSUM
    equals ``outer(theta, gamma_vector(n, z))``.  The profile peaks at ``t = z``.
    """
    n = int(n)
    z = int(z)
    if n < 2:
        raise InvalidInputError(f"n must be >= 2, got {n}")
    if not 1 <= z <= n - 1:
        raise InvalidInputError(f"z must lie in [1, n-1] = [1, {n - 1}], got {z}")
    t = np.arange(1, n, dtype=float)
    left = np.sqrt(t / (n * (n - t))) * (n - z)
    right = np.sqrt((n - t) / (n * t)) * z
    return np.where(t <= z, left, right)


@dataclass(frozen=True)
class PiecewiseMeanSpec:
    """Ground-truth piecewise-constant mean of a p x n series.

    ``changepoints`` are the last indices (1-based) of each left segment, so
    segment ``i`` covers times ``z_i + 1 .. z_{i+1}`` with ``z_0 = 0`` and
    ``z_{nu+1} = n``.  ``segment_means`` has shape ``(nu + 1, p)``.

    ``column_changepoints`` optionally overrides the changepoint location per
    coordinate (used for asynchronous-change simulations); it has shape
    ``(nu, p)``.
    """

    n: int
    p: int
    changepoints: tuple[int, ...]
    segment_means: np.ndarray
    column_changepoints: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        means = np.atleast_2d(np.asarray(self.segment_means, dtype=float))
        object.__setattr__(self, "segment_means", means)
        object.__setattr__(self, "changepoints", tuple(int(z) for z in self.changepoints))
        z = self.changepoints
        if self.n < 2 or self.p < 1:
            raise InvalidInputError(f"need n >= 2 and p >= 1, got n={self.n}, p={self.p}")
        if means.shape != (len(z) + 1, self.p):
            raise InvalidInputError(
                f"segment_means must have shape ({len(z) + 1}, {self.p}), got {means.shape}"
            )
        if any(b <= a for a, b in zip(z, z[1:])):
            raise InvalidInputError("changepoints must be strictly increasing")
        if z and not (1 <= z[0] and z[-1] <= self.n - 1):
            raise InvalidInputError("changepoints must lie in [1, n-1]")
        if np.any(np.all(np.diff(means, axis=0) == 0, axis=1)):
            raise InvalidInputError("consecutive segment means must differ")

    @property
    def nu(self) -> int:
        return len(self.changepoints)

    @property
    def thetas(self) -> np.ndarray:
        """Change vectors, shape ``(nu, p)``."""
        return np.diff(self.segment_means, axis=0)

    @property
    def sparsity(self) -> int:
        if self.nu == 0:
            return 0
        return int(np.max(np.count_nonzero(self.thetas, axis=1)))

    @property
    def tau(self) -> float:
        bounds = np.array((0, *self.changepoints, self.n))
        return float(np.min(np.diff(bounds))) / self.n

    @property
    def vartheta(self) -> float:
        if self.nu == 0:
            return 0.0
        return float(np.min(np.linalg.norm(self.thetas, axis=1)))

    def mean_matrix(self) -> np.ndarray:
        """The p x n mean matrix."""
        t = np.arange(1, self.n + 1)
        if self.column_changepoints is None:
            seg = np.searchsorted(np.asarray(self.changepoints), t, side="left")
            return self.segment_means[seg].T.copy()
        # per-coordinate changepoints: segment index of (j, t) is #{i: z_ij < t}
        zc = np.asarray(self.column_changepoints)
        seg = (zc[:, :, None] < t[None, None, :]).sum(axis=0)
        return np.take_along_axis(self.segment_means.T, seg, axis=1)

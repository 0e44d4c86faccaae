"""Single changepoint estimation by sparse projection of the CUSUM matrix."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cusum import as_observations, cusum_transform
from .exceptions import InvalidInputError, ThresholdTooLargeError
from .projection import ProjectionSolution, SolverConfig, solve

__all__ = [
    "HAMPEL_CONSTANT",
    "NoiseProfile",
    "SingleDetection",
    "default_lambda",
    "estimate_noise_mad",
    "normalize",
    "inspect_single",
    "inspect_single_split",
    "split_halves",
    "project_and_locate",
]

HAMPEL_CONSTANT = 1.05
LAMBDA_FLOOR = 1e-6

FULL = "full"
SPLIT = "split"


@dataclass(frozen=True)
class NoiseProfile:
    sigma_hat: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.sigma_hat, dtype=float)
        if s.ndim != 1 or np.any(s < 0):
            raise InvalidInputError("sigma_hat must be a 1-d nonnegative vector")
        object.__setattr__(self, "sigma_hat", s)


@dataclass
class SingleDetection:
    """Output of a single-changepoint run.

    ``z_hat`` is 1-based on the original time axis.  ``projected_cusum`` is the
    projected CUSUM series that was maximised (length ``n-1`` for the full
    variant, ``n1-1`` for the split variants).
    """

    z_hat: int
    t_max: float
    v_hat: np.ndarray
    projected_cusum: np.ndarray
    variant: str
    solution: ProjectionSolution | None = None
    lam: float | None = None
    diagnostics: list[str] = field(default_factory=list)
    precision: object | None = None


def default_lambda(p: int, n: int) -> float:
    """``sqrt(log(p log n) / 2)`` for unit-variance data, floored at 1e-6."""
    arg = p * math.log(n) if n > 1 else 0.0
    if arg <= 1.0:
        return LAMBDA_FLOOR
    return max(math.sqrt(0.5 * math.log(arg)), LAMBDA_FLOOR)


def estimate_noise_mad(X) -> NoiseProfile:
    """Per-row noise scale from the MAD of first differences.

    ``sigma_j = 1.05 * median(|D_j - median(D_j)|)`` with ``D_j`` the first
    differences of row ``j``.  The factor 1.05 ~ 1.4826 / sqrt(2) turns the raw
    MAD of differences into a Gaussian standard deviation of the levels.
    """
    X = as_observations(X, min_cols=3)
    D = np.diff(X, axis=1)
    med = np.median(D, axis=1, keepdims=True)
    mad = np.median(np.abs(D - med), axis=1)
    return NoiseProfile(HAMPEL_CONSTANT * mad)


def normalize(X, prof: NoiseProfile) -> tuple[np.ndarray, list[int]]:
    """Divide each row by its scale estimate.

    Rows whose scale is zero are returned unchanged; their indices are listed in
    the second element of the result.
    """
    X = as_observations(X)
    sigma = prof.sigma_hat
    if sigma.shape != (X.shape[0],):
        raise InvalidInputError(
            f"noise profile has {sigma.shape[0]} entries but X has {X.shape[0]} rows"
        )
    zero = np.flatnonzero(sigma == 0)
    div = np.where(sigma == 0, 1.0, sigma)
    return X / div[:, None], zero.tolist()


def _resolve(cfg: SolverConfig | None, p: int, n: int) -> SolverConfig:
    cfg = cfg or SolverConfig()
    if cfg.lam is None:
        return cfg.with_lambda(default_lambda(p, n))
    return cfg


def project_and_locate(T_search: np.ndarray, v: np.ndarray) -> tuple[int, float, np.ndarray]:
    """Index (1-based) and value of the largest absolute projected CUSUM.

    Ties go to the smallest index.
    """
    proj = v @ T_search
    absproj = np.abs(proj)
    idx = int(np.argmax(absproj))
    return idx + 1, float(absproj[idx]), proj


def inspect_single(X, cfg: SolverConfig | None = None, method: str = "soft") -> SingleDetection:
    """Estimate one changepoint from the full data.

    CUSUM-transform ``X``, solve the sparse projection problem with ``method``
    (``"soft"`` for the Frobenius ball, ``"admm"`` for the nuclear ball), take
    the leading left singular vector ``v`` of the optimiser and return the
    location maximising ``|v^T T_t|``.  When ``cfg.lam`` is ``None`` the default
    ``sqrt(log(p log n) / 2)`` is used, which presumes unit-scale rows.

    Raises
    ------
    ThresholdTooLargeError
        If no CUSUM entry exceeds lambda (no direction can be estimated).
    """
    X = as_observations(X)
    p, n = X.shape
    cfg = _resolve(cfg, p, n)
    T = cusum_transform(X)
    sol = solve(T, cfg, method)
    z_hat, t_max, proj = project_and_locate(T, sol.v_hat)
    diagnostics = [] if sol.converged else ["projection solver did not converge"]
    return SingleDetection(z_hat, t_max, sol.v_hat, proj, FULL, sol, cfg.lam, diagnostics)


def split_halves(X) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Odd and even columns of ``X`` (1-based), dropping the last column when n is odd."""
    X = as_observations(X, min_cols=4)
    notes = []
    if X.shape[1] % 2:
        X = X[:, :-1]
        notes.append("odd n: final column dropped before sample splitting")
    return X[:, 0::2], X[:, 1::2], notes


def inspect_single_split(
    X, cfg: SolverConfig | None = None, method: str = "soft"
) -> SingleDetection:
    """Sample-splitting variant: direction from odd columns, location from even ones.

    The returned ``z_hat`` is twice the location found on the even-column
    series, so it is always even.
    """
    X1, X2, notes = split_halves(X)
    p, n1 = X1.shape
    cfg = _resolve(cfg, p, n1)
    sol = solve(cusum_transform(X1), cfg, method)
    z2, t_max, proj = project_and_locate(cusum_transform(X2), sol.v_hat)
    if not sol.converged:
        notes.append("projection solver did not converge")
    return SingleDetection(2 * z2, t_max, sol.v_hat, proj, SPLIT, sol, cfg.lam, notes)


def try_inspect_single(X, cfg, method="soft") -> SingleDetection | None:
    """:func:`inspect_single`, returning ``None`` when no direction exists."""
    try:
        return inspect_single(X, cfg, method)
    except ThresholdTooLargeError:
        return None

"""Sparse projection directions from a CUSUM matrix.

Two convex relaxations of the k-sparse leading left singular vector problem are
provided: the nuclear-norm ball (solved by ADMM) and the Frobenius ball (closed
form via soft-thresholding).  Both return a :class:`ProjectionSolution` whose
``v_hat`` is the leading left singular vector of the optimiser.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    CombinatorialGuardError,
    InvalidInputError,
    SolverError,
    ThresholdTooLargeError,
)

__all__ = [
    "SolverConfig",
    "ProjectionSolution",
    "NUCLEAR_BALL",
    "L2_BALL",
    "BRUTE_FORCE",
    "soft_threshold",
    "project_simplex",
    "project_nuclear_ball",
    "nuclear_norm",
    "admm_solve",
    "closed_form_s2",
    "leading_left_singular_vector",
    "brute_force_sparse_svd",
    "solve",
    "angle",
]

NUCLEAR_BALL = "nuclear_ball"
L2_BALL = "l2_ball"
BRUTE_FORCE = "brute_force_k_sparse"

# method tags accepted on the command line / in configs
_METHOD_ALIASES = {
    "soft": L2_BALL,
    "s2": L2_BALL,
    L2_BALL: L2_BALL,
    "admm": NUCLEAR_BALL,
    "s1": NUCLEAR_BALL,
    NUCLEAR_BALL: NUCLEAR_BALL,
}

MAX_SUBSETS = 10**6


def resolve_method(method: str) -> str:
    try:
        return _METHOD_ALIASES[method]
    except KeyError:
        raise InvalidInputError(
            f"unknown method {method!r}; expected one of {sorted(_METHOD_ALIASES)}"
        ) from None


@dataclass(frozen=True)
class SolverConfig:
    """Regularisation and stopping parameters.

    ``lam`` of ``None`` means "use the default rule" and is resolved by the
    single-changepoint routines from the data dimensions.  ``primal_dual_tol``
    is relative: ADMM stops once ``max|Y - Z| <= primal_dual_tol * (1 + max|T|)``.
    ``admm_penalty`` is the augmented-Lagrangian weight; 1 gives the plain
    unit-step iteration, larger values converge in far fewer iterations.
    """

    lam: float | None = None
    primal_dual_tol: float = 1e-4
    max_iterations: int = 10_000
    power_iteration_tol: float = 1e-12
    power_iteration_max: int = 10_000
    admm_penalty: float = 1.0

    def __post_init__(self):
        if self.lam is not None and not (self.lam >= 0 and math.isfinite(self.lam)):
            raise InvalidInputError(f"lambda must be a finite nonnegative number, got {self.lam}")
        if self.primal_dual_tol <= 0 or self.power_iteration_tol <= 0:
            raise InvalidInputError("tolerances must be positive")
        if self.max_iterations < 1 or self.power_iteration_max < 1:
            raise InvalidInputError("iteration limits must be positive")
        if not (self.admm_penalty > 0 and math.isfinite(self.admm_penalty)):
            raise InvalidInputError(f"admm_penalty must be positive, got {self.admm_penalty}")

    def with_lambda(self, lam: float) -> "SolverConfig":
        return dataclasses.replace(self, lam=float(lam))


@dataclass
class ProjectionSolution:
    M_hat: np.ndarray
    v_hat: np.ndarray
    objective: float
    iterations: int
    constraint_set: str
    certificate: float
    converged: bool = True


def soft_threshold(M, lam: float) -> np.ndarray:
    """Entrywise ``sign(M) * max(|M| - lam, 0)``."""
    if lam < 0:
        raise InvalidInputError(f"lambda must be nonnegative, got {lam}")
    M = np.asarray(M, dtype=float)
    return np.sign(M) * np.maximum(np.abs(M) - lam, 0.0)


def project_simplex(d) -> np.ndarray:
    """Euclidean projection of a vector onto the probability simplex.

    Sort-based water filling: find the largest ``rho`` with
    ``u_rho > (sum_{i<=rho} u_i - 1) / rho`` for ``u`` sorted decreasingly and
    shift by that threshold.
    """
    d = np.asarray(d, dtype=float).ravel()
    if d.size == 0:
        raise InvalidInputError("cannot project an empty vector onto the simplex")
    u = np.sort(d)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, d.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    shift = css[rho] / (rho + 1)
    return np.maximum(d - shift, 0.0)


def nuclear_norm(M) -> float:
    return float(np.sum(np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)))


def _gram_spectrum(M: np.ndarray):
    """Singular triplets of ``M`` via the eigendecomposition of the smaller Gram matrix.

    Returns ``(s, V, on_right)`` with singular values in decreasing order.  When
    ``on_right`` the columns of ``V`` are right singular vectors, otherwise left.
    Small singular values are inaccurate (relative to ``s[0]``) at the level of
    ``sqrt(eps)``; callers only rely on the leading ones.
    """
    p, m = M.shape
    on_right = p >= m
    G = M.T @ M if on_right else M @ M.T
    w, V = np.linalg.eigh(G)
    w = w[::-1]
    V = V[:, ::-1]
    s = np.sqrt(np.maximum(w, 0.0))
    return s, V, on_right


def project_nuclear_ball(M, radius: float = 1.0) -> np.ndarray:
    """Projection onto ``{M : ||M||_* <= radius}``.

    The singular values are projected onto the scaled simplex; singular vectors
    are kept.  Only singular values above the water-filling threshold survive,
    so the singular vectors are taken from the Gram eigendecomposition for those
    leading components (cost O(p m min(p, m))).  Near the ball's boundary, where
    the Gram route cannot certify the nuclear norm, a full SVD is used instead.
    """
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise InvalidInputError("cannot project a matrix with non-finite entries")
    if not M.any():
        return M.copy()
    try:
        s, V, on_right = _gram_spectrum(M)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise SolverError(f"eigendecomposition failed: {exc}") from exc
    total = s.sum()
    if abs(total - radius) <= 1e-6 * max(1.0, s[0]) * s.size:
        return _project_nuclear_ball_svd(M, radius)
    if total <= radius:
        return M.copy()
    d = radius * project_simplex(s / radius)
    r = int(np.count_nonzero(d))
    Vr = V[:, :r]
    if on_right:
        U = M @ Vr / s[:r]
        return (U * d[:r]) @ Vr.T
    W = Vr.T @ M / s[:r, None]
    return (Vr * d[:r]) @ W


def _project_nuclear_ball_svd(M: np.ndarray, radius: float) -> np.ndarray:
    try:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"SVD did not converge: {exc}") from exc
    if s.sum() <= radius:
        return M.copy()
    d = radius * project_simplex(s / radius)
    return (U * d) @ Vt


def _objective(T: np.ndarray, M: np.ndarray, lam: float) -> float:
    return float(np.sum(T * M) - lam * np.sum(np.abs(M)))


def leading_left_singular_vector(
    M, tol: float = 1e-12, max_iter: int = 10_000, *, return_info: bool = False
):
    """Unit vector maximising ``||M^T v||_2``, by power iteration.

    Iteration runs on the Gram matrix of the nonzero rows of ``M`` (soft
    thresholded matrices are row-sparse).  The starting vector is proportional
    to the row norms.  The sign is fixed so that the first nonzero entry is
    positive.

    With ``return_info`` the tuple ``(v, iterations, converged)`` is returned.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise InvalidInputError("expected a 2-d matrix")
    row_norms = np.sqrt(np.sum(M * M, axis=1))
    support = np.nonzero(row_norms > 0)[0]
    if support.size == 0:
        raise InvalidInputError("the zero matrix has no leading singular vector")
    Ms = M[support]
    # rescale so the Gram entries stay O(1)
    Ms = Ms / row_norms[support].max()
    if Ms.shape[0] <= Ms.shape[1]:
        G = Ms @ Ms.T

        def apply(x):
            return G @ x
    else:

        def apply(x):
            return Ms @ (Ms.T @ x)

    x = row_norms[support] / np.linalg.norm(row_norms[support])
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        y = apply(x)
        ny = np.linalg.norm(y)
        if ny == 0:
            # start vector orthogonal to the range; fall back to e_1
            y = np.zeros_like(x)
            y[0] = 1.0
            ny = 1.0
        y /= ny
        if np.linalg.norm(y - x) <= tol:
            x = y
            converged = True
            break
        x = y
    v = np.zeros(M.shape[0])
    v[support] = x
    v /= np.linalg.norm(v)
    first = np.flatnonzero(v)[0]
    if v[first] < 0:
        v = -v
    if return_info:
        return v, it, converged
    return v


def closed_form_s2(T, lam: float, cfg: SolverConfig | None = None) -> ProjectionSolution:
    """Maximiser of ``<T, M> - lam ||M||_1`` over the unit Frobenius ball.

    The optimiser is ``soft(T, lam) / ||soft(T, lam)||_F`` and the optimum value
    equals ``||soft(T, lam)||_F``.

    Raises
    ------
    ThresholdTooLargeError
        If ``lam >= max|T|`` so that the soft-thresholded matrix vanishes.
    """
    cfg = cfg or SolverConfig()
    T = np.asarray(T, dtype=float)
    S = soft_threshold(T, lam)
    norm = float(np.linalg.norm(S))
    if norm == 0.0:
        raise ThresholdTooLargeError(
            f"soft-thresholding at lambda={lam:g} zeroes the CUSUM matrix "
            f"(max |T| = {np.max(np.abs(T)) if T.size else 0:g})"
        )
    M = S / norm
    v, its, conv = leading_left_singular_vector(
        M, cfg.power_iteration_tol, cfg.power_iteration_max, return_info=True
    )
    return ProjectionSolution(
        M_hat=M,
        v_hat=v,
        objective=_objective(T, M, lam),
        iterations=its,
        constraint_set=L2_BALL,
        certificate=norm,
        converged=conv,
    )


def admm_solve(T, cfg: SolverConfig) -> ProjectionSolution:
    """ADMM for ``max <T, M> - lam ||M||_1`` over the unit nuclear-norm ball.

    Iterates, from ``Y = Z = R = 0`` and with penalty ``rho = cfg.admm_penalty``::

        Y <- Proj_{||.||_* <= 1}(Z - R + T / rho)
        Z <- soft(Y + R, lam / rho)
        R <- R + (Y - Z)

    until ``max|Y - Z| <= cfg.primal_dual_tol * (1 + max|T|)``.  A run that hits
    ``cfg.max_iterations`` is returned with ``converged=False``.
    """
    T = np.asarray(T, dtype=float)
    lam = cfg.lam
    if lam is None or lam <= 0:
        raise InvalidInputError(f"ADMM needs lambda > 0, got {lam}")
    tol = cfg.primal_dual_tol * (1.0 + float(np.max(np.abs(T))))
    rho = cfg.admm_penalty
    T_step = T / rho if rho != 1.0 else T
    Y = np.zeros_like(T)
    Z = np.zeros_like(T)
    R = np.zeros_like(T)
    converged = False
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        Y = project_nuclear_ball(Z - R + T_step)
        Z = soft_threshold(Y + R, lam / rho)
        D = Y - Z
        R += D
        if np.max(np.abs(D)) <= tol:
            converged = True
            break
    certificate = float(np.linalg.norm(soft_threshold(T, lam)))
    if not Y.any():
        v = np.zeros(T.shape[0])
        v[0] = 1.0
        pi_conv = True
    else:
        v, _, pi_conv = leading_left_singular_vector(
            Y, cfg.power_iteration_tol, cfg.power_iteration_max, return_info=True
        )
    return ProjectionSolution(
        M_hat=Y,
        v_hat=v,
        objective=_objective(T, Y, lam),
        iterations=it,
        constraint_set=NUCLEAR_BALL,
        certificate=certificate,
        converged=converged and pi_conv,
    )


def solve(T, cfg: SolverConfig, method: str = "soft") -> ProjectionSolution:
    """Dispatch to :func:`closed_form_s2` or :func:`admm_solve` by method tag."""
    kind = resolve_method(method)
    if cfg.lam is None:
        raise InvalidInputError("solver config has no lambda; resolve it first")
    if kind == L2_BALL:
        return closed_form_s2(T, cfg.lam, cfg)
    return admm_solve(T, cfg)


def brute_force_sparse_svd(T, k: int) -> np.ndarray:
    """Exact k-sparse leading left singular vector by exhaustive subset search.

    Every k-subset of rows is scored by the top singular value of its row
    submatrix; the lexicographically first best subset wins ties.  Refuses when
    more than ``10**6`` subsets would be enumerated.
    """
    T = np.asarray(T, dtype=float)
    p = T.shape[0]
    if not 1 <= k <= p:
        raise InvalidInputError(f"k must lie in [1, p] = [1, {p}], got {k}")
    count = math.comb(p, k)
    if count > MAX_SUBSETS:
        raise CombinatorialGuardError(
            f"C({p}, {k}) = {count} subsets exceeds the guard of {MAX_SUBSETS}"
        )
    best_val = -1.0
    best_rows: tuple[int, ...] | None = None
    for rows in itertools.combinations(range(p), k):
        val = np.linalg.norm(T[list(rows)], ord=2)
        # strict improvement beyond rounding keeps the lexicographically first subset
        if val > best_val * (1 + 1e-12) + 1e-300:
            best_val = val
            best_rows = rows
    sub = T[list(best_rows)]
    v = np.zeros(p)
    if best_val == 0:
        v[best_rows[0]] = 1.0
        return v
    U, _, _ = np.linalg.svd(sub, full_matrices=False)
    v[list(best_rows)] = U[:, 0]
    first = np.flatnonzero(np.abs(v) > 0)[0]
    if v[first] < 0:
        v = -v
    return v / np.linalg.norm(v)


def angle(u, v, degrees: bool = True) -> float:
    """Unsigned angle between two lines through the origin."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    c = abs(float(u @ v)) / (np.linalg.norm(u) * np.linalg.norm(v))
    a = math.acos(min(1.0, c))
    return math.degrees(a) if degrees else a

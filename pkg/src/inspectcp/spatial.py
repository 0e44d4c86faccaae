"""Changepoint estimation under cross-sectional (spatial) noise dependence.

The direction found by the sparse projection is re-weighted by an estimate of
the noise precision matrix before projecting the second half of the data.  Two
parametric covariance families are supported:

* ``local_ar``: ``Sigma[i, j] = rho ** |i - j|`` (tridiagonal precision);
* ``global_equi``: ``Sigma = I + (rho / p) 11^T`` (rank-one corrected precision).

Precision estimates come from residuals built out of scaled first differences
near both ends of the odd-column half of the data, where the mean is assumed
constant.  The scale is ``2 ** -0.5`` so that residuals have covariance Sigma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .cusum import as_observations, cusum_transform
from .exceptions import InvalidInputError
from .projection import SolverConfig, solve
from .single import SPLIT, SingleDetection, _resolve, project_and_locate, split_halves

__all__ = [
    "DependenceModel",
    "PrecisionEstimate",
    "precision_local",
    "precision_global",
    "covariance_local",
    "covariance_global",
    "estimate_rho_local",
    "estimate_rho_global",
    "build_residuals",
    "inspect_single_spatial",
]

RHO_EPS = 1e-6
DEP_KINDS = ("iid", "local_ar", "global_equi", "temporal_ar")


@dataclass(frozen=True)
class DependenceModel:
    kind: str = "iid"
    rho: float = 0.0
    sigma2: float = 1.0

    def __post_init__(self):
        if self.kind not in DEP_KINDS:
            raise InvalidInputError(f"unknown dependence kind {self.kind!r}")
        if self.kind in ("local_ar", "temporal_ar") and not -1 < self.rho < 1:
            raise InvalidInputError(f"{self.kind} needs |rho| < 1, got {self.rho}")
        if self.kind == "global_equi" and not self.rho > -1:
            raise InvalidInputError(f"global_equi needs rho > -1, got {self.rho}")
        if self.sigma2 <= 0:
            raise InvalidInputError("sigma2 must be positive")


@dataclass
class PrecisionEstimate:
    """Estimated precision matrix of a one-parameter covariance family."""

    kind: str
    rho_hat: float
    theta_hat: np.ndarray
    sample_count: int
    diagnostics: list[str] = field(default_factory=list)

    def apply(self, v) -> np.ndarray:
        """Product ``theta_hat @ v`` using the family's structure (O(p))."""
        v = np.asarray(v, dtype=float)
        rho = self.rho_hat
        if self.kind == "iid":
            return v.copy()
        if self.kind == "local_ar":
            out = (1 + rho**2) * v
            out[1:] -= rho * v[:-1]
            out[:-1] -= rho * v[1:]
            out[0] -= rho**2 * v[0]
            out[-1] -= rho**2 * v[-1]
            return out / (1 - rho**2)
        p = v.size
        return v - rho / (p * (1 + rho)) * v.sum()


def covariance_local(rho: float, p: int) -> np.ndarray:
    idx = np.arange(p)
    return float(rho) ** np.abs(idx[:, None] - idx[None, :])


def covariance_global(rho: float, p: int) -> np.ndarray:
    return np.eye(p) + rho / p * np.ones((p, p))


def precision_local(rho: float, p: int) -> np.ndarray:
    """Inverse of ``(rho ** |i - j|)``, which is tridiagonal."""
    if not -1 < rho < 1:
        raise InvalidInputError(f"need |rho| < 1, got {rho}")
    if p < 2:
        raise InvalidInputError(f"need p >= 2, got {p}")
    Theta = np.diag(np.full(p, 1 + rho**2))
    off = np.arange(p - 1)
    Theta[off, off + 1] = -rho
    Theta[off + 1, off] = -rho
    Theta[0, 0] -= rho**2
    Theta[-1, -1] -= rho**2
    return Theta / (1 - rho**2)


def precision_global(rho: float, p: int) -> np.ndarray:
    """Inverse of ``I + (rho / p) 11^T`` by the Woodbury identity."""
    if not rho > -1:
        raise InvalidInputError(f"need rho > -1, got {rho}")
    if p < 1:
        raise InvalidInputError(f"need p >= 1, got {p}")
    return np.eye(p) - rho / (p * (1 + rho)) * np.ones((p, p))


def _samples(samples) -> np.ndarray:
    W = np.asarray(samples, dtype=float)
    if W.ndim == 1:
        W = W[np.newaxis, :]
    if W.ndim != 2 or W.shape[0] < 1:
        raise InvalidInputError("samples must be an m x p array with m >= 1")
    return W


def _local_loglik(rho, tr, edge, adj_sum, p):
    # per-sample log-likelihood up to constants
    return -(p - 1) / 2 * math.log(1 - rho**2) - (
        (1 + rho**2) * tr - rho**2 * edge - 2 * rho * adj_sum
    ) / (2 * (1 - rho**2))


def estimate_rho_local(samples) -> PrecisionEstimate:
    """Maximum likelihood estimate of rho under ``Sigma = (rho ** |i - j|)``.

    ``samples`` is m x p (one observation per row).  The score equation is the
    cubic ``rho^3 - a rho^2 + (b - 1) rho - a = 0`` with ``a`` the mean adjacent
    second moment and ``b = (2 tr S - S_11 - S_pp) / (p - 1)``.  Among its real
    roots in [-1, 1] the likelihood maximiser is kept; the estimate is clamped to
    ``[-1 + 1e-6, 1 - 1e-6]``.
    """
    W = _samples(samples)
    m, p = W.shape
    if p < 2:
        raise InvalidInputError("local dependence needs p >= 2")
    S_diag = np.mean(W * W, axis=0)
    adj = np.mean(W[:, :-1] * W[:, 1:], axis=0)
    tr = S_diag.sum()
    edge = S_diag[0] + S_diag[-1]
    a = adj.mean()
    b = (2 * tr - edge) / (p - 1)
    notes: list[str] = []

    roots = np.roots([1.0, -a, b - 1.0, -a])
    real = roots[np.abs(roots.imag) <= 1e-9 * max(1.0, np.abs(roots).max())].real
    cands = [r for r in real if -1.0 <= r <= 1.0]
    if not cands:
        f = lambda r: r**3 - a * r**2 + (b - 1) * r - a  # noqa: E731
        lo, hi = f(-1.0), f(1.0)
        if lo == 0:
            cands = [-1.0]
        elif hi == 0:
            cands = [1.0]
        elif lo * hi < 0:
            cands = [brentq(f, -1.0, 1.0)]
            notes.append("rho: bisection fallback used for the score cubic")
        else:
            cands = [float(np.clip(a, -1.0, 1.0))]
            notes.append("rho: no real score root in [-1, 1]; clamped moment estimate used")
    clamped = [float(np.clip(r, -1 + RHO_EPS, 1 - RHO_EPS)) for r in cands]
    lik = [_local_loglik(r, tr, edge, adj.sum(), p) for r in clamped]
    best = int(np.argmax(lik))
    rho_hat = clamped[best]
    if rho_hat != cands[best]:
        notes.append(f"rho: estimate {cands[best]:.6g} clamped to {rho_hat:.6g}")
    return PrecisionEstimate("local_ar", rho_hat, precision_local(rho_hat, p), m, notes)


def estimate_rho_global(samples) -> PrecisionEstimate:
    """Maximum likelihood estimate of rho under ``Sigma = I + (rho / p) 11^T``.

    Closed form: ``rho = (1/p) sum_ij S_ij - 1``, clamped below at ``-1 + 1e-6``.
    """
    W = _samples(samples)
    m, p = W.shape
    rho_hat = float(np.mean(W.sum(axis=1) ** 2) / p - 1.0)
    notes = []
    if rho_hat <= -1 + RHO_EPS:
        notes.append(f"rho: estimate {rho_hat:.6g} clamped to {-1 + RHO_EPS:.6g}")
        rho_hat = -1 + RHO_EPS
    return PrecisionEstimate("global_equi", rho_hat, precision_global(rho_hat, p), m, notes)


def build_residuals(X1, tau_lb: float) -> np.ndarray:
    """Noise proxies from scaled disjoint first differences near both ends.

    With ``h = floor(n1 * tau_lb / 2)`` the residuals are
    ``(X1[:, 2t] - X1[:, 2t-1]) / sqrt(2)`` and
    ``(X1[:, n1-2t] - X1[:, n1-2t+1]) / sqrt(2)`` for ``t = 1..h`` (1-based
    columns), returned as a ``2h x p`` array.
    """
    X1 = as_observations(X1)
    p, n1 = X1.shape
    if not 0 < tau_lb < 1:
        raise InvalidInputError(f"tau_lb must lie in (0, 1), got {tau_lb}")
    h = math.floor(n1 * tau_lb / 2 + 1e-9)
    if h < 1:
        raise InvalidInputError(
            f"n1 * tau_lb = {n1 * tau_lb:g} is too small to form residual pairs (need >= 2)"
        )
    t = np.arange(1, h + 1)
    head = X1[:, 2 * t - 1] - X1[:, 2 * t - 2]
    tail = X1[:, n1 - 2 * t - 1] - X1[:, n1 - 2 * t]
    return np.concatenate([head, tail], axis=1).T / math.sqrt(2.0)


def estimate_precision(residuals, kind: str, p: int) -> PrecisionEstimate:
    if kind in ("iid", "temporal_ar"):
        return PrecisionEstimate("iid", 0.0, np.eye(p), len(residuals))
    if kind == "local_ar":
        return estimate_rho_local(residuals)
    if kind == "global_equi":
        return estimate_rho_global(residuals)
    raise InvalidInputError(f"unknown dependence kind {kind!r}")


def inspect_single_spatial(
    X,
    cfg: SolverConfig | None = None,
    dep_kind: str = "local_ar",
    tau_lb: float = 0.1,
    method: str = "soft",
) -> SingleDetection:
    """Sample-splitting estimator with a precision-weighted projection direction.

    The sparse direction ``v`` is estimated on the odd columns, re-weighted to
    ``Theta v / ||Theta v||`` with ``Theta`` estimated from residuals of the odd
    columns, and used to locate the change on the even columns.  If precision
    estimation fails the identity is used and a diagnostic recorded.
    """
    X1, X2, notes = split_halves(X)
    p, n1 = X1.shape
    cfg = _resolve(cfg, p, n1)
    sol = solve(cusum_transform(X1), cfg, method)
    try:
        prec = estimate_precision(build_residuals(X1, tau_lb), dep_kind, p)
    except (InvalidInputError, np.linalg.LinAlgError, ValueError) as exc:
        notes.append(f"precision estimation failed ({exc}); using identity")
        prec = PrecisionEstimate("iid", 0.0, np.eye(p), 0)
    notes.extend(prec.diagnostics)
    w = prec.apply(sol.v_hat)
    v_proj = w / np.linalg.norm(w)
    z2, t_max, proj = project_and_locate(cusum_transform(X2), v_proj)
    return SingleDetection(2 * z2, t_max, v_proj, proj, SPLIT, sol, cfg.lam, notes, prec)

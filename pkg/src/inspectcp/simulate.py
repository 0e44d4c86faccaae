"""Seeded data generation for changepoint simulations.

Reproducibility
---------------
Every generator is driven by numpy's PCG64 bit generator.  A call with seed
``s`` builds ``SeedSequence(s)`` and spawns one child per row of the output
plus one auxiliary child (used for asynchronous changepoint shifts), so row
``j`` of the noise depends only on ``(s, j)``.  Replicate ``r`` of an
experiment should pass ``seed=(s, r)``; tuples are accepted anywhere a seed is.
Gaussian variates come from ``Generator.standard_normal`` (ziggurat), which is
deterministic for a fixed bit stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.signal import lfilter

from .cusum import PiecewiseMeanSpec
from .exceptions import InvalidInputError

__all__ = [
    "NoiseModel",
    "SimulatedData",
    "generate",
    "simulate",
    "standard_signal",
    "overlap_signal",
    "row_generators",
    "seed_sequence",
]

NOISE_KINDS = ("gaussian", "unif", "exp", "cs_local", "cs_global", "temporal", "async")


def seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, (tuple, list)):
        return np.random.SeedSequence([int(s) for s in seed])
    return np.random.SeedSequence(int(seed))


def row_generators(seed, count: int) -> list[np.random.Generator]:
    """``count`` independent PCG64 generators derived from ``seed``."""
    return [np.random.Generator(np.random.PCG64(s)) for s in seed_sequence(seed).spawn(count)]


@dataclass(frozen=True)
class NoiseModel:
    """Noise law for :func:`generate`.

    ``param`` is rho for ``cs_local`` / ``cs_global`` / ``temporal`` and the
    half-width ``L`` of the uniform shift for ``async`` (which otherwise uses
    Gaussian noise).
    """

    kind: str = "gaussian"
    sigma2: float = 1.0
    param: float = 0.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise InvalidInputError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if self.sigma2 < 0 or not math.isfinite(self.sigma2):
            raise InvalidInputError(f"sigma2 must be finite and >= 0, got {self.sigma2}")
        if self.kind == "cs_local" and not -1 < self.param < 1:
            raise InvalidInputError(f"cs_local needs |rho| < 1, got {self.param}")
        if self.kind == "temporal" and not 0 <= self.param < 1:
            raise InvalidInputError(f"temporal needs 0 <= rho < 1, got {self.param}")
        if self.kind == "cs_global" and not self.param <= 1:
            raise InvalidInputError(f"cs_global needs rho <= 1, got {self.param}")
        if self.kind == "async" and (self.param < 0 or self.param != int(self.param)):
            raise InvalidInputError(f"async needs a nonnegative integer L, got {self.param}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


@dataclass
class SimulatedData:
    X: np.ndarray
    spec: PiecewiseMeanSpec
    noise: NoiseModel
    diagnostics: list[str] = field(default_factory=list)


def _noise(p: int, n: int, noise: NoiseModel, gens: Sequence[np.random.Generator]) -> np.ndarray:
    sigma = noise.sigma
    kind = noise.kind
    if kind == "unif":
        a = math.sqrt(3.0)
        W = np.stack([g.uniform(-a, a, n) for g in gens])
    elif kind == "exp":
        W = np.stack([g.standard_exponential(n) for g in gens]) - 1.0
    else:
        W = np.stack([g.standard_normal(n) for g in gens])
    rho = noise.param
    if kind == "cs_local" and rho != 0:
        # AR(1) across coordinates: exact for Sigma = rho^|j - j'|
        W[0] /= math.sqrt(1 - rho**2)
        W = lfilter([math.sqrt(1 - rho**2)], [1.0, -rho], W, axis=0)
    elif kind == "cs_global" and rho != 0:
        # (1 - rho) I + (rho / p) 11^T
        c = 1.0 - math.sqrt(1.0 - rho)
        W = math.sqrt(1.0 - rho) * W + c * W.mean(axis=0, keepdims=True)
    elif kind == "temporal" and rho != 0:
        b = math.sqrt(1.0 - rho)
        W[:, 0] /= b
        W = lfilter([b], [1.0, -math.sqrt(rho)], W, axis=1)
    return sigma * W


def _async_spec(spec: PiecewiseMeanSpec, L: int, gen: np.random.Generator):
    notes = []
    thetas = spec.thetas
    zc = np.tile(np.asarray(spec.changepoints)[:, None], (1, spec.p))
    shifts = gen.integers(-L, L + 1, size=zc.shape)
    moved = np.where(thetas != 0, zc + shifts, zc)
    clipped = np.clip(moved, 1, spec.n - 1)
    if np.any(clipped != moved):
        notes.append("async: shifted changepoints clamped to [1, n-1]")
    out = PiecewiseMeanSpec(
        spec.n, spec.p, spec.changepoints, spec.segment_means, column_changepoints=clipped
    )
    return out, notes


def simulate(spec: PiecewiseMeanSpec, noise: NoiseModel, seed) -> SimulatedData:
    """Draw ``X = mu + W`` for the given mean structure and noise law."""
    gens = row_generators(seed, spec.p + 1)
    notes: list[str] = []
    used = spec
    if noise.kind == "async" and spec.nu > 0:
        used, notes = _async_spec(spec, int(noise.param), gens[-1])
    mu = used.mean_matrix()
    if noise.sigma2 == 0:
        return SimulatedData(mu, used, noise, notes)
    X = mu + _noise(spec.p, spec.n, noise, gens[:-1])
    return SimulatedData(X, used, noise, notes)


def generate(spec: PiecewiseMeanSpec, noise: NoiseModel, seed) -> np.ndarray:
    """Seeded p x n observation matrix; see :func:`simulate` for diagnostics."""
    return simulate(spec, noise, seed).X


def _harmonic(k: int) -> np.ndarray:
    return 1.0 / np.sqrt(np.arange(1, k + 1))


def standard_signal(n: int, p: int, k: int, z: int, vartheta: float) -> PiecewiseMeanSpec:
    """Single change at ``z`` with ``theta`` proportional to ``(1, 2^-1/2, ..., k^-1/2, 0, ...)``.

    ``theta`` is rescaled to Euclidean norm ``vartheta``; the pre-change mean is zero.
    """
    if not 1 <= k <= p:
        raise InvalidInputError(f"need 1 <= k <= p, got k={k}, p={p}")
    if not 1 <= z <= n - 1:
        raise InvalidInputError(f"need 1 <= z <= n-1, got z={z}, n={n}")
    if vartheta <= 0:
        raise InvalidInputError(f"vartheta must be positive, got {vartheta}")
    theta = np.zeros(p)
    h = _harmonic(k)
    theta[:k] = vartheta * h / np.linalg.norm(h)
    return PiecewiseMeanSpec(n, p, (z,), np.vstack([np.zeros(p), theta]))


def _support(i: int, k: int, overlap: str) -> range:
    # i is 1-based
    if overlap == "complete":
        return range(0, k)
    if overlap == "half":
        start = (i - 1) * k // 2
        return range(start, start + k)
    if overlap == "none":
        return range((i - 1) * k, i * k)
    raise InvalidInputError(f"overlap must be complete, half or none, got {overlap!r}")


def overlap_signal(
    n: int,
    p: int,
    k: int,
    zs: Sequence[int],
    varthetas: Sequence[float],
    overlap: str = "half",
    pattern: str = "uniform",
) -> PiecewiseMeanSpec:
    """Multiple changes on overlapping or disjoint coordinate windows.

    Change ``i`` (1-based) touches coordinates 1..k (``complete``),
    ``(i-1)k/2 + 1 .. (i+1)k/2`` (``half``) or ``(i-1)k + 1 .. ik`` (``none``).
    Within its window the change vector is constant (``pattern="uniform"``) or
    follows ``j^-1/2`` (``pattern="harmonic"``), scaled to norm ``varthetas[i]``.
    """
    if len(zs) != len(varthetas):
        raise InvalidInputError("zs and varthetas must have equal length")
    if k < 1:
        raise InvalidInputError("k must be positive")
    if pattern == "uniform":
        shape = np.ones(k)
    elif pattern == "harmonic":
        shape = _harmonic(k)
    else:
        raise InvalidInputError(f"pattern must be uniform or harmonic, got {pattern!r}")
    shape = shape / np.linalg.norm(shape)
    means = [np.zeros(p)]
    for i, (z, vt) in enumerate(zip(zs, varthetas), start=1):
        sup = _support(i, k, overlap)
        if sup.stop > p:
            raise InvalidInputError(
                f"change {i} needs coordinates up to {sup.stop} but p = {p}"
            )
        theta = np.zeros(p)
        theta[sup.start : sup.stop] = vt * shape
        means.append(means[-1] + theta)
    return PiecewiseMeanSpec(n, p, tuple(zs), np.vstack(means))

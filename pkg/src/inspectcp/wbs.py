"""Multiple changepoints by sparse projection inside wild binary segmentation."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .cusum import as_observations, cusum_from_prefix, prefix_sums
from .exceptions import InvalidInputError, ThresholdTooLargeError
from .projection import SolverConfig, resolve_method, solve
from .simulate import row_generators, seed_sequence
from .single import (
    default_lambda,
    estimate_noise_mad,
    inspect_single,
    normalize,
    project_and_locate,
)

__all__ = [
    "InspectConfig",
    "IntervalDraw",
    "MultiDetection",
    "TraceEntry",
    "draw_intervals",
    "inspect_wbs",
    "calibrate_threshold",
    "null_scores",
]

MIN_SEGMENT = 4


@dataclass(frozen=True)
class InspectConfig:
    """Tuning of the multiple-changepoint search.

    ``lam`` and ``xi`` may be ``None`` ("auto"): lambda then follows the default
    rule for the data dimensions and xi is calibrated on ``n_null`` simulated
    null data sets.  ``beta`` trims a fraction ``n * beta`` at both ends of
    every segment when filtering intervals.
    """

    lam: float | None = None
    xi: float | None = None
    beta: float = 0.0
    q: int = 1000
    seed: int = 0
    method: str = "soft"
    solver: SolverConfig = field(default_factory=SolverConfig)
    n_null: int = 1000
    normalize: bool = True
    threads: int = 1

    def __post_init__(self):
        if not 0 <= self.beta < 0.5:
            raise InvalidInputError(f"beta must lie in [0, 1/2), got {self.beta}")
        if self.q < 1:
            raise InvalidInputError(f"Q must be positive, got {self.q}")
        if self.lam is not None and not self.lam > 0:
            raise InvalidInputError(f"lambda must be positive, got {self.lam}")
        if self.xi is not None and not self.xi >= 0:
            raise InvalidInputError(f"xi must be nonnegative, got {self.xi}")
        if self.n_null < 1:
            raise InvalidInputError("n_null must be positive")
        if self.threads < 1:
            raise InvalidInputError("threads must be positive")
        resolve_method(self.method)

    def solver_config(self) -> SolverConfig:
        return self.solver if self.lam is None else self.solver.with_lambda(self.lam)


@dataclass(frozen=True)
class IntervalDraw:
    """Random intervals ``(s_q, e_q]`` with ``0 <= s_q < e_q <= n``."""

    starts: np.ndarray
    ends: np.ndarray

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.starts.tolist(), self.ends.tolist()))

    def __len__(self):
        return self.starts.size


@dataclass(frozen=True)
class TraceEntry:
    """Best candidate of one segment visited by the recursion."""

    s: int
    e: int
    q: int
    location: int
    score: float
    accepted: bool
    interval: tuple[int, int]


@dataclass
class MultiDetection:
    changepoints: list[int]
    scores: list[float]
    intervals: list[tuple[int, int]]
    directions: list[np.ndarray]
    trace: list[TraceEntry]
    lam: float
    xi: float
    n: int
    curves: dict[int, np.ndarray] = field(default_factory=dict)


def draw_intervals(n: int, q: int, seed) -> IntervalDraw:
    """``q`` iid uniform draws from ``{(l, r): 0 <= l < r <= n}``.

    Two distinct values of ``{0..n}`` are drawn uniformly and sorted, which is
    uniform over the ``n (n + 1) / 2`` admissible pairs.
    """
    if n < 2:
        raise InvalidInputError(f"need n >= 2, got {n}")
    if q < 1:
        raise InvalidInputError(f"need q >= 1, got {q}")
    gen = np.random.Generator(np.random.PCG64(seed_sequence(seed)))
    a = gen.integers(0, n + 1, size=q)
    b = gen.integers(0, n, size=q)
    b = b + (b >= a)
    return IntervalDraw(np.minimum(a, b), np.maximum(a, b))


class _IntervalScorer:
    """Caches single-changepoint fits on random intervals of one data matrix."""

    def __init__(self, X: np.ndarray, cfg: SolverConfig, method: str):
        self.prefix = prefix_sums(X)
        self.cfg = cfg
        self.method = method
        self.cache: dict[int, tuple | None] = {}

    def fit(self, s: int, e: int):
        if e - s < 2:
            return None
        T = cusum_from_prefix(self.prefix, s, e)
        try:
            sol = solve(T, self.cfg, self.method)
        except ThresholdTooLargeError:
            return None
        z, score, proj = project_and_locate(T, sol.v_hat)
        return z, score, sol.v_hat, proj

    def score(self, q: int, s: int, e: int):
        if q not in self.cache:
            self.cache[q] = self.fit(s, e)
        return self.cache[q]


def inspect_wbs(X, cfg: InspectConfig, draw: IntervalDraw | None = None) -> MultiDetection:
    """Wild binary segmentation with sparse-projection CUSUM scores.

    ``X`` is used as given (normalise beforehand; see :func:`inspectcp.pipeline.detect`).
    Intervals are drawn once.  On a segment ``(s, e]`` every interval with
    ``s + n beta <= s_q < e_q <= e - n beta`` is scored by the single
    changepoint estimator; the best one (smallest ``q`` on ties) yields the
    candidate ``b = s_q + z_q``, which is kept when its score exceeds ``xi``,
    after which both sides are searched recursively.  Segments shorter than 4
    points are not searched.
    """
    X = as_observations(X)
    p, n = X.shape
    solver = cfg.solver_config()
    if solver.lam is None:
        solver = solver.with_lambda(default_lambda(p, n))
    xi = cfg.xi
    if xi is None:
        xi = calibrate_threshold(n, p, replace(cfg, lam=solver.lam), cfg.n_null, cfg.seed)
    if draw is None:
        draw = draw_intervals(n, cfg.q, cfg.seed)
    starts, ends = draw.starts, draw.ends
    scorer = _IntervalScorer(X, solver, cfg.method)
    margin = n * cfg.beta
    trace: list[TraceEntry] = []
    found: dict[int, tuple] = {}
    pool = ThreadPoolExecutor(cfg.threads) if cfg.threads > 1 else None

    def segment(s: int, e: int):
        if e - s < MIN_SEGMENT:
            return
        mask = (starts >= s + margin) & (ends <= e - margin) & (ends - starts >= 2)
        qs = np.flatnonzero(mask)
        if qs.size == 0:
            return
        if pool is not None:
            todo = [q for q in qs if q not in scorer.cache]
            for q, res in zip(todo, pool.map(lambda q: scorer.fit(starts[q], ends[q]), todo)):
                scorer.cache[q] = res
        best_q, best = -1, None
        for q in qs:
            res = scorer.score(int(q), int(starts[q]), int(ends[q]))
            if res is not None and (best is None or res[1] > best[1]):
                best_q, best = int(q), res
        if best is None:
            return
        z, score, v, proj = best
        b = int(starts[best_q]) + z
        accepted = score > xi
        interval = (int(starts[best_q]), int(ends[best_q]))
        trace.append(TraceEntry(s, e, best_q, b, score, accepted, interval))
        if accepted:
            found[b] = (score, interval, v, proj)
            segment(s, b)
            segment(b, e)

    try:
        segment(0, n)
    finally:
        if pool is not None:
            pool.shutdown()
    cps = sorted(found)
    return MultiDetection(
        changepoints=cps,
        scores=[found[b][0] for b in cps],
        intervals=[found[b][1] for b in cps],
        directions=[found[b][2] for b in cps],
        trace=trace,
        lam=solver.lam,
        xi=float(xi),
        n=n,
        curves={b: found[b][3] for b in cps},
    )


def null_scores(n: int, p: int, cfg: InspectConfig, n_null: int, seed) -> np.ndarray:
    """Maximum projected CUSUM statistic on ``n_null`` pure-noise data sets.

    Data set ``i`` is p x n standard Gaussian noise drawn with seed
    ``(seed, i)``; it is normalised like real data when ``cfg.normalize``.
    """
    if n_null < 1:
        raise InvalidInputError("n_null must be positive")
    solver = cfg.solver_config()
    if solver.lam is None:
        solver = solver.with_lambda(default_lambda(p, n))
    base = seed_sequence(seed).entropy
    out = np.zeros(n_null)
    for i in range(n_null):
        gens = row_generators((*np.atleast_1d(base).tolist(), i), p)
        W = np.stack([g.standard_normal(n) for g in gens])
        if cfg.normalize:
            W, _ = normalize(W, estimate_noise_mad(W))
        try:
            out[i] = inspect_single(W, solver, cfg.method).t_max
        except ThresholdTooLargeError:
            out[i] = 0.0
    return out


def calibrate_threshold(n: int, p: int, cfg: InspectConfig, n_null: int = 1000, seed=0) -> float:
    """Threshold ``xi`` as the largest null statistic over ``n_null`` simulations."""
    return float(np.max(null_scores(n, p, cfg, n_null, seed)))

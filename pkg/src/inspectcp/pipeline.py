"""End-to-end detection: noise normalisation, tuning resolution, search, report."""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field

from . import __version__
from .cusum import as_observations
from .exceptions import InvalidInputError
from .projection import NUCLEAR_BALL, resolve_method
from .single import (
    NoiseProfile,
    SingleDetection,
    default_lambda,
    estimate_noise_mad,
    inspect_single,
    inspect_single_split,
    normalize,
)
from .wbs import InspectConfig, MultiDetection, calibrate_threshold, inspect_wbs

__all__ = ["RunReport", "detect", "REPORT_SCHEMA"]

MODES = ("wbs", "single", "split")

REPORT_SCHEMA = {
    "type": "object",
    "required": ["changepoints", "config", "noise", "warnings", "version"],
    "properties": {
        "changepoints": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["location", "score", "interval"],
                "properties": {
                    "location": {"type": "integer", "minimum": 1},
                    "score": {"type": "number"},
                    "interval": {
                        "type": "array",
                        "items": {"type": "integer", "minimum": 0},
                        "minItems": 2,
                        "maxItems": 2,
                    },
                },
            },
        },
        "config": {
            "type": "object",
            "required": ["lambda", "xi", "beta", "q", "seed", "method", "mode", "n_null"],
            "properties": {
                "lambda": {"type": "number", "exclusiveMinimum": 0},
                "xi": {"type": ["number", "null"], "minimum": 0},
                "beta": {"type": "number", "minimum": 0},
                "q": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer"},
                "method": {"type": "string", "enum": ["soft", "admm"]},
                "mode": {"type": "string", "enum": list(MODES)},
                "n_null": {"type": "integer", "minimum": 1},
            },
        },
        "noise": {
            "type": "object",
            "required": ["sigma_hat", "zero_scale_rows", "normalized"],
            "properties": {
                "sigma_hat": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "zero_scale_rows": {"type": "array", "items": {"type": "integer"}},
                "normalized": {"type": "boolean"},
            },
        },
        "warnings": {"type": "array", "items": {"type": "string"}},
        "version": {"type": "string"},
        "timings": {"type": "object", "additionalProperties": {"type": "number"}},
    },
}


@dataclass
class RunReport:
    """Result of :func:`detect` with every tuning value made explicit.

    ``config_used`` has ``lam`` always set; ``xi`` is set for the segmentation
    mode and ``None`` in the single-changepoint modes, which do not threshold.
    """

    detection: MultiDetection | SingleDetection
    config_used: InspectConfig
    mode: str
    noise_profile: NoiseProfile
    zero_scale_rows: list[int]
    n: int
    timings: dict[str, float] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    @property
    def changepoints(self) -> list[int]:
        if isinstance(self.detection, MultiDetection):
            return list(self.detection.changepoints)
        return [self.detection.z_hat]

    def to_dict(self, include_timings: bool = True) -> dict:
        cfg = self.config_used
        det = self.detection
        if isinstance(det, MultiDetection):
            cps = [
                {"location": int(b), "score": float(s), "interval": [int(i[0]), int(i[1])]}
                for b, s, i in zip(det.changepoints, det.scores, det.intervals)
            ]
        else:
            cps = [{"location": int(det.z_hat), "score": float(det.t_max), "interval": [0, self.n]}]
        out = {
            "changepoints": cps,
            "config": {
                "lambda": float(cfg.lam),
                "xi": None if cfg.xi is None else float(cfg.xi),
                "beta": float(cfg.beta),
                "q": int(cfg.q),
                "seed": int(cfg.seed),
                "method": "admm" if resolve_method(cfg.method) == NUCLEAR_BALL else "soft",
                "mode": self.mode,
                "n_null": int(cfg.n_null),
            },
            "noise": {
                "sigma_hat": [float(s) for s in self.noise_profile.sigma_hat],
                "zero_scale_rows": [int(j) for j in self.zero_scale_rows],
                "normalized": bool(cfg.normalize),
            },
            "warnings": list(self.warnings),
            "version": __version__,
        }
        if include_timings:
            out["timings"] = {k: float(v) for k, v in self.timings.items()}
        return out


def detect(X, cfg: InspectConfig | None = None, mode: str = "wbs") -> RunReport:
    """Run the full detection pipeline on a p x n matrix.

    Rows are divided by their MAD scale estimate (when ``cfg.normalize``),
    lambda defaults to ``sqrt(log(p log n) / 2)``, and in ``"wbs"`` mode an
    unset ``xi`` is calibrated on ``cfg.n_null`` Gaussian null data sets of the
    same shape.  ``mode`` may also be ``"single"`` (one changepoint from the
    full data) or ``"split"`` (odd/even sample splitting).
    """
    if mode not in MODES:
        raise InvalidInputError(f"mode must be one of {MODES}, got {mode!r}")
    cfg = cfg or InspectConfig()
    X = as_observations(X, min_cols=4 if mode == "split" else 3)
    p, n = X.shape
    timings: dict[str, float] = {}
    warnings: list[str] = []

    t0 = time.perf_counter()
    profile = estimate_noise_mad(X)
    zero_rows: list[int] = []
    if cfg.normalize:
        X, zero_rows = normalize(X, profile)
        if zero_rows:
            warnings.append(
                f"{len(zero_rows)} row(s) have zero MAD scale and were left unscaled"
            )
    timings["normalize"] = time.perf_counter() - t0

    n_eff = n // 2 if mode == "split" else n
    lam = cfg.lam if cfg.lam is not None else default_lambda(p, n_eff)
    cfg = dataclasses.replace(cfg, lam=lam)
    solver = cfg.solver_config()

    if mode == "wbs":
        if cfg.xi is None:
            t0 = time.perf_counter()
            xi = calibrate_threshold(n, p, cfg, cfg.n_null, cfg.seed)
            timings["calibrate"] = time.perf_counter() - t0
            cfg = dataclasses.replace(cfg, xi=xi)
        t0 = time.perf_counter()
        det = inspect_wbs(X, cfg)
        timings["search"] = time.perf_counter() - t0
    else:
        t0 = time.perf_counter()
        if mode == "single":
            det = inspect_single(X, solver, cfg.method)
        else:
            det = inspect_single_split(X, solver, cfg.method)
        timings["search"] = time.perf_counter() - t0
        warnings.extend(det.diagnostics)
    return RunReport(det, cfg, mode, profile, zero_rows, n, timings, warnings)

"""Command-line interface: ``inspectcp {detect,calibrate,simulate,metrics}``.

Data files are delimited text with one row per coordinate and one column per
time point (use ``--transpose`` for the other orientation).  Exit codes: 0
success, 2 usage error, 3 I/O or parse error, 4 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cusum import PiecewiseMeanSpec
from .exceptions import InvalidInputError, SolverError, ThresholdTooLargeError
from .metrics import Segmentation, adjusted_rand_index, hausdorff, wasserstein1
from .pipeline import detect
from .projection import SolverConfig
from .simulate import NOISE_KINDS, NoiseModel, overlap_signal, simulate
from .wbs import InspectConfig, MultiDetection, calibrate_threshold

__all__ = ["main", "build_parser", "read_matrix", "DataFileError"]

log = logging.getLogger("inspectcp")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_SOLVER = 4


class DataFileError(Exception):
    """Unreadable or malformed input file."""


def read_matrix(path, delimiter: str = ",", header: bool = False, transpose: bool = False) -> np.ndarray:
    """Parse a delimited numeric file into a p x n float array.

    Errors name the offending 1-based line and column.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataFileError(f"cannot open {path}: {exc.strerror}") from None
    rows: list[list[float]] = []
    width = None
    with fh:
        reader = csv.reader(fh, delimiter=delimiter)
        for line_no, record in enumerate(reader, start=1):
            if header and line_no == 1:
                continue
            if not record or all(not c.strip() for c in record):
                continue
            if width is None:
                width = len(record)
            elif len(record) != width:
                raise DataFileError(
                    f"{path}: line {line_no} has {len(record)} fields, expected {width}"
                )
            row = []
            for col_no, cell in enumerate(record, start=1):
                try:
                    row.append(float(cell))
                except ValueError:
                    raise DataFileError(
                        f"{path}: line {line_no}, column {col_no}: cannot parse {cell.strip()!r} as a number"
                    ) from None
            rows.append(row)
    if not rows:
        raise DataFileError(f"{path}: no data rows")
    X = np.array(rows)
    if not np.all(np.isfinite(X)):
        r, c = np.argwhere(~np.isfinite(X))[0]
        raise DataFileError(f"{path}: non-finite value at data row {r + 1}, column {c + 1}")
    return X.T if transpose else X


def _write_matrix(X: np.ndarray, path, delimiter: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        for row in X:
            writer.writerow([repr(float(v)) for v in row])


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _emit(obj, path: str | None) -> None:
    text = json.dumps(obj, indent=2) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _config_from_args(args) -> InspectConfig:
    return InspectConfig(
        lam=args.lam,
        xi=getattr(args, "xi", None),
        beta=getattr(args, "beta", 0.0),
        q=getattr(args, "Q", 1000),
        seed=args.seed,
        method=args.method,
        solver=SolverConfig(admm_penalty=args.admm_penalty),
        n_null=args.nulls,
        normalize=not getattr(args, "no_normalize", False),
        threads=getattr(args, "threads", 1),
    )


def _write_curves(report, outdir: Path) -> list[str]:
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    det = report.detection
    xi = report.config_used.xi
    if isinstance(det, MultiDetection):
        for b, (s, e) in zip(det.changepoints, det.intervals):
            curve = det.curves[b]
            path = outdir / f"curve_{b}.csv"
            with open(path, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["t", "projected_cusum"])
                for i, val in enumerate(curve, start=1):
                    w.writerow([s + i, repr(float(val))])
            written.append(str(path))
        path = outdir / "candidates.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["segment_start", "segment_end", "q", "interval_start", "interval_end",
                        "location", "score", "xi", "accepted"])
            for t in det.trace:
                w.writerow([t.s, t.e, t.q, t.interval[0], t.interval[1], t.location,
                            repr(float(t.score)), repr(float(xi)), int(t.accepted)])
        written.append(str(path))
    else:
        step = 2 if det.variant == "split" else 1
        path = outdir / f"curve_{det.z_hat}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "projected_cusum"])
            for i, val in enumerate(det.projected_cusum, start=1):
                w.writerow([step * i, repr(float(val))])
        written.append(str(path))
    return written


def cmd_detect(args) -> int:
    X = read_matrix(args.input, args.delimiter, args.header, args.transpose)
    mode = "single" if args.single else "split" if args.split else "wbs"
    report = detect(X, _config_from_args(args), mode)
    out = report.to_dict(include_timings=not args.no_timings)
    out["config"]["n"], out["config"]["p"] = int(X.shape[1]), int(X.shape[0])
    if args.emit_curves:
        files = _write_curves(report, Path(args.emit_curves))
        log.info("wrote %d curve file(s) to %s", len(files), args.emit_curves)
    _emit(out, args.output)
    for w in report.warnings:
        log.warning(w)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    if args.n < 3 or args.p < 1:
        raise InvalidInputError("calibration needs n >= 3 and p >= 1")
    cfg = _config_from_args(args)
    xi = calibrate_threshold(args.n, args.p, cfg, args.nulls, args.seed)
    if args.output:
        _emit({"xi": xi, "n": args.n, "p": args.p, "nulls": args.nulls, "seed": args.seed}, args.output)
    print(repr(xi))
    return EXIT_OK


def cmd_simulate(args) -> int:
    zs = args.changepoints
    varthetas = args.vartheta if zs else []
    if len(varthetas) == 1 and len(zs) > 1:
        varthetas = varthetas * len(zs)
    if len(varthetas) != len(zs):
        raise InvalidInputError("give one --vartheta value or one per changepoint")
    if zs:
        spec = overlap_signal(args.n, args.p, args.k, zs, varthetas, args.overlap, args.pattern)
    else:
        spec = PiecewiseMeanSpec(args.n, args.p, (), np.zeros((1, args.p)))
    noise = NoiseModel(args.noise, args.sigma2, args.noise_param)
    data = simulate(spec, noise, args.seed)
    X = data.X.T if args.transpose else data.X
    _write_matrix(X, args.output, args.delimiter)
    truth = {
        "n": args.n,
        "p": args.p,
        "changepoints": [int(z) for z in spec.changepoints],
        "varthetas": [float(v) for v in varthetas],
        "k": args.k,
        "overlap": args.overlap,
        "pattern": args.pattern,
        "noise": {"kind": noise.kind, "sigma2": noise.sigma2, "param": noise.param},
        "seed": args.seed,
        "transposed": bool(args.transpose),
        "diagnostics": data.diagnostics,
        "version": __version__,
    }
    sidecar = args.truth or f"{args.output}.truth.json"
    _emit(truth, sidecar)
    return EXIT_OK


def _read_changepoints(path) -> tuple[list[int], int | None]:
    """Changepoints and (if recorded) n from a truth sidecar, a report or a plain list."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFileError(f"cannot open {path}: {exc.strerror}") from None
    stripped = text.strip()
    if stripped.startswith(("{", "[")):
        try:
            obj = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise DataFileError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        n = None
        if isinstance(obj, dict):
            n = obj.get("n", obj.get("config", {}).get("n"))
            obj = obj.get("changepoints", [])
        cps = []
        for i, item in enumerate(obj):
            val = item.get("location") if isinstance(item, dict) else item
            if not isinstance(val, (int, float)) or val != int(val):
                raise DataFileError(f"{path}: changepoint entry {i + 1} is not an integer: {val!r}")
            cps.append(int(val))
        return sorted(cps), n
    cps = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        for col_no, tok in enumerate(line.replace(",", " ").split(), start=1):
            try:
                cps.append(int(tok))
            except ValueError:
                raise DataFileError(
                    f"{path}: line {line_no}, field {col_no}: cannot parse {tok!r} as an integer"
                ) from None
    return sorted(cps), None


def cmd_metrics(args) -> int:
    truth, n_truth = _read_changepoints(args.truth)
    est, n_est = _read_changepoints(args.estimate)
    n = args.n or n_truth or n_est
    if n is None:
        raise InvalidInputError("series length unknown; pass --n")
    for other in (n_truth, n_est):
        if other is not None and other != n:
            raise InvalidInputError(f"files disagree on n ({n_truth} vs {n_est})")
    warnings = []
    if truth and est:
        hd = hausdorff(truth, est)
    else:
        hd = None
        warnings.append("hausdorff distance undefined for an empty changepoint set")
    if truth and est:
        w1 = wasserstein1(truth, est)
    else:
        w1 = None
        warnings.append("wasserstein distance undefined for an empty changepoint set")
    ari = adjusted_rand_index(Segmentation(n, truth), Segmentation(n, est))
    _emit({"hausdorff": hd, "wasserstein1": w1, "ari": ari, "n": n, "warnings": warnings}, args.output)
    for w in warnings:
        log.warning(w)
    return EXIT_OK


def _add_tuning(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="regularisation parameter (default: sqrt(log(p log n) / 2))")
    p.add_argument("--method", choices=("soft", "admm"), default="soft",
                   help="Frobenius-ball closed form (soft) or nuclear-ball ADMM (default: soft)")
    p.add_argument("--admm-penalty", type=float, default=1.0,
                   help="augmented Lagrangian weight for --method admm (default: 1)")
    p.add_argument("--nulls", type=int, default=1000,
                   help="null data sets used to calibrate xi (default: 1000)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="inspectcp",
        description="Sparse-projection changepoint detection for high-dimensional time series.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="estimate changepoints in a data file")
    p.add_argument("input", help="delimited file, rows = coordinates, columns = time")
    p.add_argument("-o", "--output", default=None, help="JSON report path (default: stdout)")
    _add_tuning(p)
    p.add_argument("--xi", type=float, default=None, help="acceptance threshold (default: calibrate)")
    p.add_argument("--beta", type=float, default=0.0, help="burn-off fraction (default: 0)")
    p.add_argument("--Q", type=int, default=1000, help="number of random intervals (default: 1000)")
    p.add_argument("--threads", type=int, default=1, help="worker threads for interval scoring")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--single", action="store_true", help="estimate one changepoint from the full data")
    mode.add_argument("--split", action="store_true", help="one changepoint with odd/even sample splitting")
    p.add_argument("--header", action="store_true", help="skip the first line of the input")
    p.add_argument("--transpose", action="store_true", help="input rows are time points")
    p.add_argument("--delimiter", default=",", help="field delimiter (default: ',')")
    p.add_argument("--no-normalize", action="store_true", help="skip per-row MAD scaling")
    p.add_argument("--no-timings", action="store_true", help="omit wall-clock timings from the report")
    p.add_argument("--emit-curves", metavar="DIR", default=None,
                   help="write projected CUSUM curves and candidate scores as CSV files")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("calibrate", help="calibrate the threshold xi on Gaussian null data")
    p.add_argument("--n", type=int, required=True, help="series length")
    p.add_argument("--p", type=int, required=True, help="number of coordinates")
    _add_tuning(p)
    p.add_argument("--no-normalize", action="store_true", help="do not MAD-scale null data")
    p.add_argument("-o", "--output", default=None, help="also write xi to this JSON file")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("simulate", help="generate data with known changepoints")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--k", type=int, default=1, help="coordinates changed at each changepoint")
    p.add_argument("--changepoints", type=_int_list, default=[], help="comma-separated locations")
    p.add_argument("--vartheta", type=_float_list, default=[1.0],
                   help="l2 size of each change (one value or one per changepoint)")
    p.add_argument("--overlap", choices=("complete", "half", "none"), default="complete")
    p.add_argument("--pattern", choices=("uniform", "harmonic"), default="uniform")
    p.add_argument("--noise", choices=NOISE_KINDS, default="gaussian")
    p.add_argument("--sigma2", type=float, default=1.0, help="noise variance (0 for noiseless)")
    p.add_argument("--noise-param", type=float, default=0.0,
                   help="rho for cs_local/cs_global/temporal, shift half-width for async")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--transpose", action="store_true", help="write rows as time points")
    p.add_argument("--delimiter", default=",")
    p.add_argument("-o", "--output", required=True, help="CSV output path")
    p.add_argument("--truth", default=None, help="sidecar JSON path (default: OUTPUT.truth.json)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("metrics", help="compare estimated with true changepoints")
    p.add_argument("truth", help="truth sidecar JSON, report JSON or list of integers")
    p.add_argument("estimate", help="report JSON, sidecar JSON or list of integers")
    p.add_argument("--n", type=int, default=None, help="series length if not recorded in the files")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        return args.func(args)
    except DataFileError as exc:
        log.error("%s", exc)
        return EXIT_IO
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO
    except (ThresholdTooLargeError, SolverError) as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER
    except InvalidInputError as exc:
        log.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface: ``approximal {degrade,inpaint,demo-phi,synth,bench}``.

Exit codes: 0 success, 2 I/O error, 3 usage error, 4 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from . import frames, inpaint, oracle, proxcalc, solvers
from .errors import ApproximalError, DimensionError, FractionOutOfRange, NoConvergence

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3, 4

FORMULATION_NAMES = {f"{kind}-{data}": (kind, data) for kind, data in inpaint.FORMULATIONS}
REGIMES = {"loose": solvers.LOOSE, "strict": solvers.STRICT}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ----------------------------------------------------------------------------
# I/O helpers


def read_wav(path):
    """Read a WAV file as float64 in [-1, 1]; keeps the first channel."""
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        # scipy reports malformed headers as ValueError
        raise OSError(f"{path}: {exc}") from exc
    if data.ndim > 1:
        data = data[:, 0]
    if data.dtype == np.int16:
        x = data / 32768.0
    elif data.dtype == np.int32:
        x = data / 2147483648.0
    elif data.dtype == np.uint8:
        x = (data.astype(float) - 128.0) / 128.0
    elif np.issubdtype(data.dtype, np.floating):
        x = data.astype(float)
    else:
        raise OSError(f"{path}: unsupported sample format {data.dtype}")
    return int(rate), np.asarray(x, dtype=float)


def write_wav(path, rate, x):
    wavfile.write(path, int(rate), np.asarray(x, dtype=np.float32))


def write_mask(path, mask: inpaint.Mask):
    Path(path).write_text(",".join("1" if r else "0" for r in mask.reliable) + "\n")


def read_mask(path) -> inpaint.Mask:
    text = Path(path).read_text().strip()
    try:
        vals = [int(v) for v in text.split(",")] if text else []
    except ValueError as exc:
        raise OSError(f"{path}: mask must be comma-separated 0/1") from exc
    if any(v not in (0, 1) for v in vals):
        raise OSError(f"{path}: mask entries must be 0 or 1")
    return inpaint.Mask(np.array(vals, dtype=bool))


def _fmt(v) -> str:
    return f"{v:.17g}"


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with floats printed to 17 significant digits (non-finite -> null)."""
    pad, inner = " " * (indent * _level), " " * (indent * (_level + 1))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{to_json(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + to_json(v, indent, _level + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj)) if math.isfinite(obj) else "null"
    return json.dumps(str(obj))


# ----------------------------------------------------------------------------
# frame selection


def build_frame(spec: str, n: int, window: int, hop: int, channels: int):
    """Frame for signals of length ``n``; returns ``(frame, padded_length)``."""
    if spec == "dct":
        return frames.make_dct_frame(n), n
    if spec == "gabor":
        L = max(window, -(-n // hop) * hop)
        return frames.make_gabor_frame(window, hop, channels, L), L
    if spec.startswith("matrix:"):
        frame = frames.load_frame_csv(spec[len("matrix:"):])
        return frame, n
    raise UsageError(f"unknown frame {spec!r}; use gabor, dct or matrix:PATH")


def _pad(x, length, fill=0.0):
    if x.size == length:
        return x
    return np.concatenate([x, np.full(length - x.size, fill, dtype=x.dtype)])


def run_inpaint(observation, mask, frame_spec, formulation, mode="approximal", lam=1.0,
                stop=solvers.LOOSE, inner=None, reference=None, window=64, hop=16,
                channels=128, seed=None):
    """Pad to the frame length, solve, crop.  Padding samples are reliable
    zeros.  Returns a :class:`~approximal.inpaint.SolveReport` whose
    ``restored`` has the original length."""
    n = observation.size
    frame, L = build_frame(frame_spec, n, window, hop, channels)
    mask_p = inpaint.Mask(_pad(mask.reliable, L, True))
    ref_p = None if reference is None else _pad(np.asarray(reference, float), L)
    task = inpaint.InpaintTask(
        _pad(observation, L), mask_p, frame, formulation, mode, lam=lam, stop=stop,
        inner=inner or proxcalc.InnerSolveConfig(), seed=seed, reference=ref_p,
    )
    report = inpaint.solve(task)
    report.restored = report.restored[:n]
    if reference is not None and mask.n_missing >= 2:
        report.snr_db = inpaint.snr(reference, report.restored, mask)
    return report


# ----------------------------------------------------------------------------
# commands


def cmd_degrade(args):
    rate, x = read_wav(args.input)
    try:
        obs, mask = inpaint.degrade(x, args.fraction, seed=args.seed)
    except FractionOutOfRange as exc:
        raise UsageError(str(exc)) from exc
    write_wav(args.output, rate, obs)
    write_mask(args.mask_out, mask)
    print(f"dropped {mask.n_missing} of {mask.n} samples")
    return EXIT_OK


def cmd_inpaint(args):
    rate, y = read_wav(args.input)
    mask = read_mask(args.mask)
    reference = None
    if args.reference:
        _, reference = read_wav(args.reference)
    if mask.n != y.size or (reference is not None and reference.size != y.size):
        raise DimensionError(f"mask ({mask.n}) / reference length differs from audio ({y.size})")
    stop = solvers.StopCriteria(args.maxit, args.tol)
    inner = proxcalc.InnerSolveConfig(args.inner_maxit, args.inner_tol)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NoConvergence)
        report = run_inpaint(
            y, mask, args.frame, FORMULATION_NAMES[args.formulation], args.prox_mode,
            lam=args.lam, stop=stop, inner=inner, reference=reference,
            window=args.window, hop=args.hop, channels=args.channels,
        )
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    write_wav(args.output, rate, report.restored)
    if args.report:
        d = report.to_dict()
        if not args.timing:
            d["trace"].pop("time_ms", None)
        Path(args.report).write_text(to_json(d) + "\n")
    if args.trace:
        report.trace.to_csv(args.trace)
    status = "converged" if report.trace.converged else "stopped at max iterations"
    print(f"{report.trace.iterations} iterations ({status})")
    if report.snr_db is not None:
        print(f"SNR {report.snr_db:.4f} dB")
    return EXIT_OK


def cmd_demo_phi(args):
    printed = frames.DEMO_MATRIX_4x2
    alpha_printed = float(np.trace(printed.T @ printed)) / printed.shape[1]
    if abs(alpha_printed - 2.0) > 1e-3:
        print(f"alpha of the printed matrix is {alpha_printed:.6g}, expected 2", file=sys.stderr)
        return EXIT_NUMERIC
    frame = frames.demo_frame()
    table = oracle.oracle_phi_grid(frame, proxcalc.L1)
    if args.out:
        oracle.write_grid_csv(table, args.out)
    else:
        buf = io.StringIO()
        oracle.write_grid_csv(table, buf)
        sys.stdout.write(buf.getvalue())
    excess = float(np.max(table[:, 3] - table[:, 2]))
    print(f"alpha (printed matrix) = {alpha_printed:.6f}", file=sys.stderr)
    print(f"rows = {table.shape[0]}", file=sys.stderr)
    print(f"max(phi - f) = {excess:.17g}", file=sys.stderr)
    return EXIT_OK if excess <= 1e-8 else EXIT_NUMERIC


def cmd_synth(args):
    out = Path(args.directory)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(args.count):
        x = inpaint.synthetic_signal(args.length, seed=args.seed + i, n_sinusoids=args.sinusoids,
                                     transient=args.transient, sample_rate=args.rate)
        write_wav(out / f"synthetic_{i:02d}.wav", args.rate, x)
    print(f"wrote {args.count} signals to {out}")
    return EXIT_OK


def _bench_columns(frame_specs, regimes):
    cols, diff_cols = [], []
    for regime in regimes:
        for fr in frame_specs:
            for kind, data in inpaint.FORMULATIONS:
                modes = inpaint.PROX_MODES if kind == "analysis" else ("approximal",)
                for mode in modes:
                    cols.append((regime, fr, (kind, data), mode))
            for data in ("consistent", "inconsistent"):
                diff_cols.append((regime, fr, data))
    return cols, diff_cols


def _col_name(regime, fr, form, mode):
    return f"{regime}/{fr}/{form[0]}-{form[1]}/{mode}"


def _bench_signal(path, cols, args):
    """Run every configuration on one WAV; returns ``(snrs, error)``."""
    try:
        _, s = read_wav(path)
        obs, mask = inpaint.degrade(s, args.fraction, seed=args.seed)
        snrs = {}
        for regime, fr, form, mode in cols:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", NoConvergence)
                rep = run_inpaint(obs, mask, fr, form, mode, lam=args.lam, stop=REGIMES[regime],
                                  reference=s, window=args.window, hop=args.hop,
                                  channels=args.channels, seed=args.seed)
            snrs[(regime, fr, form, mode)] = rep.snr_db
        return snrs, ""
    except (OSError, ValueError, ApproximalError) as exc:
        return {}, f"{type(exc).__name__}: {exc}"


def cmd_bench(args):
    directory = Path(args.directory)
    if not directory.is_dir():
        raise OSError(f"{directory} is not a directory")
    wavs = sorted(p for p in directory.iterdir() if p.suffix.lower() == ".wav")
    frame_specs = args.frames.split(",")
    for fr in frame_specs:
        if fr not in ("gabor", "dct"):
            raise UsageError(f"bench frames must be gabor or dct, got {fr!r}")
    regimes = args.regimes.split(",")
    for r in regimes:
        if r not in REGIMES:
            raise UsageError(f"unknown regime {r!r}; use loose and/or strict")
    cols, diff_cols = _bench_columns(frame_specs, regimes)

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        results = list(pool.map(lambda p: _bench_signal(p, cols, args), wavs))

    def cell(v):
        return "" if v is None else _fmt(v)

    out = Path(args.out)
    diff_out = Path(args.diff_out) if args.diff_out else out.with_name(out.stem + "_diff" + out.suffix)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["signal"] + [_col_name(*c) for c in cols] + ["error"])
        for path, (snrs, err) in zip(wavs, results):
            w.writerow([path.name] + [cell(snrs.get(c)) for c in cols] + [err])
    with open(diff_out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["signal"] + [f"{r}/{fr}/analysis-{d}/exact-minus-approximal" for r, fr, d in diff_cols]
                   + ["error"])
        for path, (snrs, err) in zip(wavs, results):
            row = [path.name]
            for r, fr, d in diff_cols:
                ex = snrs.get((r, fr, ("analysis", d), "exact-nested"))
                ap = snrs.get((r, fr, ("analysis", d), "approximal"))
                row.append("" if ex is None or ap is None else _fmt(ex - ap))
            w.writerow(row + [err])
    print(f"{len(wavs)} signals -> {out}, {diff_out}")
    return EXIT_OK


# ----------------------------------------------------------------------------


def _frame_flags(p):
    p.add_argument("--frame", default="gabor", help="gabor, dct or matrix:PATH (default gabor)")
    p.add_argument("--window", type=int, default=64, help="Gabor window length (default 64)")
    p.add_argument("--hop", type=int, default=16, help="Gabor hop size (default 16)")
    p.add_argument("--channels", type=int, default=128,
                   help="Gabor frequency channels, at least the window length (default 128)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="approximal", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("degrade", help="drop random samples from a WAV file")
    p.add_argument("input", help="input WAV (16-bit PCM or float)")
    p.add_argument("output", help="degraded WAV (float32)")
    p.add_argument("mask_out", help="mask file: one line of comma-separated 0/1")
    p.add_argument("--fraction", type=float, default=0.8, help="dropout fraction in [0, 1) (default 0.8)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("inpaint", help="restore missing samples")
    p.add_argument("input", help="degraded WAV")
    p.add_argument("mask", help="mask file written by 'degrade'")
    p.add_argument("output", help="restored WAV (float32)")
    _frame_flags(p)
    p.add_argument("--formulation", choices=sorted(FORMULATION_NAMES), default="analysis-consistent",
                   help="problem to solve (default analysis-consistent)")
    p.add_argument("--prox-mode", choices=inpaint.PROX_MODES, default="approximal",
                   help="prox of ||A.||_1 in analysis problems (default approximal)")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0,
                   help="data-term weight for inconsistent problems (default 1.0)")
    p.add_argument("--maxit", type=int, default=200, help="maximum iterations (default 200)")
    p.add_argument("--tol", type=float, default=1e-3, help="relative-change tolerance (default 1e-3)")
    p.add_argument("--inner-maxit", type=int, default=500, help="inner iterations, exact-nested (default 500)")
    p.add_argument("--inner-tol", type=float, default=1e-6, help="inner tolerance, exact-nested (default 1e-6)")
    p.add_argument("--reference", help="clean WAV; enables SNR reporting")
    p.add_argument("--report", help="write a JSON solve report here")
    p.add_argument("--timing", action="store_true", help="include wall-clock times in the JSON report")
    p.add_argument("--trace", help="write the per-iteration trace as CSV here")
    p.set_defaults(func=cmd_inpaint)

    p = sub.add_parser("demo-phi", help="tabulate f and phi for the 4x2 example frame")
    p.add_argument("--out", help="CSV destination (default stdout)")
    p.set_defaults(func=cmd_demo_phi)

    p = sub.add_parser("synth", help="write seeded synthetic test signals")
    p.add_argument("directory")
    p.add_argument("--count", type=int, default=4, help="number of signals (default 4)")
    p.add_argument("--length", type=int, default=4096, help="samples per signal (default 4096)")
    p.add_argument("--sinusoids", type=int, default=3, help="sinusoids per signal, 1..8 (default 3)")
    p.add_argument("--transient", action="store_true", help="add an onset transient")
    p.add_argument("--rate", type=int, default=16000, help="sample rate (default 16000)")
    p.add_argument("--seed", type=int, default=0, help="seed of the first signal (default 0)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="SNR tables over a directory of WAV files")
    p.add_argument("directory", help="directory of clean WAV files")
    p.add_argument("--out", default="results.csv", help="SNR table (default results.csv)")
    p.add_argument("--diff-out", help="difference table (default <out>_diff.csv)")
    p.add_argument("--frames", default="gabor", help="comma-separated subset of gabor,dct (default gabor)")
    p.add_argument("--regimes", default="loose,strict",
                   help="stopping regimes: loose = (200, 1e-3), strict = (500, 1e-5)")
    p.add_argument("--fraction", type=float, default=0.8, help="dropout fraction (default 0.8)")
    p.add_argument("--seed", type=int, default=0, help="dropout seed (default 0)")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0, help="data-term weight (default 1.0)")
    p.add_argument("--window", type=int, default=64)
    p.add_argument("--hop", type=int, default=16)
    p.add_argument("--channels", type=int, default=128)
    p.add_argument("--jobs", type=int, default=1, help="worker threads (default 1)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"approximal: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"approximal: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ApproximalError, ValueError, FloatingPointError) as exc:
        print(f"approximal: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

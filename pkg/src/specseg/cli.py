"""Command-line entry point: ``specseg {segment,simulate,forecast}``."""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import os
import sys
import tempfile
import warnings
from pathlib import Path

from .errors import InputError, NumericalError
from .forecasting import ForecastConfig, forecast_pipeline, wind_like
from .segmentation import SegmentConfig, segment
from .series import FrequencyBand, load_csv
from .simgen import DEFAULT_LENGTHS, preset, run_study
from .spectral import DEFAULT_Q, KernelSpec

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3
DEMO_Q = 0.1


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _lengths(text):
    try:
        out = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad length list {text!r}") from None
    if not out or min(out) < 4:
        raise argparse.ArgumentTypeError("lengths must be integers >= 4")
    return out


def _add_segment_flags(p):
    p.add_argument("--kernel", choices=["bp", "parzen"], default="bp")
    p.add_argument("--q", type=float, default=None,
                   help=f"bandwidth exponent (default {DEFAULT_Q}; {DEMO_Q} for the forecast demo)")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--fdr", choices=["bh", "by"], default="bh")
    p.add_argument("--band", default=None, help="lo:hi in radians")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="specseg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    seg = sub.add_parser("segment", help="segment a CSV series")
    seg.add_argument("--input", required=True)
    seg.add_argument("--header", action="store_true", help="input has a header row")
    seg.add_argument("--out", default="-")
    seg.add_argument("--threads", type=_positive_int, default=1)
    _add_segment_flags(seg)

    sim = sub.add_parser("simulate", help="replication study on a preset model")
    sim.add_argument("--model", choices=[str(i) for i in range(1, 6)], required=True)
    sim.add_argument("--lengths", type=_lengths, default=None)
    sim.add_argument("--reps", type=_positive_int, default=200)
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--threads", type=_positive_int, default=1)
    _add_segment_flags(sim)

    fc = sub.add_parser("forecast", help="segmentation-driven VAR forecasts")
    src = fc.add_mutually_exclusive_group(required=True)
    src.add_argument("--input")
    src.add_argument("--demo", action="store_true",
                     help="use the synthetic wind-like series (needs --seed)")
    fc.add_argument("--header", action="store_true")
    fc.add_argument("--steps", type=int, default=2)
    fc.add_argument("--max-order", type=int, default=10)
    fc.add_argument("--detrend", action="store_true")
    fc.add_argument("--seed", type=int, default=None)
    fc.add_argument("--out", default="-")
    fc.add_argument("--threads", type=_positive_int, default=1)
    _add_segment_flags(fc)
    return parser


def _segment_config(args, default_q=DEFAULT_Q) -> SegmentConfig:
    q = default_q if args.q is None else args.q
    if not (0.0 < args.alpha < 1.0):
        raise ConfigError(f"alpha must lie in (0, 1), got {args.alpha}")
    band = FrequencyBand.parse(args.band) if args.band else None
    if band is not None and (band.lo <= 0.0 or band.hi >= math.pi):
        raise ConfigError("band must lie strictly inside (0, pi)")
    return SegmentConfig(kernel=KernelSpec(args.kernel, q), alpha=args.alpha,
                         fdr=args.fdr, band=band)


def _timestamp():
    return _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()


def _write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(out, payload: dict):
    text = json.dumps(payload, indent=2) + "\n"
    if out == "-":
        sys.stdout.write(text)
    else:
        _write_atomic(Path(out), text)


def _run_segment(args):
    cfg = _segment_config(args)
    series = load_csv(args.input, has_header=args.header)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = segment(series, cfg)
    payload = res.to_dict()
    payload["warnings"] = [str(w.message) for w in caught]
    payload["timestamp"] = _timestamp()
    _emit(args.out, payload)


def _run_simulate(args):
    cfg = _segment_config(args)
    lengths = args.lengths or list(DEFAULT_LENGTHS[args.model])
    spec = preset(args.model)
    if min(lengths) < 2 * spec.p:
        raise ConfigError(f"lengths must be at least 2p = {2 * spec.p}")
    table = run_study(args.model, lengths, args.reps, cfg, seed=args.seed,
                      threads=args.threads)
    out = Path(args.out)
    run = {"command": "simulate", "model": args.model, "lengths": lengths,
           "reps": args.reps, "seed": args.seed, "config": cfg.to_dict(),
           "timestamp": _timestamp()}
    _write_atomic(out / "study.csv", table.rows_csv())
    _write_atomic(out / "summary.csv", table.summary_csv())
    _write_atomic(out / "run.json", json.dumps(run, indent=2) + "\n")


def _run_forecast(args):
    cfg = _segment_config(args, DEMO_Q if args.demo else DEFAULT_Q)
    if args.steps < 0:
        raise ConfigError("steps must be nonnegative")
    if args.demo:
        if args.seed is None:
            raise ConfigError("--demo requires --seed")
        series = wind_like(args.seed)
    else:
        series = load_csv(args.input, has_header=args.header)
    fcfg = ForecastConfig(segment=cfg, max_order=args.max_order,
                          detrend=args.detrend or args.demo)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = forecast_pipeline(series, args.steps, fcfg)
    payload = res.to_dict()
    payload["config"] = dict(cfg.to_dict(), max_order=args.max_order,
                             detrend=fcfg.detrend, seed=args.seed,
                             source="demo" if args.demo else args.input)
    payload["timestamp"] = _timestamp()
    _emit(args.out, payload)


_COMMANDS = {"segment": _run_segment, "simulate": _run_simulate, "forecast": _run_forecast}


def _fail(code, kind, message):
    sys.stderr.write(json.dumps({"error": kind, "exit": code, "message": message}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _COMMANDS[args.command](args)
    except (ConfigError, InputError) as exc:
        return _fail(EXIT_CONFIG, "invalid_config", str(exc))
    except OSError as exc:
        return _fail(EXIT_IO, "io", str(exc))
    except (NumericalError, ArithmeticError) as exc:
        return _fail(EXIT_NUMERIC, "numerical", str(exc))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

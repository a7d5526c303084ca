"""Command line entry point: ``fpheom {decompose,run,extract,sweep}``.

Exit codes: 0 success, 2 invalid input or configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, parse_config
from .csvio import read_csv
from .experiment import NUMERICAL_ERRORS, _json_safe, decompose_only, run_experiment, run_sweep
from .gme import PopulationSeries, asymptotic_rates, extract_kernel

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


def _load_config(path):
    text = Path(path).read_text() if path else ""
    return parse_config(text)


def _report(manifests) -> int:
    code = EXIT_OK
    for m in manifests:
        for f in m.failures:
            print(f"failed: {f['task']}: {f['error']}: {f['message']}", file=sys.stderr)
            code = EXIT_NUMERICAL
    return code


def cmd_decompose(args) -> int:
    cfg = _load_config(args.config)
    m = decompose_only(cfg, args.out)
    if m.modes:
        print(f"K={m.modes['K']} residual={m.modes['residual']:.3e}")
    return _report([m])


def cmd_run(args) -> int:
    cfg = _load_config(args.config)
    return _report([run_experiment(cfg, args.out)])


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    return _report(run_sweep(cfg, args.out, args.jobs))


def cmd_extract(args) -> int:
    cols = read_csv(args.input)
    if "t" not in cols or args.column not in cols:
        raise ConfigError(f"{args.input}: needs columns 't' and '{args.column}'")
    series = PopulationSeries(cols["t"], cols[args.column])
    kernel = extract_kernel(series, method=args.method)
    kernel.to_csv(args.out)
    if args.rates:
        Path(args.rates).write_text(json.dumps(_json_safe(asymptotic_rates(kernel).to_json()), sort_keys=True) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fpheom", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="fit and certify the bath mode set")
    p.add_argument("--config", help="JSON experiment configuration (defaults when omitted)")
    p.add_argument("--out", help="output directory (overrides config.output)")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("run", help="run the tasks listed in a configuration")
    p.add_argument("--config", help="JSON experiment configuration (defaults when omitted)")
    p.add_argument("--out", help="output directory (overrides config.output)")
    p.add_argument("--jobs", type=int, default=1, help="accepted for symmetry with sweep; a run is serial")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="repeat a run over the sweep.values of sweep.param")
    p.add_argument("--config", required=True, help="JSON experiment configuration")
    p.add_argument("--out", help="output directory (overrides config.output)")
    p.add_argument("--jobs", type=int, default=1, help="concurrent sweep points")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("extract", help="extract the memory kernel from a population CSV")
    p.add_argument("--input", required=True, help="CSV with columns t and P")
    p.add_argument("--column", default="P")
    p.add_argument("--method", choices=("derivative", "second_kind"), default="second_kind")
    p.add_argument("--out", required=True, help="kernel CSV to write")
    p.add_argument("--rates", help="optional rates JSON to write")
    p.set_defaults(func=cmd_extract)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        if isinstance(exc, NUMERICAL_ERRORS):
            print(f"numerical failure: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

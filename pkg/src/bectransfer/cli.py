"""Command line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure
(with a JSON error report on stdout, also written to ``error.json`` when an
output directory is known).
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from typing import Optional

from . import experiments, fock, full_model, phase_space
from .config import ConfigError, RunConfig, default_config_text, load_config, parse_config, parse_grid_flag
from .experiments import dump_json
from .params import (
    DERIVED_UNITS,
    TWO_PI,
    BracketError,
    ParameterError,
    SteadyStateError,
    derive,
    match_frequencies,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _grid(text: str):
    try:
        return parse_grid_flag(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _span(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("span must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="run configuration (default: the shipped paper_defaults config)")
    common.add_argument("--out", metavar="DIR", help="output directory (default: output_dir from the config)")
    common.add_argument("--seed", type=_u64, metavar="U64", help="override experiment.seed")
    common.add_argument("--jobs", type=_positive_int, default=1, metavar="N", help="worker threads")
    common.add_argument("--grid", type=_grid, metavar="NxM", help="phase-space grid points")
    common.add_argument("--span", type=_span, metavar="XMAX", help="grid half-width in quadrature units")

    parser = _Parser(prog="bectransfer", description="BEC-mirror state transfer simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("derive", parents=[common], help="derived parameters as JSON")
    sub.add_parser("steady", parents=[common], help="mean-field steady state as JSON")
    m = sub.add_parser("match", parents=[common], help="tune one input so the shifted frequencies coincide")
    m.add_argument("--parameter", choices=("g", "Delta_a", "Omega_m"),
                   help="free parameter (default: experiment.match)")
    sub.add_parser("transfer", parents=[common], help="run the state transfer and write artifacts")
    sub.add_parser("sweep", parents=[common], help="fidelity sweep over one parameter")
    s = sub.add_parser("spectrum", parents=[common], help="linearized spectrum of the three-mode model")
    s.add_argument("--compensate", action="store_true",
                   help="offset Delta_c so the effective detuning at the fixed point is Delta_tilde")
    o = sub.add_parser("oracle-check", parents=[common], help="cross-module oracle suite")
    o.add_argument("--tolerance-scale", type=float, default=1.0, help="multiply every tolerance (test hook)")
    o.add_argument("--cases", type=_positive_int, default=100, help="randomized cases for the algebra checks")
    o.add_argument("--fock-dim", type=_positive_int, help="override experiment.fock_dim")
    r = sub.add_parser("render", parents=[common], help="render a Wigner CSV as PPM/PGM")
    r.add_argument("--input", required=True, metavar="CSV", help="Wigner grid written by transfer")
    r.add_argument("--gray", action="store_true", help="grayscale PGM instead of colour PPM")
    return parser


def _config(args) -> RunConfig:
    command = args.command
    if args.config is None:
        cfg = parse_config(default_config_text(), command)
    else:
        try:
            cfg = load_config(args.config, command)
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc.strerror}") from None
    if args.seed is not None:
        cfg = cfg.with_experiment(seed=args.seed)
    return cfg


def _emit(obj, out_dir: Optional[str], name: str) -> None:
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        dump_json(os.path.join(out_dir, name), obj)
    print(json.dumps(experiments._json_safe(obj), indent=2))


def cmd_derive(args, cfg) -> int:
    p, notes = experiments.resolve_params(cfg)
    _emit({"physical": dataclasses.asdict(p), "derived": derive(p).to_dict(), "units": DERIVED_UNITS,
           "warnings": notes}, args.out, "derived.json")
    return EXIT_OK


def cmd_steady(args, cfg) -> int:
    p, _ = experiments.resolve_params(cfg)
    _emit(experiments.steady_record(p), args.out, "steady.json")
    return EXIT_OK


def cmd_match(args, cfg) -> int:
    name = args.parameter or cfg.experiment.match
    if name == "none":
        raise UsageError("no free parameter: pass --parameter or set experiment.match")
    exp = cfg.experiment
    bracket = (exp.match_lo, exp.match_hi) if exp.match_lo is not None and exp.match_hi is not None else None
    p = match_frequencies(cfg.physical(), name, bracket)
    d = derive(p)
    value = getattr(p, name)
    _emit({"parameter": name, "value": value, "value_over_2pi": value / TWO_PI,
           "residual": d.frequency_mismatch, "Omega_m_shift": d.Omega_m_shift,
           "Omega_2_shift": d.Omega_2_shift}, args.out, "match.json")
    return EXIT_OK


def cmd_transfer(args, cfg) -> int:
    out = args.out or cfg.output_dir
    report = experiments.run_transfer(cfg, out, grid=args.grid, span=args.span, seed=args.seed, jobs=args.jobs)
    keys = ("trace_overlap", "normalized_overlap", "overlap_vs_ideal", "normalized_overlap_vs_ideal", "N22")
    print(json.dumps(experiments._json_safe({k: report[k] for k in keys} | {"output_dir": out,
                                                                           "warnings": report["warnings"]}),
                     indent=2))
    return EXIT_OK


def cmd_sweep(args, cfg) -> int:
    out = args.out or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "sweep.csv")
    rows = experiments.run_sweep(cfg, path, grid=args.grid, span=args.span, jobs=args.jobs)
    print(f"{len(rows)} rows -> {path}")
    return EXIT_OK


def cmd_spectrum(args, cfg) -> int:
    p, _ = experiments.resolve_params(cfg)
    phi0 = 0.0
    if args.compensate:
        phi0 = derive(p).Phi_ss
        p = full_model.compensate_static_shift(p)
    spec = full_model.linearized_spectrum(p, phi0=phi0)
    _emit({"eigenvalues": [{"re": float(z.real), "im": float(z.imag)} for z in spec.eigenvalues],
           "stable": spec.stable}, args.out, "spectrum.json")
    return EXIT_OK


def cmd_oracle_check(args, cfg) -> int:
    if args.fock_dim is not None:
        cfg = cfg.with_experiment(fock_dim=args.fock_dim)
    report = experiments.oracle_check(cfg, tolerance_scale=args.tolerance_scale, cases=args.cases,
                                      jobs=args.jobs, seed=args.seed)
    _emit(report, args.out, "oracle_report.json")
    return EXIT_OK if report["passed"] else EXIT_NUMERIC


def cmd_render(args) -> int:
    W = phase_space.read_csv(args.input)
    out = args.out or os.path.splitext(args.input)[0] + (".pgm" if args.gray else ".ppm")
    phase_space.render(out, W, color=not args.gray)
    print(out)
    return EXIT_OK


COMMANDS = {
    "derive": cmd_derive,
    "steady": cmd_steady,
    "match": cmd_match,
    "transfer": cmd_transfer,
    "sweep": cmd_sweep,
    "spectrum": cmd_spectrum,
    "oracle-check": cmd_oracle_check,
}


def _numeric_failure(exc: Exception, out_dir: Optional[str]) -> int:
    report = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, SteadyStateError):
        report["last_Phi"] = exc.last.Phi_ss
    if isinstance(exc, BracketError):
        report["samples"] = [list(s) for s in exc.samples]
    if isinstance(exc, full_model.BlowUpError):
        report["t"] = exc.t
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        dump_json(os.path.join(out_dir, "error.json"), report)
    print(json.dumps(experiments._json_safe(report), indent=2))
    return EXIT_NUMERIC


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = args.out
    try:
        if args.command == "render":
            return cmd_render(args)
        cfg = _config(args)
        if args.command in ("transfer", "sweep"):
            out_dir = out_dir or cfg.output_dir
        return COMMANDS[args.command](args, cfg)
    except (SteadyStateError, BracketError, full_model.BlowUpError, FloatingPointError, ArithmeticError) as exc:
        return _numeric_failure(exc, out_dir)
    except (ConfigError, ParameterError, UsageError, fock.SizeError, phase_space.GridError) as exc:
        print(f"bectransfer: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"bectransfer: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

"""Run configuration: a flat TOML subset with one level of tables.

Values are decoded by the TOML library; a line scanner on top of it records
where every key was defined so that diagnostics can name line numbers
(duplicates report both). Physical inputs are SI scalars, or one of the
convenience forms ``<key>_in_units_of_kappa`` / ``<key>_times_2pi_hz``.
"""
from __future__ import annotations

import dataclasses
import math
import re
import sys
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, Optional, Tuple

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .params import TWO_PI, PhysicalParams

KAPPA = "_in_units_of_kappa"
TWO_PI_HZ = "_times_2pi_hz"

# key -> (type, allowed unit suffixes); order is the "required" order
PHYSICAL_SCHEMA: Dict[str, Tuple[type, Tuple[str, ...]]] = {
    "m_m": (float, ()),
    "Omega_m": (float, (TWO_PI_HZ, KAPPA)),
    "L": (float, ()),
    "kappa": (float, (TWO_PI_HZ,)),
    "Delta_c": (float, (TWO_PI_HZ, KAPPA)),
    "eta_mag": (float, (TWO_PI_HZ, KAPPA)),
    "lambda_l": (float, ()),
    "m_a": (float, ()),
    "N_a": (int, ()),
    "Delta_a": (float, (TWO_PI_HZ, KAPPA)),
    "g": (float, (TWO_PI_HZ, KAPPA)),
    "detuning_is_effective": (bool, ()),
}
PHYSICAL_OPTIONAL = {"detuning_is_effective": True}

STATES = ("vacuum", "coherent", "thermal", "cat")
NOISE = ("symmetrized", "raw", "off")
MATCH = ("none", "g", "Delta_a", "Omega_m")


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


@dataclass(frozen=True)
class ExperimentConfig:
    state: str = "cat"
    alpha: float = 2.0
    nbar: float = 0.0
    grid: Tuple[int, int] = (256, 256)
    span: Optional[float] = None
    noise: str = "symmetrized"
    seed: int = 0
    match: str = "none"
    match_lo: Optional[float] = None
    match_hi: Optional[float] = None
    mismatch_tolerance: float = 1e-6
    fock_dim: int = 30
    fock_max_dim: int = 40
    sde_paths: int = 0
    sde_steps: int = 200


@dataclass(frozen=True)
class SweepConfig:
    parameter: str
    values: Tuple[float, ...]
    optimize: bool = False
    refine_iterations: int = 40


@dataclass(frozen=True)
class RunConfig:
    # base key -> (unit form, value); form is "", KAPPA or TWO_PI_HZ
    physical_inputs: Dict[str, Tuple[str, object]]
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    sweep: Optional[SweepConfig] = None
    output_dir: str = "out"

    def physical(self, overrides: Optional[Dict[str, float]] = None) -> PhysicalParams:
        """Build SI parameters; ``overrides`` maps (possibly suffixed) keys to values."""
        inputs = dict(self.physical_inputs)
        for key, value in (overrides or {}).items():
            base, form = split_unit(key)
            inputs[base] = (form, value)
        kappa = to_si(inputs["kappa"], None)
        kw = {name: to_si(inputs[name], kappa) for name in inputs}
        return PhysicalParams(**kw)

    def with_experiment(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, experiment=dataclasses.replace(self.experiment, **changes))


def to_si(entry: Tuple[str, object], kappa: Optional[float]):
    form, value = entry
    if form == KAPPA:
        return float(value) * kappa
    if form == TWO_PI_HZ:
        return float(value) * TWO_PI
    return value


def split_unit(key: str) -> Tuple[str, str]:
    """``'Delta_c_in_units_of_kappa'`` -> ``('Delta_c', KAPPA)``; raises on unknown keys."""
    if key in PHYSICAL_SCHEMA:
        return key, ""
    for suffix in (KAPPA, TWO_PI_HZ):
        if key.endswith(suffix):
            base = key[: -len(suffix)]
            if base in PHYSICAL_SCHEMA:
                if suffix not in PHYSICAL_SCHEMA[base][1]:
                    raise ConfigError(f"unit suffix {suffix!r} is not allowed for {base!r}")
                return base, suffix
    raise ConfigError(f"unknown physical parameter {key!r}")


_TABLE = re.compile(r"\[\s*([A-Za-z_][A-Za-z0-9_-]*)\s*\]\s*(#.*)?")
_KEY = re.compile(r"([A-Za-z_][A-Za-z0-9_-]*)\s*=")


def _scan_lines(text: str) -> Dict[Tuple[str, str], int]:
    """Line number of every (table, key); rejects duplicates and unsupported syntax."""
    where: Dict[Tuple[str, str], int] = {}
    tables: Dict[str, int] = {}
    table = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _TABLE.fullmatch(line)
        if m:
            table = m.group(1)
            if table in tables:
                raise ConfigError(
                    f"table [{table}] defined twice (lines {tables[table]} and {lineno})", lineno
                )
            tables[table] = lineno
            continue
        m = _KEY.match(line)
        if not m:
            raise ConfigError(f"expected 'key = value' or '[table]', got {line!r}", lineno)
        key = (table, m.group(1))
        if key in where:
            name = f"{table}.{key[1]}" if table else key[1]
            raise ConfigError(f"duplicate key {name!r} (lines {where[key]} and {lineno})", lineno)
        where[key] = lineno
    return where


def _decode(text: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"syntax error: {exc}", int(m.group(1)) if m else None) from None


def _typed(value, kind, name, line):
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{name} must be true or false, got {value!r}", line)
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{name} must be a string, got {value!r}", line)
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"non-numeric value for {name}: {value!r}", line)
    if kind is int:
        if isinstance(value, float):
            if not value.is_integer():
                raise ConfigError(f"{name} must be an integer, got {value!r}", line)
            value = int(value)
        return value
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{name} must be finite", line)
    return value


def _parse_physical(table: dict, lines) -> Dict[str, Tuple[str, object]]:
    inputs: Dict[str, Tuple[str, object]] = {}
    first_line: Dict[str, int] = {}
    for key, value in table.items():
        line = lines.get(("physical", key))
        try:
            base, form = split_unit(key)
        except ConfigError as exc:
            raise ConfigError(str(exc), line) from None
        if base in inputs:
            raise ConfigError(
                f"{base!r} given in more than one form (lines {first_line[base]} and {line}); "
                "use exactly one",
                line,
            )
        kind = PHYSICAL_SCHEMA[base][0]
        if form:
            kind = float
        inputs[base] = (form, _typed(value, kind, key, line))
        first_line[base] = line
    for name in PHYSICAL_SCHEMA:
        if name not in inputs:
            if name in PHYSICAL_OPTIONAL:
                inputs[name] = ("", PHYSICAL_OPTIONAL[name])
            else:
                raise ConfigError(f"missing required key 'physical.{name}'")
    return inputs


def _parse_grid(value, line) -> Tuple[int, int]:
    if isinstance(value, int) and not isinstance(value, bool):
        return (value, value)
    if isinstance(value, str):
        return parse_grid_flag(value, line)
    raise ConfigError(f"grid must be an integer or 'NxM', got {value!r}", line)


def parse_grid_flag(text: str, line: Optional[int] = None) -> Tuple[int, int]:
    m = re.fullmatch(r"\s*(\d+)\s*[xX]\s*(\d+)\s*", text)
    if not m:
        raise ConfigError(f"grid must look like 'NxM', got {text!r}", line)
    n_x, n_p = int(m.group(1)), int(m.group(2))
    if n_x < 3 or n_p < 3:
        raise ConfigError("grid needs at least 3 points per axis", line)
    return n_x, n_p


_EXPERIMENT_KEYS = {
    "state": str,
    "alpha": float,
    "nbar": float,
    "grid": None,
    "span": float,
    "noise": str,
    "seed": int,
    "match": str,
    "match_lo": float,
    "match_hi": float,
    "mismatch_tolerance": float,
    "fock_dim": int,
    "fock_max_dim": int,
    "sde_paths": int,
    "sde_steps": int,
}


def _parse_experiment(table: dict, lines) -> ExperimentConfig:
    kw = {}
    for key, value in table.items():
        line = lines.get(("experiment", key))
        if key not in _EXPERIMENT_KEYS:
            raise ConfigError(f"unknown key 'experiment.{key}'", line)
        if key == "grid":
            kw[key] = _parse_grid(value, line)
            continue
        kw[key] = _typed(value, _EXPERIMENT_KEYS[key], f"experiment.{key}", line)

    def check(key, ok, what):
        if key in kw and not ok(kw[key]):
            raise ConfigError(f"experiment.{key} {what}, got {kw[key]!r}", lines.get(("experiment", key)))

    check("state", lambda v: v in STATES, f"must be one of {STATES}")
    check("noise", lambda v: v in NOISE, f"must be one of {NOISE}")
    check("match", lambda v: v in MATCH, f"must be one of {MATCH}")
    check("seed", lambda v: 0 <= v < 2**64, "must be an unsigned 64-bit integer")
    check("span", lambda v: v > 0, "must be positive")
    check("nbar", lambda v: v >= 0, "must be non-negative")
    check("fock_dim", lambda v: v >= 2, "must be >= 2")
    check("fock_max_dim", lambda v: v >= 2, "must be >= 2")
    check("sde_paths", lambda v: v >= 0, "must be non-negative")
    check("sde_steps", lambda v: v >= 1, "must be >= 1")
    check("mismatch_tolerance", lambda v: v > 0, "must be positive")
    return ExperimentConfig(**kw)


_SWEEP_KEYS = {
    "parameter": str,
    "values": None,
    "start": float,
    "stop": float,
    "steps": int,
    "optimize": bool,
    "refine_iterations": int,
}


def _parse_sweep(table: dict, lines) -> SweepConfig:
    for key in table:
        if key not in _SWEEP_KEYS:
            raise ConfigError(f"unknown key 'sweep.{key}'", lines.get(("sweep", key)))
    if "parameter" not in table:
        raise ConfigError("missing required key 'sweep.parameter'")
    name = _typed(table["parameter"], str, "sweep.parameter", lines.get(("sweep", "parameter")))
    try:
        split_unit(name)
    except ConfigError as exc:
        raise ConfigError(f"sweep over non-existent parameter: {exc}", lines.get(("sweep", "parameter"))) from None
    ranged = [k for k in ("start", "stop", "steps") if k in table]
    if "values" in table:
        line = lines.get(("sweep", "values"))
        if ranged:
            raise ConfigError("give either sweep.values or start/stop/steps, not both", line)
        raw = table["values"]
        if not isinstance(raw, list) or not raw:
            raise ConfigError("sweep.values must be a non-empty array", line)
        values = tuple(_typed(v, float, "sweep.values", line) for v in raw)
    else:
        for k in ("start", "stop", "steps"):
            if k not in table:
                raise ConfigError(f"missing required key 'sweep.{k}' (or give sweep.values)")
        start = _typed(table["start"], float, "sweep.start", lines.get(("sweep", "start")))
        stop = _typed(table["stop"], float, "sweep.stop", lines.get(("sweep", "stop")))
        steps = _typed(table["steps"], int, "sweep.steps", lines.get(("sweep", "steps")))
        if steps < 1:
            raise ConfigError("sweep.steps must be >= 1", lines.get(("sweep", "steps")))
        if steps == 1:
            values = (start,)
        else:
            values = tuple(start + (stop - start) * i / (steps - 1) for i in range(steps))
    optimize = _typed(table.get("optimize", False), bool, "sweep.optimize", lines.get(("sweep", "optimize")))
    iters = _typed(table.get("refine_iterations", 40), int, "sweep.refine_iterations",
                   lines.get(("sweep", "refine_iterations")))
    return SweepConfig(name, values, optimize, iters)


def parse_config(text: str, command: Optional[str] = None) -> RunConfig:
    """Parse config text; ``command="sweep"`` additionally requires a [sweep] table.

    Raises:
        ConfigError: first problem found, with its line number when it has one.
    """
    lines = _scan_lines(text)
    data = _decode(text)
    for key, value in data.items():
        if isinstance(value, dict):
            if key not in ("physical", "experiment", "sweep"):
                raise ConfigError(f"unknown table [{key}]", lines.get(("", key)))
        elif key != "output_dir":
            raise ConfigError(f"unknown key {key!r}", lines.get(("", key)))
    physical = _parse_physical(data.get("physical", {}), lines)
    experiment = _parse_experiment(data.get("experiment", {}), lines)
    sweep = _parse_sweep(data["sweep"], lines) if "sweep" in data else None
    if command == "sweep" and sweep is None:
        raise ConfigError("missing required table [sweep]")
    output_dir = _typed(data.get("output_dir", "out"), str, "output_dir", lines.get(("", "output_dir")))
    cfg = RunConfig(physical, experiment, sweep, output_dir)
    # surface PhysicalParams validation as a config error
    try:
        cfg.physical()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load_config(path, command: Optional[str] = None) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), command)


def default_config_text() -> str:
    """Text of the shipped paper_defaults configuration."""
    return resources.files("bectransfer").joinpath("configs/paper_defaults.toml").read_text("utf-8")

"""
Run configuration: TOML ingestion, validation and unit conversion.

Config layout (user-facing units: um, degC, mm, mW, mm^2)::

    material = "builtin:ktp"          # or a path relative to this file

    [mapping]
    h_axis = "z"
    v_axis = "y"

    [targets]
    pump_um = 0.655
    degenerate = true                 # or signal_um = 0.8073
    orders = [[3, 1], [3, -1]]
    l_min = 3
    l_max = 100
    t_min_c = 20.0
    t_max_c = 120.0
    t_step_c = 0.5

    [device]
    length_mm = 20.0
    d_pm_v = 3.9
    pump_mw = 1.0
    beam_area_mm2 = 0.01

    [output]
    dir = "out"
    pattern_format = "txt"            # or "csv"

    [run]
    seed = 20240601
    grid_half_span_fwhm = 10.0
    grid_points_per_fwhm = 64
    pattern_length_um = 1000.0
    audit_periods = 4
    jitter_sigmas_um = [0.0, 0.01, 0.05]
    jitter_trials = 200
    tune_step_c = 1.0
    tune_window_um = 0.05

    [expected.<quantity>]             # optional reference values, see cli.EXPECTED_UNITS
    value = 1.056
    rel_tol = 0.01                    # or abs_tol, or exact = true
    compare = "set"                   # lists only: order-free comparison
    waiver = "why a miss is accepted"

Everything except `material`, `[targets].pump_um` and `[device]` has a default.
"""

from __future__ import annotations

import hashlib
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .dispersion import CrystalAxis, DispersionModel, PolarizationMapping, builtin_material, load_dispersion_file
from .phasematch import DesignTargets

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


_SCHEMA = {
    "": {"material"},
    "mapping": {"h_axis", "v_axis"},
    "targets": {"pump_um", "signal_um", "degenerate", "orders", "l_min", "l_max", "t_min_c", "t_max_c", "t_step_c"},
    "device": {"length_mm", "d_pm_v", "pump_mw", "beam_area_mm2"},
    "output": {"dir", "pattern_format"},
    "run": {
        "seed",
        "grid_half_span_fwhm",
        "grid_points_per_fwhm",
        "pattern_length_um",
        "audit_periods",
        "jitter_sigmas_um",
        "jitter_trials",
        "tune_step_c",
        "tune_window_um",
    },
    "expected": None,  # free-form, checked in _parse_expected
}
_EXPECTED_KEYS = {"value", "unit", "rel_tol", "abs_tol", "exact", "compare", "waiver"}


@dataclass(frozen=True)
class DeviceParams:
    length_mm: float
    d_pm_v: float
    pump_mw: float
    beam_area_mm2: float

    @property
    def length_m(self) -> float:
        return self.length_mm * 1e-3

    @property
    def pump_w(self) -> float:
        return self.pump_mw * 1e-3

    @property
    def beam_area_m2(self) -> float:
        return self.beam_area_mm2 * 1e-6


@dataclass(frozen=True)
class RunParams:
    seed: int = 0
    grid_half_span_fwhm: float = 10.0
    grid_points_per_fwhm: int = 64
    pattern_length_um: float = 1000.0
    audit_periods: int = 4
    jitter_sigmas_um: tuple = (0.0, 0.01, 0.05)
    jitter_trials: int = 200
    tune_step_c: float = 1.0
    tune_window_um: float = 0.05


@dataclass(frozen=True)
class Expectation:
    value: object  # float, list of floats, or str
    rel_tol: Optional[float] = None
    abs_tol: Optional[float] = None
    exact: bool = False
    compare: str = "elementwise"
    waiver: Optional[str] = None


@dataclass(frozen=True)
class RunConfig:
    path: Path
    sha256: str
    material_ref: str
    model: DispersionModel = field(repr=False)
    mapping: PolarizationMapping
    targets: DesignTargets
    device: DeviceParams
    run: RunParams
    out_dir: Path
    pattern_format: str = "txt"
    expected: dict = field(default_factory=dict)

    def echo(self) -> dict:
        """Inputs as given, for the datasheet."""
        t = self.targets
        return {
            "material": self.material_ref,
            "mapping": {"h_axis": self.mapping.h_axis.value, "v_axis": self.mapping.v_axis.value},
            "targets": {
                "pump_um": t.pump,
                "signal_um": t.signal,
                "degenerate": t.degenerate,
                "orders": [list(o.as_tuple()) for o in t.orders],
                "l_range": list(t.l_range),
                "temp_interval_c": list(t.temp_interval),
                "temp_step_c": t.temp_step,
            },
            "device": {
                "length_mm": self.device.length_mm,
                "d_pm_v": self.device.d_pm_v,
                "pump_mw": self.device.pump_mw,
                "beam_area_mm2": self.device.beam_area_mm2,
            },
            "run": {
                "seed": self.run.seed,
                "grid_half_span_fwhm": self.run.grid_half_span_fwhm,
                "grid_points_per_fwhm": self.run.grid_points_per_fwhm,
                "pattern_length_um": self.run.pattern_length_um,
                "audit_periods": self.run.audit_periods,
                "jitter_sigmas_um": list(self.run.jitter_sigmas_um),
                "jitter_trials": self.run.jitter_trials,
                "tune_step_c": self.run.tune_step_c,
                "tune_window_um": self.run.tune_window_um,
            },
        }


def _number(table, key, section, default=None, kind=float, positive=False):
    if key not in table:
        if default is None:
            raise ConfigError(f"[{section}] is missing required key '{key}'")
        return default
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"[{section}].{key} must be a number, got {value!r}")
    if kind is int and int(value) != value:
        raise ConfigError(f"[{section}].{key} must be an integer, got {value!r}")
    value = kind(value)
    if not math.isfinite(value):
        raise ConfigError(f"[{section}].{key} must be finite")
    if positive and value <= 0:
        raise ConfigError(f"[{section}].{key} must be positive, got {value}")
    return value


def _check_keys(doc):
    for key, value in doc.items():
        if isinstance(value, dict):
            if key not in _SCHEMA or key == "":
                raise ConfigError(f"unknown table [{key}]; allowed: {sorted(k for k in _SCHEMA if k)}")
            allowed = _SCHEMA[key]
            if allowed is not None:
                extra = set(value) - allowed
                if extra:
                    raise ConfigError(f"unknown key(s) {sorted(extra)} in [{key}]; allowed: {sorted(allowed)}")
        elif key not in _SCHEMA[""]:
            raise ConfigError(f"unknown top-level key '{key}'; allowed: {sorted(_SCHEMA[''])}")


def _load_material(ref: str, base: Path):
    if ref.startswith("builtin:"):
        return builtin_material(ref.split(":", 1)[1])
    path = Path(ref)
    if not path.is_absolute():
        path = base / path
    if not path.is_file():
        raise ConfigError(f"material file not found: {path}")
    return load_dispersion_file(path)


def _parse_targets(t: dict) -> DesignTargets:
    pump = _number(t, "pump_um", "targets", positive=True)
    degenerate = t.get("degenerate", "signal_um" not in t)
    if not isinstance(degenerate, bool):
        raise ConfigError("[targets].degenerate must be true or false")
    if degenerate and "signal_um" in t:
        raise ConfigError("[targets] sets both degenerate = true and signal_um; pick one")
    signal = None if degenerate else _number(t, "signal_um", "targets", positive=True)
    if signal is not None and not pump < signal < 2 * pump:
        raise ConfigError(f"[targets].signal_um = {signal} must lie between pump_um and 2*pump_um")
    orders = t.get("orders", [[3, 1], [3, -1]])
    if not (isinstance(orders, list) and len(orders) == 2 and all(isinstance(o, list) and len(o) == 2 for o in orders)):
        raise ConfigError("[targets].orders must be two [m, n] pairs, e.g. [[3, 1], [3, -1]]")
    l_min = _number(t, "l_min", "targets", 3, int)
    l_max = _number(t, "l_max", "targets", 100, int)
    t_min = _number(t, "t_min_c", "targets", 20.0)
    t_max = _number(t, "t_max_c", "targets", 120.0)
    step = _number(t, "t_step_c", "targets", 0.5, positive=True)
    try:
        return DesignTargets(pump, signal, tuple(tuple(o) for o in orders), (t_min, t_max), (l_min, l_max), step)
    except ValueError as exc:
        raise ConfigError(f"[targets]: {exc}") from None


def _parse_expected(table: dict) -> dict:
    out = {}
    for name, spec in table.items():
        if not isinstance(spec, dict) or "value" not in spec:
            raise ConfigError(f"[expected.{name}] must be a table with at least 'value'")
        extra = set(spec) - _EXPECTED_KEYS
        if extra:
            raise ConfigError(f"unknown key(s) {sorted(extra)} in [expected.{name}]")
        compare = spec.get("compare", "elementwise")
        if compare not in ("elementwise", "set"):
            raise ConfigError(f"[expected.{name}].compare must be 'elementwise' or 'set'")
        if not (spec.get("exact") or "rel_tol" in spec or "abs_tol" in spec):
            raise ConfigError(f"[expected.{name}] needs rel_tol, abs_tol or exact = true")
        out[name] = Expectation(
            spec["value"], spec.get("rel_tol"), spec.get("abs_tol"), bool(spec.get("exact", False)), compare, spec.get("waiver")
        )
    return dict(sorted(out.items()))


def load_config(path, overrides: Optional[dict] = None) -> RunConfig:
    """Read and validate a run config. `overrides` may set seed and out_dir."""
    path = Path(path)
    overrides = overrides or {}
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        doc = tomllib.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    _check_keys(doc)
    base = path.parent

    if "material" not in doc:
        raise ConfigError("config is missing 'material' (a path or 'builtin:ktp')")
    material_ref = str(doc["material"])
    model = _load_material(material_ref, base)

    m = doc.get("mapping", {})
    try:
        mapping = PolarizationMapping(CrystalAxis.parse(m.get("h_axis", "z")), CrystalAxis.parse(m.get("v_axis", "y")))
    except ValueError as exc:
        raise ConfigError(f"[mapping]: {exc}") from None

    if "targets" not in doc:
        raise ConfigError("config is missing the [targets] table")
    targets = _parse_targets(doc["targets"])

    if "device" not in doc:
        raise ConfigError("config is missing the [device] table")
    d = doc["device"]
    device = DeviceParams(
        _number(d, "length_mm", "device", positive=True),
        _number(d, "d_pm_v", "device", positive=True),
        _number(d, "pump_mw", "device", positive=True),
        _number(d, "beam_area_mm2", "device", positive=True),
    )

    r = doc.get("run", {})
    sigmas = r.get("jitter_sigmas_um", [0.0, 0.01, 0.05])
    if not isinstance(sigmas, list) or any(isinstance(s, bool) or not isinstance(s, (int, float)) or s < 0 for s in sigmas):
        raise ConfigError("[run].jitter_sigmas_um must be a list of non-negative numbers")
    seed = overrides.get("seed")
    if seed is None:
        seed = _number(r, "seed", "run", 0, int)
    if not 0 <= seed < 2**64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed}")
    run = RunParams(
        seed=int(seed),
        grid_half_span_fwhm=_number(r, "grid_half_span_fwhm", "run", 10.0, positive=True),
        grid_points_per_fwhm=_number(r, "grid_points_per_fwhm", "run", 64, int, positive=True),
        pattern_length_um=_number(r, "pattern_length_um", "run", 1000.0, positive=True),
        audit_periods=_number(r, "audit_periods", "run", 4, int, positive=True),
        jitter_sigmas_um=tuple(float(s) for s in sigmas),
        jitter_trials=_number(r, "jitter_trials", "run", 200, int, positive=True),
        tune_step_c=_number(r, "tune_step_c", "run", 1.0, positive=True),
        tune_window_um=_number(r, "tune_window_um", "run", 0.05, positive=True),
    )

    o = doc.get("output", {})
    out_dir = overrides.get("out_dir") or o.get("dir", "out")
    out_dir = Path(out_dir)
    if not out_dir.is_absolute() and overrides.get("out_dir") is None:
        out_dir = base / out_dir
    fmt = o.get("pattern_format", "txt")
    if fmt not in ("txt", "csv"):
        raise ConfigError("[output].pattern_format must be 'txt' or 'csv'")

    return RunConfig(
        path=path,
        sha256=hashlib.sha256(raw).hexdigest(),
        material_ref=material_ref,
        model=model,
        mapping=mapping,
        targets=targets,
        device=device,
        run=run,
        out_dir=out_dir,
        pattern_format=fmt,
        expected=_parse_expected(doc.get("expected", {})),
    )

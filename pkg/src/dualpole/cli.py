"""
Command-line front end.

    dualpole design   --config run.toml [--out DIR] [--seed N]
    dualpole spectrum --config run.toml [--mode exact|linearized]
    dualpole pattern  --config run.toml [--length-um 1000]
    dualpole tune     --config run.toml [--tmin 20 --tmax 120]

Exit codes: 0 success, 1 invalid input, 2 no design found, 3 numerical failure.
Errors are also written to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .biphoton import (
    GridSpec,
    PumpConfig,
    closed_form_concurrence,
    concurrence_oracle,
    joint_spectrum,
    make_device,
    source_figures,
)
from .config import ConfigError, RunConfig, load_config
from .dispersion import DispersionError
from .grating import (
    aliased_coefficient,
    coefficient_phase,
    exact_walls,
    fourier_coefficient,
    min_domain,
    pattern_fourier,
    poling_error_mc,
    reciprocal,
    synthesize_pattern,
    write_pattern,
)
from .phasematch import NoDesignError, design_source, tuning_curve

EXIT_OK, EXIT_INPUT, EXIT_NO_DESIGN, EXIT_NUMERIC = 0, 1, 2, 3

FOURIER_ORDER_MAX = 5

# unit of each quantity that [expected] may reference
EXPECTED_UNITS = {
    "temperature_c": "degC",
    "reciprocals_rad_um": "rad/um",
    "lambda1_um": "um",
    "lambda2_um": "um",
    "l": "1",
    "duty2": "1",
    "bandwidth_ghz": "GHz",
    "reduction_factor": "1",
    "concurrence": "1",
    "rate_pairs_s": "pairs/s",
    "brightness": "pairs/(s GHz mW)",
}

_SUFFIX_UNITS = (
    ("_mm2", "mm^2"),
    ("_um", "um"),
    ("_mm", "mm"),
    ("_mw", "mW"),
    ("_pm_v", "pm/V"),
    ("_interval_c", "degC"),
    ("_step_c", "degC"),
    ("_c", "degC"),
    ("_fwhm", "FWHM"),
)


def q(value, unit: str) -> dict:
    """Numeric datasheet field. Non-finite values are stored as strings to keep the JSON valid."""
    if isinstance(value, float) and not math.isfinite(value):
        value = str(value)
    return {"unit": unit, "value": value}


def _annotate(node, key=""):
    """Wrap numeric leaves of an input echo with units inferred from key suffixes."""
    if isinstance(node, dict):
        return {k: _annotate(v, k) for k, v in node.items()}
    is_num = isinstance(node, (int, float)) and not isinstance(node, bool)
    is_num_list = isinstance(node, list) and node and all(isinstance(x, (int, float)) for x in node)
    if is_num or (is_num_list and key != "orders"):
        unit = next((u for s, u in _SUFFIX_UNITS if key.endswith(s)), "1")
        return q(node, unit)
    if key == "orders":
        return q(node, "1")
    return node


# -- computation ------------------------------------------------------------


@dataclass(frozen=True)
class Run:
    cfg: RunConfig
    solution: object
    device: object
    pump: PumpConfig
    warnings: tuple


def run_design(cfg: RunConfig) -> Run:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        sol = design_source(cfg.model, cfg.mapping, cfg.targets)
        device = make_device(cfg.model, cfg.mapping, sol, cfg.device.length_m, cfg.device.d_pm_v)
    msgs = tuple(sorted({f"{w.category.__name__}: {w.message}" for w in caught}))
    return Run(cfg, sol, device, PumpConfig(cfg.device.pump_w, cfg.device.beam_area_m2), msgs)


def pattern_audit(cfg: RunConfig, sol) -> dict:
    """Min-domain and Fourier checks on a whole number of common periods."""
    g = sol.grating
    period = g.common_period()
    length = cfg.run.audit_periods * period
    pattern = synthesize_pattern(g, length)
    walls = exact_walls(g, length)
    exact_min = min(b - a for a, b in zip(walls, walls[1:]))
    half_lam1 = g.exact_periods[0] / 2

    working = {}
    worst_single, worst_alias = 0.0, 0.0
    for m in range(-FOURIER_ORDER_MAX, FOURIER_ORDER_MAX + 1):
        for n in range(-FOURIER_ORDER_MAX, FOURIER_ORDER_MAX + 1):
            if m == 0 or n == 0:
                continue
            numeric = complex(pattern_fourier(pattern, reciprocal((m, n), g)))
            single = fourier_coefficient((m, n), g) * coefficient_phase((m, n), g)
            alias = aliased_coefficient((m, n), g)
            worst_single = max(worst_single, abs(numeric - single))
            worst_alias = max(worst_alias, abs(numeric - alias))
            for pid, order in (("HV", sol.order_hv), ("VH", sol.order_vh)):
                if (m, n) == order.as_tuple():
                    working[pid] = {
                        "order": q(list(order.as_tuple()), "1"),
                        "coefficient_single_term": q(fourier_coefficient(order, g), "1"),
                        "numeric_abs": q(abs(numeric), "1"),
                        "aliased_abs": q(abs(alias), "1"),
                        "residual_single_term": q(abs(numeric - single), "1"),
                        "residual_aliased": q(abs(numeric - alias), "1"),
                    }
    a_hv = abs(aliased_coefficient(sol.order_hv, g))
    a_vh = abs(aliased_coefficient(sol.order_vh, g))
    return {
        "length_um": q(length, "um"),
        "common_periods": q(cfg.run.audit_periods, "1"),
        "domain_walls": q(int(pattern.boundaries.size), "1"),
        "min_domain_um": q(min_domain(pattern), "um"),
        "half_lambda1_um": q(float(half_lam1), "um"),
        "min_domain_is_half_lambda1": exact_min == half_lam1,
        "fourier_order_max": q(FOURIER_ORDER_MAX, "1"),
        "max_residual_single_term": q(worst_single, "1"),
        "max_residual_aliased": q(worst_alias, "1"),
        "working_orders": working,
        "aliased_coupling_ratio": q(a_hv / a_vh, "1"),
        "_pattern": pattern,
    }


def jitter_stats(cfg: RunConfig, sol, pattern) -> list:
    G = reciprocal(sol.order_hv, sol.grating)
    out = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for sigma in cfg.run.jitter_sigmas_um:
            st = poling_error_mc(pattern, sigma, cfg.run.jitter_trials, G, cfg.run.seed)
            out.append(
                {
                    "sigma_um": q(st.sigma, "um"),
                    "trials": q(st.trials, "1"),
                    "mean_abs_coefficient": q(st.mean_abs, "1"),
                    "std_abs_coefficient": q(st.std_abs, "1"),
                    "wall_crossing_rate": q(st.crossing_rate, "1"),
                }
            )
    for w in caught:
        out.append({"warning": str(w.message)})
    return out


def _got_values(run: Run, figs) -> dict:
    sol = run.solution
    return {
        "temperature_c": sol.temperature,
        "reciprocals_rad_um": [sol.g_hv, sol.g_vh],
        "lambda1_um": sol.grating.lambda1,
        "lambda2_um": sol.grating.lambda2,
        "l": sol.grating.l,
        "duty2": str(sol.grating.duty2),
        "bandwidth_ghz": [figs.bandwidth_hv / (2 * math.pi) / 1e9, figs.bandwidth_vh / (2 * math.pi) / 1e9],
        "reduction_factor": [figs.reduction_hv, figs.reduction_vh],
        "concurrence": figs.concurrence,
        "rate_pairs_s": figs.rate,
        "brightness": figs.brightness,
    }


def _within(got, want, exp) -> bool:
    if exp.exact:
        if isinstance(want, str) or isinstance(got, str):
            return str(got) == str(want)
        return float(got) == float(want)
    tol = exp.abs_tol if exp.abs_tol is not None else exp.rel_tol * abs(want)
    return abs(got - want) <= tol


def evaluate_expected(cfg: RunConfig, got: dict) -> dict:
    """Compare computed quantities with [expected]; a miss with a waiver is 'waived'."""
    out = {}
    for name, exp in cfg.expected.items():
        if name not in got:
            raise ConfigError(f"[expected.{name}] names an unknown quantity; known: {sorted(got)}")
        value, want = got[name], exp.value
        if isinstance(want, list):
            value_list = list(value) if isinstance(value, list) else [value]
            if len(value_list) != len(want):
                raise ConfigError(f"[expected.{name}] has {len(want)} values, computed {len(value_list)}")
            if exp.compare == "set":
                pairs = zip(sorted(value_list), sorted(want))
            else:
                pairs = zip(value_list, want)
            ok = all(_within(g, w, exp) for g, w in pairs)
        elif isinstance(value, list):
            ok = all(_within(g, want, exp) for g in value)
        else:
            ok = _within(value, want, exp)
        status = "pass" if ok else ("waived" if exp.waiver else "fail")
        entry = {
            "expected": q(want, EXPECTED_UNITS[name]),
            "got": q(value, EXPECTED_UNITS[name]),
            "status": status,
        }
        if exp.exact:
            entry["tolerance"] = "exact"
        elif exp.abs_tol is not None:
            entry["tolerance"] = q(exp.abs_tol, EXPECTED_UNITS[name])
        else:
            entry["tolerance"] = q(exp.rel_tol, "relative")
        if exp.compare == "set":
            entry["compare"] = "set"
        if exp.waiver and not ok:
            entry["waiver"] = exp.waiver
        out[name] = entry
    return out


def build_datasheet(run: Run) -> dict:
    cfg, sol, device = run.cfg, run.solution, run.device
    figs = source_figures(device, run.pump)
    oracle_c = concurrence_oracle(device)
    audit = pattern_audit(cfg, sol)
    pattern = audit.pop("_pattern")
    # couplings of the fabricated pattern, all aliased orders included
    aliased_c = closed_form_concurrence(figs.s_hv, figs.s_vh, figs.delta_n, audit["aliased_coupling_ratio"]["value"])
    audit["concurrence_with_aliasing"] = q(aliased_c, "1")
    g = sol.grating
    got = _got_values(run, figs)
    two_pi_ghz = 2 * math.pi * 1e9
    return {
        "tool": {"name": "dualpole", "version": __version__},
        "config": {"file": cfg.path.name, "sha256": cfg.sha256},
        "material": {"ref": cfg.material_ref, "provenance": cfg.model.provenance},
        "inputs": _annotate(cfg.echo()),
        "design": {
            "temperature_c": q(sol.temperature, "degC"),
            "degenerate": sol.degenerate,
            "lambda_p_um": q(sol.lambda_p, "um"),
            "lambda_s_um": q(sol.lambda_s, "um"),
            "lambda_i_um": q(sol.lambda_i, "um"),
            "order_hv": q(list(sol.order_hv.as_tuple()), "1"),
            "order_vh": q(list(sol.order_vh.as_tuple()), "1"),
            "g_hv_rad_um": q(sol.g_hv, "rad/um"),
            "g_vh_rad_um": q(sol.g_vh, "rad/um"),
            "residual_hv_rad_um": q(sol.residuals[0], "rad/um"),
            "residual_vh_rad_um": q(sol.residuals[1], "rad/um"),
            "wavenumbers_rad_um": {k: q(v, "rad/um") for k, v in sorted(sol.wavenumbers.items())},
        },
        "grating": {
            "lambda1_um": q(g.lambda1, "um"),
            "lambda2_um": q(g.lambda2, "um"),
            "l": q(g.l, "1"),
            "duty1": {"exact": str(g.duty1), "unit": "1", "value": float(g.duty1)},
            "duty2": {"exact": str(g.duty2), "unit": "1", "value": float(g.duty2)},
            "common_period_um": q(g.common_period(), "um"),
            "d_eff_hv_pm_v": q(device.nonlinear.d_eff_hv, "pm/V"),
            "d_eff_vh_pm_v": q(device.nonlinear.d_eff_vh, "pm/V"),
        },
        "pattern_audit": audit,
        "poling_jitter": jitter_stats(cfg, sol, pattern),
        "figures": {
            "bandwidth_hv_ghz": q(figs.bandwidth_hv / two_pi_ghz, "GHz"),
            "bandwidth_vh_ghz": q(figs.bandwidth_vh / two_pi_ghz, "GHz"),
            "bandwidth_hv_rad_s": q(figs.bandwidth_hv, "rad/s"),
            "bandwidth_vh_rad_s": q(figs.bandwidth_vh, "rad/s"),
            "reduction_hv": q(figs.reduction_hv, "1"),
            "reduction_vh": q(figs.reduction_vh, "1"),
            "concurrence": q(figs.concurrence, "1"),
            "concurrence_oracle": q(oracle_c, "1"),
            "delta_n": q(figs.delta_n, "1"),
            "s_hv_s_m": q(figs.s_hv, "s/m"),
            "s_vh_s_m": q(figs.s_vh, "s/m"),
            "rate_pairs_s": q(figs.rate, "pairs/s"),
            "brightness": q(figs.brightness, "pairs/(s GHz mW)"),
            "correlation_time_transit_ps": q(figs.correlation.transit * 1e12, "ps"),
            "correlation_time_bandwidth_ps": q(figs.correlation.bandwidth * 1e12, "ps"),
            "amplitude_hv": q(figs.amplitude_hv, "s^-1/2 (field-normalized)"),
            "amplitude_vh": q(figs.amplitude_vh, "s^-1/2 (field-normalized)"),
        },
        "checks": evaluate_expected(cfg, got),
        "warnings": list(run.warnings),
    }


def summary_text(ds: dict) -> str:
    v = lambda node: node["value"]
    d, g, f, a = ds["design"], ds["grating"], ds["figures"], ds["pattern_audit"]
    lines = [
        f"dualpole {ds['tool']['version']} design summary",
        f"config {ds['config']['file']} sha256 {ds['config']['sha256']}",
        f"material {ds['material']['ref']}: {ds['material']['provenance']}",
        "",
        f"pump {v(d['lambda_p_um']):.6g} um -> signal {v(d['lambda_s_um']):.6g} um + idler {v(d['lambda_i_um']):.6g} um",
        f"temperature        {v(d['temperature_c']):.3f} degC",
        f"reciprocals        HV {v(d['g_hv_rad_um']):.4f}  VH {v(d['g_vh_rad_um']):.4f} rad/um "
        f"(orders {v(d['order_hv'])}, {v(d['order_vh'])})",
        f"periods            lambda1 {v(g['lambda1_um']):.5f} um  lambda2 {v(g['lambda2_um']):.4f} um  l = {v(g['l'])}",
        f"duty cycles        {g['duty1']['exact']}, {g['duty2']['exact']}",
        f"d_eff              HV {v(g['d_eff_hv_pm_v']):.5f}  VH {v(g['d_eff_vh_pm_v']):.5f} pm/V",
        f"min domain         {v(a['min_domain_um']):.6f} um (lambda1/2 exact: {a['min_domain_is_half_lambda1']})",
        f"fourier residual   single-term {v(a['max_residual_single_term']):.3g}  aliased {v(a['max_residual_aliased']):.3g}",
        f"bandwidth          HV {v(f['bandwidth_hv_ghz']):.4f}  VH {v(f['bandwidth_vh_ghz']):.4f} GHz (x 2 pi)",
        f"reduction factor   HV {v(f['reduction_hv']):.2f}  VH {v(f['reduction_vh']):.2f}",
        f"concurrence        {v(f['concurrence']):.6f} (oracle {v(f['concurrence_oracle']):.6f})",
        f"pair rate          {v(f['rate_pairs_s']):.2f} pairs/s",
        f"brightness         {v(f['brightness']):.2f} pairs/(s GHz mW)",
        f"correlation time   transit {v(f['correlation_time_transit_ps']):.1f} ps, "
        f"bandwidth {v(f['correlation_time_bandwidth_ps']):.1f} ps",
    ]
    if ds["checks"]:
        lines += ["", "reference checks:"]
        for name, c in ds["checks"].items():
            line = f"  {c['status'].upper():6s} {name}: got {c['got']['value']} expected {c['expected']['value']}"
            if "waiver" in c:
                line += f"  [waiver: {c['waiver']}]"
            lines.append(line)
    if ds["warnings"]:
        lines += ["", "warnings:"] + [f"  {w}" for w in ds["warnings"]]
    return "\n".join(lines) + "\n"


def _comment_header(cfg: RunConfig, kind: str) -> list:
    return [
        f"dualpole {__version__} {kind}",
        f"config_sha256 = {cfg.sha256}",
        f"material = {cfg.model.provenance}",
    ]


def spectrum_csv(run: Run, mode: str) -> str:
    cfg = run.cfg
    grid = GridSpec(cfg.run.grid_half_span_fwhm, cfg.run.grid_points_per_fwhm)
    spec = joint_spectrum(run.device, grid, mode)
    lines = [f"# {h}" for h in _comment_header(cfg, "joint spectral density")]
    lines.append(f"# mode = {mode}")
    lines.append(f"# temperature_c = {run.solution.temperature!r}")
    lines.append("nu_ghz,density_hv,density_vh")
    nu_ghz = spec.nu / (2 * math.pi) / 1e9
    for x, a, b in zip(nu_ghz, spec.density_hv, spec.density_vh):
        lines.append(f"{x:.9g},{a:.12g},{b:.12g}")
    return "\n".join(lines) + "\n"


def tune_samples(tmin: float, tmax: float, step: float, design_t: float) -> list:
    if not tmin < tmax:
        raise ConfigError(f"need tmin < tmax, got {tmin}, {tmax}")
    n = int(math.floor((tmax - tmin) / step + 1e-9))
    temps = [tmin + i * step for i in range(n + 1)]
    if temps[-1] < tmax:
        temps.append(tmax)
    if tmin <= design_t <= tmax:
        temps.append(design_t)
    temps = sorted(set(temps))
    out = [temps[0]]
    for t in temps[1:]:
        if t - out[-1] > 1e-9:
            out.append(t)
        elif t == design_t:
            out[-1] = t
    return out


def tune_csv(run: Run, tmin: float, tmax: float) -> str:
    cfg = run.cfg
    temps = tune_samples(tmin, tmax, cfg.run.tune_step_c, run.solution.temperature)
    curve = tuning_curve(cfg.model, cfg.mapping, run.solution, temps, cfg.run.tune_window_um)
    lines = [f"# {h}" for h in _comment_header(cfg, "tuning curves")]
    lines.append(f"# design_temperature_c = {run.solution.temperature!r}")
    lines.append("# gap column lists processes with no phase-matched signal in the search window; their cells are nan")
    lines.append("temperature_c,hv_signal_um,hv_idler_um,vh_signal_um,vh_idler_um,gap")
    for i, t in enumerate(curve.temperatures):
        cells, gaps = [f"{t!r}"], []
        for pid in ("HV", "VH"):
            point = curve.curves[pid][i]
            if point is None:
                cells += ["nan", "nan"]
                gaps.append(pid)
            else:
                cells += [f"{point[0]!r}", f"{point[1]!r}"]
        cells.append(";".join(gaps))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def pattern_text(run: Run, length_um: float) -> tuple:
    """(file text, audit lines) for a pattern of the given length."""
    cfg, sol = run.cfg, run.solution
    g = sol.grating
    if not length_um >= g.lambda2:
        raise ConfigError(f"pattern length {length_um} um is shorter than lambda2 = {g.lambda2:.6f} um")
    pattern = synthesize_pattern(g, length_um)
    audit = pattern_audit(cfg, sol)
    audit.pop("_pattern")
    text = write_pattern(pattern, grating=g, fmt=cfg.pattern_format, extra_header=tuple(_comment_header(cfg, "domain pattern")))
    lines = [
        f"pattern length {length_um} um, {pattern.boundaries.size} domain walls",
        f"min domain {min_domain(pattern):.6f} um (lambda1/2 = {g.lambda1 / 2:.6f} um)",
        f"fourier audit over {audit['common_periods']['value']} common periods ({audit['length_um']['value']:.4f} um):",
    ]
    for pid, w in sorted(audit["working_orders"].items()):
        lines.append(
            f"  {pid} order {tuple(w['order']['value'])}: residual vs single-term {w['residual_single_term']['value']:.3e}, "
            f"vs aliased sum {w['residual_aliased']['value']:.3e}"
        )
    return text, lines


# -- output -------------------------------------------------------------------


def write_atomic(files: dict, out_dir: Path) -> None:
    """Write {name: text} into out_dir; each file appears complete or not at all."""
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=f".{name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            os.chmod(tmp, 0o644)
            os.replace(tmp, out_dir / name)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def datasheet_json(ds: dict) -> str:
    return json.dumps(ds, indent=2, sort_keys=True, allow_nan=False) + "\n"


# -- commands -----------------------------------------------------------------


def cmd_design(cfg: RunConfig) -> dict:
    run = run_design(cfg)
    ds = build_datasheet(run)
    write_atomic({"datasheet.json": datasheet_json(ds), "summary.txt": summary_text(ds)}, cfg.out_dir)
    return ds


def cmd_spectrum(cfg: RunConfig, mode: str = "linearized") -> str:
    run = run_design(cfg)
    text = spectrum_csv(run, mode)
    write_atomic({f"spectrum_{mode}.csv": text}, cfg.out_dir)
    return text


def cmd_pattern(cfg: RunConfig, length_um=None) -> list:
    run = run_design(cfg)
    length = cfg.run.pattern_length_um if length_um is None else length_um
    text, lines = pattern_text(run, length)
    write_atomic({f"pattern.{cfg.pattern_format}": text}, cfg.out_dir)
    return lines


def cmd_tune(cfg: RunConfig, tmin=None, tmax=None) -> str:
    run = run_design(cfg)
    lo, hi = cfg.targets.temp_interval
    text = tune_csv(run, lo if tmin is None else tmin, hi if tmax is None else tmax)
    write_atomic({"tuning.csv": text}, cfg.out_dir)
    return text


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dualpole", description="Design and analyze dual-periodically poled backward-wave SPDC sources.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="run config (TOML)")
        p.add_argument("--out", help="output directory (overrides [output].dir)")
        p.add_argument("--seed", type=_u64, help="random seed (overrides [run].seed)")

    common(sub.add_parser("design", help="solve the design and write datasheet.json + summary.txt"))
    p = sub.add_parser("spectrum", help="write joint spectral densities as CSV")
    common(p)
    p.add_argument("--mode", choices=("linearized", "exact"), default="linearized")
    p = sub.add_parser("pattern", help="write the domain pattern and print its audit")
    common(p)
    p.add_argument("--length-um", type=float, help="pattern length in um (default [run].pattern_length_um)")
    p = sub.add_parser("tune", help="write temperature tuning curves as CSV")
    common(p)
    p.add_argument("--tmin", type=float, help="lowest temperature, degC")
    p.add_argument("--tmax", type=float, help="highest temperature, degC")
    return parser


def _fail(code: int, exc: BaseException) -> int:
    err = {"error": type(exc).__name__, "exit_code": code, "message": str(exc)}
    print(json.dumps(err, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = {"seed": args.seed, "out_dir": Path(args.out) if args.out else None}
        cfg = load_config(args.config, overrides)
        if args.command == "design":
            ds = cmd_design(cfg)
            print(summary_text(ds), end="")
        elif args.command == "spectrum":
            cmd_spectrum(cfg, args.mode)
            print(f"wrote {cfg.out_dir / f'spectrum_{args.mode}.csv'}")
        elif args.command == "pattern":
            lines = cmd_pattern(cfg, args.length_um)
            print("\n".join(lines))
            print(f"wrote {cfg.out_dir / f'pattern.{cfg.pattern_format}'}")
        elif args.command == "tune":
            cmd_tune(cfg, args.tmin, args.tmax)
            print(f"wrote {cfg.out_dir / 'tuning.csv'}")
    except NoDesignError as exc:
        return _fail(EXIT_NO_DESIGN, exc)
    except (ConfigError, DispersionError, ValueError) as exc:
        return _fail(EXIT_INPUT, exc)
    except (ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        return _fail(EXIT_NUMERIC, exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

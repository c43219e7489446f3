"""
Quasi-phase matching for two concurrent backward-wave processes.

The pump (H) and signal travel along +x, the idler along -x. Process HV makes
an H signal and a V idler, process VH the opposite. Each needs

    dk = k_p,H - k_s,q + k_i,q' - K = 0

(note the + sign on the counter-propagating idler). A dual-periodic grating
supplies both reciprocals K at once; the design problem is to find a
temperature at which the two required reciprocals give periods with
Lambda_2 / Lambda_1 = l / 2 for an integer l > 2.

Wavelengths in um, temperatures in degC, wave numbers in rad/um.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .dispersion import CONSTANTS, DispersionModel, OutOfRangeError, PolarizationMapping, wavenumber
from .grating import DualGrating, ReciprocalOrder, _as_order, reciprocal

PROCESSES = ("HV", "VH")
RATIO_TOL = 1e-9
RESIDUAL_TOL = 1e-6  # rad/um


class NoDesignError(RuntimeError):
    """No temperature/l combination satisfies the design constraint."""


class MultipleRootsWarning(UserWarning):
    pass


def idler_wavelength(lambda_p: float, lambda_s: float) -> float:
    return 1.0 / (1.0 / lambda_p - 1.0 / lambda_s)


def angular_frequency(lambda_um: float) -> float:
    """Vacuum wavelength (um) to angular frequency (rad/s)."""
    return 2 * math.pi * CONSTANTS.c / (lambda_um * 1e-6)


@dataclass(frozen=True)
class ProcessSpec:
    """One SPDC process; `process_id` names the signal then idler polarization."""

    pump: float
    signal: float
    idler: float
    process_id: str

    def __post_init__(self):
        if self.process_id not in PROCESSES:
            raise ValueError(f"process_id must be one of {PROCESSES}, got {self.process_id!r}")
        if min(self.pump, self.signal, self.idler) <= 0:
            raise ValueError("wavelengths must be positive")
        lhs = 1.0 / self.pump
        rhs = 1.0 / self.signal + 1.0 / self.idler
        if abs(lhs - rhs) > 1e-9 * lhs:
            raise ValueError(
                f"energy conservation violated: 1/{self.pump} != 1/{self.signal} + 1/{self.idler}"
            )

    @classmethod
    def from_pump_signal(cls, pump: float, signal: Optional[float], process_id: str) -> "ProcessSpec":
        """Idler from energy conservation; ``signal=None`` means degenerate."""
        if signal is None:
            signal = idler = 2.0 * pump
        else:
            idler = idler_wavelength(pump, signal)
        return cls(pump, signal, idler, process_id)

    @property
    def signal_pol(self) -> str:
        return self.process_id[0]

    @property
    def idler_pol(self) -> str:
        return self.process_id[1]


def delta_k(model: DispersionModel, mapping: PolarizationMapping, proc: ProcessSpec, G: float, T: float) -> float:
    k_p = wavenumber(model, mapping.h_axis, proc.pump, T)
    k_s = wavenumber(model, mapping.axis(proc.signal_pol), proc.signal, T)
    k_i = wavenumber(model, mapping.axis(proc.idler_pol), proc.idler, T)
    return k_p - k_s + k_i - G


def _wavelengths(lambda_p, lambda_s):
    if lambda_s is None:
        return lambda_p, 2.0 * lambda_p, 2.0 * lambda_p
    return lambda_p, lambda_s, idler_wavelength(lambda_p, lambda_s)


def required_reciprocals(model, mapping, lambda_p: float, lambda_s: Optional[float], T: float):
    """Reciprocals (G_hv, G_vh) that zero both residuals; ``lambda_s=None`` is degenerate."""
    lp, ls, li = _wavelengths(lambda_p, lambda_s)
    h, v = mapping.h_axis, mapping.v_axis
    k_p = wavenumber(model, h, lp, T)
    g_hv = k_p - wavenumber(model, h, ls, T) + wavenumber(model, v, li, T)
    g_vh = k_p - wavenumber(model, v, ls, T) + wavenumber(model, h, li, T)
    return g_hv, g_vh


def periods_for_orders(G1: float, G2: float, order1, order2) -> tuple:
    """Solve 2 pi (m_j / Lambda_1 + n_j / Lambda_2) = G_j for (Lambda_1, Lambda_2)."""
    o1, o2 = _as_order(order1), _as_order(order2)
    det = o1.m * o2.n - o2.m * o1.n
    if det == 0:
        raise ValueError(f"orders {o1.as_tuple()} and {o2.as_tuple()} are linearly dependent")
    a = (G1 * o2.n - G2 * o1.n) / (2 * math.pi * det)  # 1 / Lambda_1
    b = (o1.m * G2 - o2.m * G1) / (2 * math.pi * det)  # 1 / Lambda_2
    if a <= 0 or b <= 0:
        raise ValueError("orders and reciprocals give non-positive periods")
    return 1.0 / a, 1.0 / b


def periods_from_reciprocals(G_low: float, G_high: float, m: int, cap: float = 1e6) -> tuple:
    """Periods for orders (m, -1) -> G_low and (m, +1) -> G_high. `cap` bounds Lambda_2 (um)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if not 0 < G_low < G_high:
        raise ValueError(f"need 0 < G_low < G_high, got {G_low}, {G_high}")
    lam1 = 4 * math.pi * m / (G_low + G_high)
    lam2 = 4 * math.pi / (G_high - G_low)
    if lam2 > cap:
        raise ValueError(f"reciprocals too close: lambda2 = {lam2:g} um exceeds cap {cap:g} um")
    if not lam1 < lam2:
        raise ValueError(f"lambda1 = {lam1:g} um is not shorter than lambda2 = {lam2:g} um")
    return lam1, lam2


def assign_orders(g_hv: float, g_vh: float, orders) -> tuple:
    """Pair the order set with the reciprocal set so both periods are positive and Lambda_1 < Lambda_2.

    Returns (order_hv, order_vh, lambda1, lambda2).
    """
    o1, o2 = (_as_order(o) for o in orders)
    for a, b in ((o1, o2), (o2, o1)):
        try:
            lam1, lam2 = periods_for_orders(g_hv, g_vh, a, b)
        except ValueError:
            continue
        if lam1 < lam2:
            return a, b, lam1, lam2
    raise ValueError(f"orders {o1.as_tuple()}, {o2.as_tuple()} cannot produce reciprocals {g_hv:.6g}, {g_vh:.6g}")


@dataclass(frozen=True)
class DesignTargets:
    pump: float
    signal: Optional[float] = None  # None: degenerate
    orders: tuple = ((3, 1), (3, -1))
    temp_interval: tuple = (20.0, 120.0)
    l_range: tuple = (3, 100)
    temp_step: float = 0.5

    def __post_init__(self):
        o1, o2 = (_as_order(o) for o in self.orders)
        object.__setattr__(self, "orders", (o1, o2))
        if abs(o1.m * o1.n) != abs(o2.m * o2.n):
            raise ValueError("orders must satisfy m1*n1 = +-m2*n2")
        lo, hi = self.temp_interval
        if not lo < hi:
            raise ValueError("temperature interval must be increasing")
        if self.l_range[0] < 3 or self.l_range[1] < self.l_range[0]:
            raise ValueError("l range must be increasing and start at >= 3")

    @property
    def degenerate(self) -> bool:
        return self.signal is None

    @property
    def center(self) -> float:
        return 0.5 * sum(self.temp_interval)


@dataclass(frozen=True)
class DesignSolution:
    temperature: float
    grating: DualGrating
    order_hv: ReciprocalOrder
    order_vh: ReciprocalOrder
    g_hv: float  # rad/um
    g_vh: float
    lambda_p: float
    lambda_s: float
    lambda_i: float
    omega_s: float  # rad/s
    omega_i: float
    wavenumbers: dict = field(compare=False)  # {"s,H": ..., "s,V": ..., "i,H": ..., "i,V": ...} rad/um
    residuals: tuple = (0.0, 0.0)  # (dk_hv, dk_vh) rad/um
    degenerate: bool = False

    def process(self, process_id: str) -> ProcessSpec:
        return ProcessSpec(self.lambda_p, self.lambda_s, self.lambda_i, process_id)

    @property
    def omega_p(self) -> float:
        return angular_frequency(self.lambda_p)


def _ratio_function(model, mapping, lambda_p, lambda_s, orders):
    def ratio(T):
        g_hv, g_vh = required_reciprocals(model, mapping, lambda_p, lambda_s, T)
        _, _, lam1, lam2 = assign_orders(g_hv, g_vh, orders)
        return lam2 / lam1

    return ratio


def _temp_grid(interval, step):
    lo, hi = interval
    n = max(2, int(math.ceil((hi - lo) / step)) + 1)
    return np.linspace(lo, hi, n)


def _roots_for_level(ratio, grid, values, level):
    roots = []
    f = values - level
    for j in range(len(grid) - 1):
        if f[j] == 0:
            roots.append(float(grid[j]))
        elif f[j] * f[j + 1] < 0:
            T = brentq(lambda t: ratio(t) - level, grid[j], grid[j + 1], xtol=1e-12, rtol=4 * np.finfo(float).eps, maxiter=200)
            if abs(ratio(T) - level) > RATIO_TOL:
                raise ArithmeticError(f"root refinement missed tolerance at T={T}")
            roots.append(T)
    if f[-1] == 0:
        roots.append(float(grid[-1]))
    return roots


def solve_temperature_for_ratio(
    model, mapping, lambda_p: float, lambda_s: Optional[float], l: int, T_interval, orders=((3, 1), (3, -1)), step: float = 0.5
) -> float:
    """Temperature where Lambda_2/Lambda_1 = l/2, by bracketing then Brent refinement.

    Several roots: the one nearest the interval center wins and a
    `MultipleRootsWarning` is issued.
    """
    ratio = _ratio_function(model, mapping, lambda_p, lambda_s, orders)
    grid = _temp_grid(T_interval, step)
    values = np.array([ratio(t) for t in grid])
    roots = _roots_for_level(ratio, grid, values, l / 2)
    if not roots:
        raise NoDesignError(f"no design at l={l}: ratio never reaches {l / 2} in {tuple(T_interval)} degC")
    center = 0.5 * (T_interval[0] + T_interval[1])
    if len(roots) > 1:
        warnings.warn(f"{len(roots)} temperatures satisfy l={l}; using the one nearest {center} degC", MultipleRootsWarning, stacklevel=2)
    return min(roots, key=lambda t: abs(t - center))


def build_solution(model, mapping, lambda_p, lambda_s, l, T, orders) -> DesignSolution:
    lp, ls, li = _wavelengths(lambda_p, lambda_s)
    g_hv, g_vh = required_reciprocals(model, mapping, lambda_p, lambda_s, T)
    o_hv, o_vh, lam1, _ = assign_orders(g_hv, g_vh, orders)
    # Lambda_1 from the order sum keeps both residuals at the ratio-solver level
    lam1 = 2 * math.pi * (o_hv.m + o_vh.m) / (g_hv + g_vh) if o_hv.n == -o_vh.n else lam1
    grating = DualGrating.constrained(float(lam1), l)
    k = {}
    for j, lam in (("s", ls), ("i", li)):
        for q in ("H", "V"):
            k[f"{j},{q}"] = float(wavenumber(model, mapping.axis(q), lam, T))
    sol = DesignSolution(
        temperature=float(T),
        grating=grating,
        order_hv=o_hv,
        order_vh=o_vh,
        g_hv=float(g_hv),
        g_vh=float(g_vh),
        lambda_p=lp,
        lambda_s=ls,
        lambda_i=li,
        omega_s=angular_frequency(ls),
        omega_i=angular_frequency(li),
        wavenumbers=k,
        degenerate=lambda_s is None,
    )
    res = tuple(
        float(delta_k(model, mapping, sol.process(pid), reciprocal(o, grating), T))
        for pid, o in (("HV", o_hv), ("VH", o_vh))
    )
    if max(abs(r) for r in res) > RESIDUAL_TOL:
        raise ArithmeticError(f"design residuals {res} exceed {RESIDUAL_TOL} rad/um")
    return dataclasses.replace(sol, residuals=res)


def design_source(model, mapping, targets: DesignTargets) -> DesignSolution:
    """Sweep l, solve the temperature for each, keep the one nearest the interval center."""
    lo, hi = targets.temp_interval
    ratio = _ratio_function(model, mapping, targets.pump, targets.signal, targets.orders)
    grid = _temp_grid(targets.temp_interval, targets.temp_step)
    values = np.array([ratio(t) for t in grid])
    best = None
    for l in range(targets.l_range[0], targets.l_range[1] + 1):
        level = l / 2
        if level < values.min() or level > values.max():
            continue
        for T in _roots_for_level(ratio, grid, values, level):
            score = abs(T - targets.center)
            if lo <= T <= hi and (best is None or score < best[0]):
                best = (score, l, T)
    if best is None:
        raise NoDesignError(
            f"no l in {targets.l_range} admits a design in {targets.temp_interval} degC "
            f"(period ratio spans {values.min():.4f}..{values.max():.4f})"
        )
    _, l, T = best
    return build_solution(model, mapping, targets.pump, targets.signal, l, T, targets.orders)


@dataclass(frozen=True)
class TuningCurve:
    """Phase-matched (lambda_s, lambda_i) per temperature; None marks a gap."""

    temperatures: tuple
    curves: dict  # process_id -> tuple of (lambda_s, lambda_i) or None


def _solve_signal(model, mapping, sol, pid, G, T, window):
    lp = sol.lambda_p

    def resid(ls):
        return delta_k(model, mapping, ProcessSpec.from_pump_signal(lp, ls, pid), G, T)

    lo_m, hi_m = model.lambda_range
    # signal and idler both have to stay inside the material range
    lo = max(sol.lambda_s - window, lo_m, 1.0 / (1.0 / lp - 1.0 / hi_m))
    hi = min(sol.lambda_s + window, hi_m)
    if not lo < hi:
        return None
    grid = np.linspace(lo, hi, 41)
    vals = np.full(grid.size, np.nan)
    for j, x in enumerate(grid):
        try:
            vals[j] = resid(x)
        except OutOfRangeError:
            # rounding can push the idler just past the range edge at the bracket ends
            pass
    roots = []
    for j in range(len(grid) - 1):
        if vals[j] == 0:
            roots.append(grid[j])
        elif vals[j] * vals[j + 1] < 0:
            roots.append(brentq(resid, grid[j], grid[j + 1], xtol=1e-14, maxiter=200))
    if not roots:
        return None
    ls = min(roots, key=lambda x: abs(x - sol.lambda_s))
    return float(ls), float(idler_wavelength(lp, ls))


def tuning_curve(model, mapping, solution: DesignSolution, T_samples: Sequence[float], window: float = 0.05) -> TuningCurve:
    """Signal/idler wavelengths that phase-match each process at each temperature, grating fixed.

    `window` (um) bounds the signal search around the design wavelength.
    """
    temps = tuple(float(t) for t in T_samples)
    curves = {}
    for pid, order in (("HV", solution.order_hv), ("VH", solution.order_vh)):
        G = reciprocal(order, solution.grating)
        row = []
        for T in temps:
            try:
                row.append(_solve_signal(model, mapping, solution, pid, G, T, window))
            except OutOfRangeError:
                row.append(None)
        curves[pid] = tuple(row)
    return TuningCurve(temps, curves)

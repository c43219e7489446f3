"""
Biphoton analysis for a backward-wave dual-process source.

Detuning nu shifts the signal to Omega_s + nu and the idler to Omega_i - nu.
To first order in nu the residuals are dk = -nu S with

    S_HV = 1/u_H(Omega_s) + 1/u_V(Omega_i)
    S_VH = 1/u_V(Omega_s) + 1/u_H(Omega_i)

(sums, because the idler counter-propagates), and each component of the
two-photon state carries the amplitude h(L dk), h(x) = exp(-ix/2) sinc(x/2).

Normalization used for rates: the signal/idler field per unit angular
frequency is i sqrt(hbar w / (4 pi eps0 c n)), the pump is a cw plane wave
with |E_p|^2 = 2 P / (eps0 n_p c S_beam), and <Psi_2|Psi_2> integrated over
angular detuning is read as pairs per second. With this convention

    R = pi L P Omega_s Omega_i / (eps0 n_p c^3 S_beam)
        * [d_HV^2 / (n_sH n_iV S_HV) + d_VH^2 / (n_sV n_iH S_VH)]

SI units throughout this module unless a name says otherwise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import brentq

from .dispersion import CONSTANTS, DispersionModel, PolarizationMapping, group_index, refractive_index, wavenumber
from .grating import NonlinearCoefficient, PairingRuleWarning, effective_nonlinearity, reciprocal
from .phasematch import DesignSolution, angular_frequency


@lru_cache(maxsize=None)
def sinc2_half_point() -> float:
    """u > 0 with sinc^2(u) = 1/2."""
    return brentq(lambda u: (math.sin(u) / u) ** 2 - 0.5, 1.0, 2.0, xtol=1e-15)


def fwhm_constant() -> float:
    """c in FWHM = c * pi / (L S); 4 u_half / pi = 1.7718..."""
    return 4.0 * sinc2_half_point() / math.pi


@dataclass(frozen=True)
class CrystalDevice:
    length: float  # m
    nonlinear: NonlinearCoefficient  # pm/V
    design: DesignSolution
    model: DispersionModel
    mapping: PolarizationMapping

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError("crystal length must be positive")


def make_device(model, mapping, design: DesignSolution, length: float, d: float) -> CrystalDevice:
    """Device with d_HV, d_VH taken from the design's grating and orders (d in pm/V, length in m)."""
    nl = effective_nonlinearity(d, design.order_hv, design.order_vh, design.grating)
    return CrystalDevice(length, nl, design, model, mapping)


@dataclass(frozen=True)
class PumpConfig:
    power: float  # W
    area: float  # m^2

    def __post_init__(self):
        if self.power <= 0 or self.area <= 0:
            raise ValueError("pump power and beam area must be positive")

    @property
    def field_sq(self) -> float:
        """|E_p|^2 without the 1/n_p factor."""
        return 2 * self.power / (CONSTANTS.eps0 * CONSTANTS.c * self.area)


@dataclass(frozen=True)
class Indices:
    p: float
    s_h: float
    s_v: float
    i_h: float
    i_v: float

    @property
    def delta_n(self) -> float:
        return math.sqrt(self.s_h * self.i_v / (self.s_v * self.i_h))


def indices(device: CrystalDevice) -> Indices:
    d, m, mp = device.design, device.model, device.mapping
    T = d.temperature
    n = lambda pol, lam: float(refractive_index(m, mp.axis(pol), lam, T))
    return Indices(n("H", d.lambda_p), n("H", d.lambda_s), n("V", d.lambda_s), n("H", d.lambda_i), n("V", d.lambda_i))


def _inverse_gv(device, pol, lam):
    return float(group_index(device.model, device.mapping.axis(pol), lam, device.design.temperature)) / CONSTANTS.c


def gv_slopes(device: CrystalDevice) -> tuple:
    """(S_HV, S_VH) in s/m."""
    d = device.design
    s_hv = _inverse_gv(device, "H", d.lambda_s) + _inverse_gv(device, "V", d.lambda_i)
    s_vh = _inverse_gv(device, "V", d.lambda_s) + _inverse_gv(device, "H", d.lambda_i)
    return s_hv, s_vh


def h_function(x):
    """exp(-ix/2) sinc(x/2), with sinc(0) = 1."""
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5j * x) * np.sinc(x / (2 * math.pi))


@dataclass(frozen=True)
class GridSpec:
    """Uniform detuning grid: +-half_span_fwhm bandwidths, points_per_fwhm samples per bandwidth."""

    half_span_fwhm: float = 10.0
    points_per_fwhm: int = 64


@dataclass(frozen=True, eq=False)
class JointSpectrum:
    nu: np.ndarray  # rad/s
    h_hv: np.ndarray
    h_vh: np.ndarray
    s_hv: float
    s_vh: float
    mode: str
    grid: GridSpec

    @property
    def density_hv(self) -> np.ndarray:
        return np.abs(self.h_hv) ** 2

    @property
    def density_vh(self) -> np.ndarray:
        return np.abs(self.h_vh) ** 2


def _detuning_grid(device, grid: GridSpec, min_half_span=3.0, min_points=32):
    if grid.points_per_fwhm < min_points:
        raise ValueError(f"grid too coarse: {grid.points_per_fwhm} points per FWHM, need >= {min_points}")
    if grid.half_span_fwhm < min_half_span:
        raise ValueError(f"grid span +-{grid.half_span_fwhm} FWHM is narrower than +-{min_half_span} FWHM")
    bw = bandwidth_fwhm(device)
    step = min(bw) / grid.points_per_fwhm
    half = grid.half_span_fwhm * max(bw)
    n = int(math.ceil(half / step))
    return np.arange(-n, n + 1) * step


def joint_spectrum(device: CrystalDevice, grid: GridSpec = GridSpec(), mode: str = "linearized") -> JointSpectrum:
    """Complex component amplitudes h(L dk(nu)) on a symmetric detuning grid.

    "linearized" uses dk = -nu S; "exact" recomputes dk from the full dispersion
    with the design's grating reciprocals.
    """
    nu = _detuning_grid(device, grid)
    s_hv, s_vh = gv_slopes(device)
    L = device.length
    if mode == "linearized":
        dk_hv, dk_vh = -nu * s_hv, -nu * s_vh
    elif mode == "exact":
        dk_hv, dk_vh = exact_mismatch(device, nu)
    else:
        raise ValueError(f"mode must be 'linearized' or 'exact', got {mode!r}")
    return JointSpectrum(nu, h_function(L * dk_hv), h_function(L * dk_vh), s_hv, s_vh, mode, grid)


def exact_mismatch(device: CrystalDevice, nu) -> tuple:
    """(dk_HV, dk_VH) in rad/m at detuning nu from the full dispersion."""
    d, m, mp = device.design, device.model, device.mapping
    T = d.temperature
    lam_s = 2 * math.pi * CONSTANTS.c / (d.omega_s + nu) * 1e6
    lam_i = 2 * math.pi * CONSTANTS.c / (d.omega_i - nu) * 1e6
    k_p = wavenumber(m, mp.h_axis, d.lambda_p, T)
    out = []
    for sp, ip, order in (("H", "V", d.order_hv), ("V", "H", d.order_vh)):
        G = reciprocal(order, d.grating)
        dk = k_p - wavenumber(m, mp.axis(sp), lam_s, T) + wavenumber(m, mp.axis(ip), lam_i, T) - G
        out.append(dk * 1e6)
    return tuple(out)


def bandwidth_fwhm(device: CrystalDevice) -> tuple:
    """(dw_HV, dw_VH) in rad/s: 1.7718 pi / (L S)."""
    s_hv, s_vh = gv_slopes(device)
    c = fwhm_constant() * math.pi / device.length
    return c / s_hv, c / s_vh


def numeric_fwhm(nu, density) -> float:
    """Width between the outermost half-maximum crossings, linearly interpolated."""
    nu = np.asarray(nu)
    density = np.asarray(density)
    peak = int(np.argmax(density))
    half = 0.5 * density[peak]
    above = density >= half
    left = peak
    while left > 0 and above[left - 1]:
        left -= 1
    right = peak
    while right < len(nu) - 1 and above[right + 1]:
        right += 1
    if left == 0 or right == len(nu) - 1:
        raise ValueError("half maximum not reached inside the grid")

    def cross(i, j):
        return nu[i] + (half - density[i]) * (nu[j] - nu[i]) / (density[j] - density[i])

    return float(cross(right, right + 1) - cross(left - 1, left))


def peak_position(nu, density) -> float:
    """Peak detuning with parabolic refinement of the maximum sample."""
    i = int(np.argmax(density))
    if i == 0 or i == len(nu) - 1:
        return float(nu[i])
    y0, y1, y2 = density[i - 1], density[i], density[i + 1]
    denom = y0 - 2 * y1 + y2
    shift = 0.0 if denom == 0 else 0.5 * (y0 - y2) / denom
    return float(nu[i] + shift * (nu[i + 1] - nu[i]))


def forward_backward_reduction(device: CrystalDevice) -> tuple:
    """Bandwidth narrowing vs a forward type-II source: (1/u_H + 1/u_V) / |1/u_H - 1/u_V| per component.

    A group-velocity-matched pair gives math.inf (unbounded narrowing).
    """
    d = device.design
    out = []
    for s_pol, s_lam, i_pol, i_lam in (("H", d.lambda_s, "V", d.lambda_i), ("V", d.lambda_s, "H", d.lambda_i)):
        a, b = _inverse_gv(device, s_pol, s_lam), _inverse_gv(device, i_pol, i_lam)
        out.append(math.inf if a == b else (a + b) / abs(a - b))
    return tuple(out)


def closed_form_concurrence(s_hv: float, s_vh: float, delta_n: float, coupling_ratio: float = 1.0) -> float:
    """C = 2 S_min / (rho S_VH + S_HV / rho), rho = |A_HV d_HV| / |A_VH d_VH| = coupling_ratio / delta_n.

    With equal couplings this is 2 S_min / (delta_n S_HV + S_VH / delta_n).
    """
    if coupling_ratio == 0 or math.isinf(coupling_ratio):
        return 0.0
    if coupling_ratio == 1.0:
        return 2 * min(s_hv, s_vh) / (delta_n * s_hv + s_vh / delta_n)
    rho = coupling_ratio / delta_n
    return 2 * min(s_hv, s_vh) / (rho * s_vh + s_hv / rho)


def _coupling_ratio(nl: NonlinearCoefficient) -> float:
    if nl.d_eff_vh == 0:
        return math.inf
    return abs(nl.d_eff_hv) / abs(nl.d_eff_vh)


def concurrence_closed_form(device: CrystalDevice) -> float:
    s_hv, s_vh = gv_slopes(device)
    return closed_form_concurrence(s_hv, s_vh, indices(device).delta_n, _coupling_ratio(device.nonlinear))


def wootters_concurrence(rho: np.ndarray) -> float:
    """Two-qubit concurrence from the spin-flipped density matrix."""
    sy = np.array([[0, -1j], [1j, 0]])
    yy = np.kron(sy, sy)
    rho_tilde = yy @ rho.conj() @ yy
    ev = np.linalg.eigvals(rho @ rho_tilde)
    lam = np.sort(np.sqrt(np.clip(ev.real, 0, None)))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def density_matrix(nu, psi_hv, psi_vh) -> np.ndarray:
    """Polarization density matrix in {HH, HV, VH, VV} after tracing out detuning.

    `psi_hv`, `psi_vh` are the complex spectral amplitudes of the |H,V> and
    |V,H> components sampled on the uniform grid `nu`.
    """
    rho = np.zeros((4, 4), dtype=complex)
    rho[1, 1] = trapezoid(np.abs(psi_hv) ** 2, nu)
    rho[2, 2] = trapezoid(np.abs(psi_vh) ** 2, nu)
    rho[1, 2] = trapezoid(psi_hv * psi_vh.conj(), nu)
    rho[2, 1] = rho[1, 2].conjugate()
    return rho / np.trace(rho).real


ORACLE_GRID = GridSpec(half_span_fwhm=400.0, points_per_fwhm=64)


def _check_oracle_grid(grid):
    if grid.half_span_fwhm < 5 or grid.points_per_fwhm < 64:
        raise ValueError("oracle grid needs >= 10 FWHM total span and >= 64 points per FWHM")


def oracle_concurrence(s_hv: float, s_vh: float, amp_hv: complex, amp_vh: complex, length: float, grid: GridSpec = ORACLE_GRID) -> float:
    """Concurrence from numeric overlap integrals of linearized amplitudes, via Wootters.

    amp_* are the spectrally flat prefactors A d of each component.
    """
    _check_oracle_grid(grid)
    c = fwhm_constant() * math.pi / length
    bw = (c / s_hv, c / s_vh)
    step = min(bw) / grid.points_per_fwhm
    n = int(math.ceil(grid.half_span_fwhm * max(bw) / step))
    nu = np.arange(-n, n + 1) * step
    psi_hv = amp_hv * h_function(-length * nu * s_hv)
    psi_vh = amp_vh * h_function(-length * nu * s_vh)
    return wootters_concurrence(density_matrix(nu, psi_hv, psi_vh))


def polarization_state(device: CrystalDevice, grid: GridSpec = ORACLE_GRID, mode: str = "linearized") -> np.ndarray:
    spec = joint_spectrum(device, grid, mode)
    idx = indices(device)
    nl = device.nonlinear
    # the common factor i E_p sqrt(Omega_s Omega_i) L / (2c) drops out after normalization
    a_hv = nl.d_eff_hv / math.sqrt(idx.s_h * idx.i_v)
    a_vh = nl.d_eff_vh / math.sqrt(idx.s_v * idx.i_h)
    return density_matrix(spec.nu, a_hv * spec.h_hv, a_vh * spec.h_vh)


def concurrence_oracle(device: CrystalDevice, grid: GridSpec = ORACLE_GRID, mode: str = "linearized") -> float:
    """Concurrence of the device's polarization state by numeric integration (independent of the closed form)."""
    _check_oracle_grid(grid)
    return wootters_concurrence(polarization_state(device, grid, mode))


def amplitude_magnitudes(device: CrystalDevice, pump: PumpConfig) -> tuple:
    """(|A_HV|, |A_VH|) = |E_p| / (2c) sqrt(Omega_s Omega_i / (n n))."""
    idx = indices(device)
    d = device.design
    ep = math.sqrt(pump.field_sq / idx.p)
    base = ep / (2 * CONSTANTS.c) * math.sqrt(d.omega_s * d.omega_i)
    return base / math.sqrt(idx.s_h * idx.i_v), base / math.sqrt(idx.s_v * idx.i_h)


def pair_rate(device: CrystalDevice, pump: PumpConfig) -> float:
    """Pairs per second for a cw plane-wave pump."""
    nl = device.nonlinear
    if abs(abs(nl.d_eff_hv) - abs(nl.d_eff_vh)) > 1e-12 * max(abs(nl.d_eff_hv), abs(nl.d_eff_vh)):
        warnings.warn("unequal |d_HV| and |d_VH|: rate computed term by term", PairingRuleWarning, stacklevel=2)
    s_hv, s_vh = gv_slopes(device)
    idx = indices(device)
    d = device.design
    c = CONSTANTS.c
    d_hv, d_vh = nl.d_eff_hv * 1e-12, nl.d_eff_vh * 1e-12
    pref = math.pi * device.length * pump.power * d.omega_s * d.omega_i / (CONSTANTS.eps0 * idx.p * c**3 * pump.area)
    return pref * (d_hv**2 / (idx.s_h * idx.i_v * s_hv) + d_vh**2 / (idx.s_v * idx.i_h * s_vh))


def spectral_brightness(rate: float, bandwidths: tuple, power_mw: float) -> float:
    """2 pi R / dw in pairs / (s GHz mW), with dw the mean of the component FWHMs (rad/s)."""
    if rate <= 0 or power_mw <= 0 or min(bandwidths) <= 0:
        raise ValueError("rate, bandwidths and power must be positive")
    dw = sum(bandwidths) / len(bandwidths)
    return 2 * math.pi * rate / dw * 1e9 / power_mw


@dataclass(frozen=True)
class CorrelationTime:
    transit: float  # s, L * max(S)
    bandwidth: float  # s, 2 pi / mean FWHM

    @property
    def headline(self) -> float:
        return self.transit


def correlation_time(device: CrystalDevice) -> CorrelationTime:
    s_hv, s_vh = gv_slopes(device)
    bw = bandwidth_fwhm(device)
    return CorrelationTime(device.length * max(s_hv, s_vh), 2 * math.pi / (0.5 * (bw[0] + bw[1])))


@dataclass(frozen=True)
class SourceFigures:
    bandwidth_hv: float  # rad/s
    bandwidth_vh: float
    reduction_hv: float
    reduction_vh: float
    concurrence: float
    rate: float  # pairs/s
    brightness: float  # pairs/(s GHz mW)
    correlation: CorrelationTime
    amplitude_hv: float
    amplitude_vh: float
    delta_n: float
    s_hv: float  # s/m
    s_vh: float


def source_figures(device: CrystalDevice, pump: PumpConfig) -> SourceFigures:
    bw = bandwidth_fwhm(device)
    red = forward_backward_reduction(device)
    rate = pair_rate(device, pump)
    amps = amplitude_magnitudes(device, pump)
    s_hv, s_vh = gv_slopes(device)
    return SourceFigures(
        bandwidth_hv=bw[0],
        bandwidth_vh=bw[1],
        reduction_hv=red[0],
        reduction_vh=red[1],
        concurrence=concurrence_closed_form(device),
        rate=rate,
        brightness=spectral_brightness(rate, bw, pump.power * 1e3),
        correlation=correlation_time(device),
        amplitude_hv=amps[0],
        amplitude_vh=amps[1],
        delta_n=indices(device).delta_n,
        s_hv=s_hv,
        s_vh=s_vh,
    )

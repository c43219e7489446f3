"""
Temperature-dependent dispersion of a biaxial crystal.

Refractive indices are evaluated per principal axis from a material file.
The room-temperature part is a Sellmeier expression in the vacuum
wavelength (um); the thermal part is a power series in (T - T_ref) whose
coefficients are polynomials in 1/lambda:

    n(lambda, T) = n0(lambda) + sum_k P_k(1/lambda) (T - T_ref)^k

Units at this boundary: wavelength in um, temperature in degC, wave numbers
in rad/um, group velocities in m/s.

Material file layout (TOML)::

    provenance = "..."
    reference_temp_c = 25.0        # optional, default 25

    [y]
    form = "shifted_poles"
    coefficients = [A, B1, C1, ..., F]
    thermal_coefficients = [[a10, a11, ...], [a20, a21, ...]]
    lambda_range_um = [lo, hi]
    temp_range_c = [lo, hi]

Supported forms (lambda in um):

    sellmeier      n^2 = A + sum_j B_j lambda^2 / (lambda^2 - C_j) - F lambda^2
    shifted_poles  n^2 = A + sum_j B_j / (lambda^2 - C_j) - F lambda^2
"""

from __future__ import annotations

import enum
import functools
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Callable, Mapping, Optional, Union

import numpy as np
from scipy import constants

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class PhysicalConstants:
    c: float = constants.c
    eps0: float = constants.epsilon_0
    hbar: float = constants.hbar


CONSTANTS = PhysicalConstants()


class DispersionError(ValueError):
    """Malformed or non-physical material data."""


class OutOfRangeError(DispersionError):
    """Evaluation outside the declared validity range."""


@functools.total_ordering
class CrystalAxis(enum.Enum):
    X = "x"
    Y = "y"
    Z = "z"

    def __lt__(self, other):
        if not isinstance(other, CrystalAxis):
            return NotImplemented
        return self.value < other.value

    @classmethod
    def parse(cls, value) -> "CrystalAxis":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown crystal axis {value!r}") from None


PROPAGATION_AXIS = CrystalAxis.X


@dataclass(frozen=True)
class PolarizationMapping:
    """Which principal axis carries H and which carries V."""

    h_axis: CrystalAxis = CrystalAxis.Z
    v_axis: CrystalAxis = CrystalAxis.Y

    def __post_init__(self):
        object.__setattr__(self, "h_axis", CrystalAxis.parse(self.h_axis))
        object.__setattr__(self, "v_axis", CrystalAxis.parse(self.v_axis))
        if self.h_axis == self.v_axis:
            raise ValueError("H and V must map to different axes")
        if PROPAGATION_AXIS in (self.h_axis, self.v_axis):
            raise ValueError("polarization cannot lie along the propagation axis (x)")

    def axis(self, pol: str) -> CrystalAxis:
        if pol == "H":
            return self.h_axis
        if pol == "V":
            return self.v_axis
        raise ValueError(f"polarization must be 'H' or 'V', got {pol!r}")


# -- Sellmeier forms ------------------------------------------------------
# Each form maps (coefficients, lambda) -> n^2 and, optionally, d(n^2)/dlambda.


def _split_poles(coeffs):
    a, f = coeffs[0], coeffs[-1]
    poles = list(zip(coeffs[1:-1:2], coeffs[2:-1:2]))
    return a, poles, f


def _sellmeier(coeffs, lam):
    a, poles, f = _split_poles(coeffs)
    l2 = lam * lam
    n2 = a - f * l2
    for b, c in poles:
        n2 = n2 + b * l2 / (l2 - c)
    return n2


def _sellmeier_deriv(coeffs, lam):
    a, poles, f = _split_poles(coeffs)
    l2 = lam * lam
    out = -2.0 * f * lam
    for b, c in poles:
        out = out - 2.0 * b * c * lam / (l2 - c) ** 2
    return out


def _shifted_poles(coeffs, lam):
    a, poles, f = _split_poles(coeffs)
    l2 = lam * lam
    n2 = a - f * l2
    for b, c in poles:
        n2 = n2 + b / (l2 - c)
    return n2


def _shifted_poles_deriv(coeffs, lam):
    a, poles, f = _split_poles(coeffs)
    l2 = lam * lam
    out = -2.0 * f * lam
    for b, c in poles:
        out = out - 2.0 * b * lam / (l2 - c) ** 2
    return out


@dataclass(frozen=True)
class SellmeierForm:
    name: str
    n_squared: Callable
    d_n_squared: Optional[Callable] = None

    def check_coefficients(self, coeffs):
        if len(coeffs) < 2 or len(coeffs) % 2:
            raise DispersionError(
                f"form {self.name!r} needs [A, B1, C1, ..., F] (even length >= 2), "
                f"got {len(coeffs)} coefficients"
            )


FORMS: dict[str, SellmeierForm] = {
    "sellmeier": SellmeierForm("sellmeier", _sellmeier, _sellmeier_deriv),
    "shifted_poles": SellmeierForm("shifted_poles", _shifted_poles, _shifted_poles_deriv),
}


def register_form(form: SellmeierForm) -> None:
    """Add a Sellmeier variant. Forms without `d_n_squared` use numeric derivatives."""
    FORMS[form.name] = form


@dataclass(frozen=True)
class AxisDispersion:
    form: str
    coefficients: tuple
    thermal_coefficients: tuple
    lambda_range: tuple
    temp_range: tuple
    reference_temp: float = 25.0

    def check_range(self, lam, temp):
        lo, hi = self.lambda_range
        lam_arr = np.asarray(lam, dtype=float)
        if lam_arr.size == 0 or np.any(~np.isfinite(lam_arr)) or np.any(lam_arr < lo) or np.any(lam_arr > hi):
            raise OutOfRangeError(
                f"wavelength {_fmt(lam_arr)} um outside validity range [{lo}, {hi}] um"
            )
        tlo, thi = self.temp_range
        t_arr = np.asarray(temp, dtype=float)
        if np.any(~np.isfinite(t_arr)) or np.any(t_arr < tlo) or np.any(t_arr > thi):
            raise OutOfRangeError(
                f"temperature {_fmt(t_arr)} degC outside validity range [{tlo}, {thi}] degC"
            )

    def _base(self, lam):
        return np.sqrt(FORMS[self.form].n_squared(self.coefficients, lam))

    def _thermal(self, lam, temp):
        dt = temp - self.reference_temp
        inv = 1.0 / lam
        total = 0.0
        for k, poly in enumerate(self.thermal_coefficients, start=1):
            total = total + _poly(poly, inv) * dt**k
        return total

    def _thermal_dlambda(self, lam, temp):
        dt = temp - self.reference_temp
        total = 0.0
        for k, poly in enumerate(self.thermal_coefficients, start=1):
            # d/dlambda sum_m a_m lambda^-m = -sum_m m a_m lambda^-(m+1)
            total = total + sum(-m * a * lam ** (-m - 1) for m, a in enumerate(poly) if m) * dt**k
        return total

    def index(self, lam, temp):
        return self._base(lam) + self._thermal(lam, temp)

    def dn_dlambda(self, lam, temp):
        form = FORMS[self.form]
        if form.d_n_squared is None:
            return _numeric_derivative(lambda x: self.index(x, temp), lam, self.lambda_range)
        base = form.d_n_squared(self.coefficients, lam) / (2.0 * self._base(lam))
        return base + self._thermal_dlambda(lam, temp)


def _poly(coeffs, x):
    total = 0.0
    for a in reversed(coeffs):
        total = total * x + a
    return total


def _numeric_derivative(f, lam, lambda_range):
    """Central differences with one Richardson step; the stencil must stay in range."""
    lam = np.asarray(lam, dtype=float)
    h = 1e-3 * lam
    lo, hi = lambda_range
    if np.any(lam - h < lo) or np.any(lam + h > hi):
        raise OutOfRangeError("derivative stencil would leave the wavelength validity range")
    d1 = (f(lam + h) - f(lam - h)) / (2 * h)
    d2 = (f(lam + h / 2) - f(lam - h / 2)) / h
    return (4 * d2 - d1) / 3


def _fmt(arr):
    arr = np.atleast_1d(arr)
    if arr.size == 1:
        return f"{float(arr[0]):g}"
    return f"[{float(arr.min()):g}..{float(arr.max()):g}]"


@dataclass(frozen=True)
class DispersionModel:
    axes: Mapping[CrystalAxis, AxisDispersion]
    provenance: str = ""
    reference_temp: float = 25.0
    source: dict = field(default_factory=dict, compare=False, repr=False)

    def axis(self, axis: CrystalAxis) -> AxisDispersion:
        axis = CrystalAxis.parse(axis)
        try:
            return self.axes[axis]
        except KeyError:
            raise DispersionError(f"material has no data for axis {axis.value}") from None

    @property
    def lambda_range(self):
        """Wavelength interval valid on every axis."""
        return (max(a.lambda_range[0] for a in self.axes.values()),
                min(a.lambda_range[1] for a in self.axes.values()))

    @property
    def temp_range(self):
        return (max(a.temp_range[0] for a in self.axes.values()),
                min(a.temp_range[1] for a in self.axes.values()))


REQUIRED_AXES = (CrystalAxis.Y, CrystalAxis.Z)
_AXIS_KEYS = ("form", "coefficients", "thermal_coefficients", "lambda_range_um", "temp_range_c")


def load_dispersion(material_file: Union[bytes, str]) -> DispersionModel:
    """Parse and validate a material file (TOML text or bytes)."""
    if isinstance(material_file, bytes):
        try:
            material_file = material_file.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DispersionError(f"material file is not UTF-8: {exc}") from None
    try:
        doc = tomllib.loads(material_file)
    except tomllib.TOMLDecodeError as exc:
        raise DispersionError(f"cannot parse material file: {exc}") from None

    ref_temp = float(doc.get("reference_temp_c", 25.0))
    axes = {}
    for key in ("x", "y", "z"):
        if key in doc:
            axes[CrystalAxis(key)] = _parse_axis(key, doc[key], ref_temp)
    for axis in REQUIRED_AXES:
        if axis not in axes:
            raise DispersionError(f"missing axis: material file has no [{axis.value}] table")

    model = DispersionModel(
        axes=MappingProxyType(dict(sorted(axes.items()))),
        provenance=str(doc.get("provenance", "")),
        reference_temp=ref_temp,
        source=doc,
    )
    _check_physical(model)
    return model


def load_dispersion_file(path: Union[str, Path]) -> DispersionModel:
    return load_dispersion(Path(path).read_bytes())


def builtin_material(name: str = "ktp") -> DispersionModel:
    """Load a material file shipped with the package (``data/<name>.toml``)."""
    try:
        data = resources.files("dualpole").joinpath(f"data/{name}.toml").read_bytes()
    except FileNotFoundError:
        raise DispersionError(f"no built-in material named {name!r}") from None
    return load_dispersion(data)


def _parse_axis(key, table, ref_temp) -> AxisDispersion:
    if not isinstance(table, dict):
        raise DispersionError(f"[{key}] must be a table")
    missing = [k for k in _AXIS_KEYS if k not in table]
    if missing:
        raise DispersionError(f"[{key}] is missing keys: {', '.join(missing)}")
    form = table["form"]
    if form not in FORMS:
        raise DispersionError(f"[{key}] unknown form {form!r}; known: {', '.join(sorted(FORMS))}")
    try:
        coeffs = tuple(float(v) for v in table["coefficients"])
        thermal = tuple(tuple(float(v) for v in row) for row in table["thermal_coefficients"])
        lam_range = tuple(float(v) for v in table["lambda_range_um"])
        temp_range = tuple(float(v) for v in table["temp_range_c"])
    except (TypeError, ValueError) as exc:
        raise DispersionError(f"[{key}] non-numeric coefficient: {exc}") from None
    FORMS[form].check_coefficients(coeffs)
    if len(lam_range) != 2 or not 0 < lam_range[0] < lam_range[1]:
        raise DispersionError(f"[{key}] lambda_range_um must be an increasing positive pair")
    if len(temp_range) != 2 or not temp_range[0] < temp_range[1]:
        raise DispersionError(f"[{key}] temp_range_c must be an increasing pair")
    return AxisDispersion(form, coeffs, thermal, lam_range, temp_range, ref_temp)


def _check_physical(model: DispersionModel, n_lambda: int = 257, n_temp: int = 9):
    for axis, disp in model.axes.items():
        lam = np.linspace(*disp.lambda_range, n_lambda)
        for temp in np.linspace(*disp.temp_range, n_temp):
            with np.errstate(invalid="ignore", divide="ignore"):
                n = disp.index(lam, temp)
            if not np.all(np.isfinite(n)) or np.any(n <= 1.0):
                raise DispersionError(
                    f"non-physical index on axis {axis.value}: n <= 1 or undefined inside the declared range"
                )


# -- public evaluation functions -------------------------------------------


def refractive_index(model: DispersionModel, axis, lambda_vac: ArrayLike, T: ArrayLike) -> ArrayLike:
    disp = model.axis(axis)
    disp.check_range(lambda_vac, T)
    return disp.index(lambda_vac, T)


def wavenumber(model: DispersionModel, axis, lambda_vac: ArrayLike, T: ArrayLike) -> ArrayLike:
    """k = 2 pi n / lambda in rad/um."""
    return 2.0 * math.pi * refractive_index(model, axis, lambda_vac, T) / lambda_vac


def group_index(model: DispersionModel, axis, lambda_vac: ArrayLike, T: ArrayLike) -> ArrayLike:
    """n_g = n - lambda dn/dlambda."""
    disp = model.axis(axis)
    disp.check_range(lambda_vac, T)
    return disp.index(lambda_vac, T) - lambda_vac * disp.dn_dlambda(lambda_vac, T)


def group_velocity(model: DispersionModel, axis, lambda_vac: ArrayLike, T: ArrayLike) -> ArrayLike:
    """Group velocity c / n_g in m/s."""
    return CONSTANTS.c / group_index(model, axis, lambda_vac, T)

"""
Dual-periodic poling: reciprocal vectors, Fourier coefficients, domain
patterns and their verification.

The sign of the nonlinearity is g(x) = g1(x) g2(x), with each g_i a square
wave of period Lambda_i that is +1 on [0, D_i Lambda_i) and -1 on the rest of
the period. Expanding g(x) = sum G_mn exp(-i K_mn x) gives

    K_mn = 2 pi m / Lambda_1 + 2 pi n / Lambda_2
    G_mn = 4 / (m n pi^2) sin(m D_1 pi) sin(n D_2 pi) * exp(i pi (m D_1 + n D_2))

where the phase factor comes from the square-wave origin. `fourier_coefficient`
returns the real amplitude (without the phase); `coefficient_phase` returns
the phase so numeric checks can compare complex values.

Lengths are in um and reciprocals in rad/um.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, TextIO, Union

import numpy as np


class PairingRuleWarning(UserWarning):
    """The two processes get unequal effective nonlinearities."""


class PolingJitterWarning(UserWarning):
    """Jittered domain walls crossed in a noticeable fraction of trials."""


@dataclass(frozen=True)
class ReciprocalOrder:
    m: int
    n: int

    def __post_init__(self):
        if int(self.m) != self.m or int(self.n) != self.n:
            raise ValueError("reciprocal orders must be integers")
        if self.m == 0 or self.n == 0:
            raise ValueError(f"reciprocal orders must be nonzero, got ({self.m}, {self.n})")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "n", int(self.n))

    def __neg__(self):
        return ReciprocalOrder(-self.m, -self.n)

    def as_tuple(self):
        return (self.m, self.n)


def _as_order(order) -> ReciprocalOrder:
    return order if isinstance(order, ReciprocalOrder) else ReciprocalOrder(*order)


@dataclass(frozen=True)
class DualGrating:
    """Two modulation periods (um) and their duty cycles.

    Duty cycles are kept as exact fractions. When `l` is set the grating obeys
    the small-domain constraint Lambda_2 / Lambda_1 = l / 2, D_1 = 1/2,
    D_2 = floor(l/2) / l; pattern synthesis then uses Lambda_2 = l/2 * Lambda_1
    exactly.
    """

    lambda1: float
    lambda2: float
    duty1: Fraction = Fraction(1, 2)
    duty2: Fraction = Fraction(1, 2)
    l: Optional[int] = None

    ratio_tol = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "duty1", Fraction(self.duty1))
        object.__setattr__(self, "duty2", Fraction(self.duty2))
        if not 0 < self.lambda1 < self.lambda2:
            raise ValueError(f"need 0 < lambda1 < lambda2, got {self.lambda1}, {self.lambda2}")
        for name in ("duty1", "duty2"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie strictly between 0 and 1")
        if self.l is not None:
            d1, d2 = constrained_duty(self.l)
            if (self.duty1, self.duty2) != (d1, d2):
                raise ValueError(f"l={self.l} requires duty cycles ({d1}, {d2})")
            ratio = self.lambda2 / self.lambda1
            if abs(ratio - self.l / 2) > self.ratio_tol * self.l:
                raise ValueError(f"l={self.l} requires lambda2/lambda1 = {self.l / 2}, got {ratio}")

    @classmethod
    def constrained(cls, lambda1: float, l: int) -> "DualGrating":
        d1, d2 = constrained_duty(l)
        return cls(lambda1, lambda1 * l / 2, d1, d2, l)

    @property
    def exact_periods(self) -> tuple:
        lam1 = Fraction(self.lambda1)
        lam2 = lam1 * Fraction(self.l, 2) if self.l is not None else Fraction(self.lambda2)
        return lam1, lam2

    def common_period(self) -> Optional[float]:
        """Shortest length over which g repeats, if the periods are commensurate."""
        lam1, lam2 = self.exact_periods
        if self.l is None:
            return None
        # l*Lambda_1/2 = Lambda_2, so the product repeats every lcm(1, l/2) Lambda_1
        ratio = lam2 / lam1
        return float(lam1 * ratio.numerator)


def constrained_duty(l: int) -> tuple:
    """Duty cycles (1/2, floor(l/2)/l) that keep every domain >= Lambda_1 / 2."""
    if int(l) != l or l <= 2:
        raise ValueError(f"structural integer l must be an integer > 2, got {l}")
    l = int(l)
    return Fraction(1, 2), Fraction(l // 2, l)


def reciprocal(order, g: DualGrating) -> float:
    order = _as_order(order)
    return 2 * math.pi * order.m / g.lambda1 + 2 * math.pi * order.n / g.lambda2


def _sin_pi(x: Fraction) -> float:
    """sin(pi x), exact at integer and half-integer x."""
    x = x % 2
    if x > 1:
        return -_sin_pi(2 - x)
    if x.denominator == 1:
        return 0.0
    if x == Fraction(1, 2):
        return 1.0
    return math.sin(math.pi * float(min(x, 1 - x)))


def fourier_coefficient(order, g: DualGrating) -> float:
    order = _as_order(order)
    m, n = order.m, order.n
    return 4.0 / (m * n * math.pi**2) * _sin_pi(m * g.duty1) * _sin_pi(n * g.duty2)


def coefficient_phase(order, g: DualGrating) -> complex:
    """Phase of the (m, n) component for square waves starting at x = 0."""
    order = _as_order(order)
    x = (order.m * g.duty1 + order.n * g.duty2) % 2
    return complex(math.cos(math.pi * float(x)), math.sin(math.pi * float(x)))


def _square_wave_coefficients(orders: np.ndarray, duty: Fraction) -> np.ndarray:
    """Complex coefficients c_m = (1/P) int_0^P g exp(+2 pi i m x / P) dx of a [0, D P)-positive square wave."""
    d = float(duty)
    orders = np.asarray(orders)
    safe = np.where(orders == 0, 1, orders)
    c = 2 * np.sin(np.pi * safe * d) / (np.pi * safe) * np.exp(1j * np.pi * safe * d)
    return np.where(orders == 0, 2 * d - 1, c)


def aliased_coefficient(order, g: DualGrating, terms: int = 20_000) -> complex:
    """Fourier coefficient of g1 g2 at K_mn, summing every (m', n') that lands on the same K.

    With Lambda_2 = (l/2) Lambda_1 the product repeats every l Lambda_1 (odd l)
    and (m - 2j, n + l j) share K_mn; for even l the step is (m - j, n + l j / 2).
    The series decays as 1/j^2; `terms` pairs are summed on each side.
    """
    if g.l is None:
        raise ValueError("aliasing is defined here only for constrained gratings")
    order = _as_order(order)
    j = np.arange(-terms, terms + 1)
    if g.l % 2:
        dm, dn = 2, g.l
    else:
        dm, dn = 1, g.l // 2
    m = order.m - dm * j
    n = order.n + dn * j
    return complex(np.sum(_square_wave_coefficients(m, g.duty1) * _square_wave_coefficients(n, g.duty2)))


@dataclass(frozen=True)
class NonlinearCoefficient:
    """Bulk and per-process effective nonlinear coefficients (pm/V)."""

    d: float
    d_eff_hv: float
    d_eff_vh: float


def effective_nonlinearity(d: float, order1, order2, g: DualGrating) -> NonlinearCoefficient:
    """d_HV = d G(order1), d_VH = d G(order2).

    Warns with `PairingRuleWarning` when m1 n1 != +-m2 n2 or the magnitudes
    differ; the source then loses entanglement through amplitude imbalance.
    """
    o1, o2 = _as_order(order1), _as_order(order2)
    result = NonlinearCoefficient(d, d * fourier_coefficient(o1, g), d * fourier_coefficient(o2, g))
    a, b = abs(result.d_eff_hv), abs(result.d_eff_vh)
    if abs(o1.m * o1.n) != abs(o2.m * o2.n):
        warnings.warn(
            f"pairing rule violated: m1*n1={o1.m * o1.n}, m2*n2={o2.m * o2.n}; "
            f"|d_HV|={a:.6g}, |d_VH|={b:.6g} pm/V",
            PairingRuleWarning,
            stacklevel=2,
        )
    elif abs(a - b) > 1e-12 * max(a, b):
        warnings.warn(
            f"unequal effective nonlinearities |d_HV|={a:.6g}, |d_VH|={b:.6g} pm/V "
            f"for orders {o1.as_tuple()}, {o2.as_tuple()}",
            PairingRuleWarning,
            stacklevel=2,
        )
    return result


# -- domain patterns --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DomainPattern:
    """Sign-alternating domains on [0, length].

    `boundaries` are the interior domain walls (um), strictly increasing and
    strictly inside (0, length). The first domain has sign `initial_sign`.
    """

    boundaries: np.ndarray
    initial_sign: int
    length: float

    def __post_init__(self):
        b = np.array(self.boundaries, dtype=float)
        b.setflags(write=False)
        object.__setattr__(self, "boundaries", b)
        if self.initial_sign not in (1, -1):
            raise ValueError("initial_sign must be +1 or -1")
        if self.length <= 0:
            raise ValueError("pattern length must be positive")
        if b.size:
            if np.any(np.diff(b) <= 0):
                raise ValueError("boundaries must be strictly increasing")
            if b[0] <= 0 or b[-1] >= self.length:
                raise ValueError("boundaries must lie strictly inside (0, length)")

    @property
    def edges(self) -> np.ndarray:
        return np.concatenate(([0.0], self.boundaries, [self.length]))

    @property
    def signs(self) -> np.ndarray:
        k = np.arange(self.boundaries.size + 1)
        return self.initial_sign * np.where(k % 2 == 0, 1, -1)

    def sign_at(self, x):
        """Sign of the domain containing x (walls belong to the domain they start)."""
        idx = np.searchsorted(self.boundaries, x, side="right")
        return self.initial_sign * np.where(idx % 2 == 0, 1, -1)


def _square_wave_transitions(period: Fraction, duty: Fraction, length: Fraction) -> list:
    """Exact positions in (0, length) where a [0, D*period)-positive square wave flips."""
    out = []
    k = 0
    while True:
        start = k * period
        if start >= length:
            break
        for x in (start, start + duty * period):
            if 0 < x < length:
                out.append(x)
        k += 1
    return out


def exact_walls(g: DualGrating, total_length) -> list:
    """Domain walls of g1(x) g2(x) in (0, total_length) as exact fractions.

    Transitions of both square waves are merged; walls shared by g1 and g2 cancel.
    """
    lam1, lam2 = g.exact_periods
    length = Fraction(total_length)
    counts: dict = {}
    for x in _square_wave_transitions(lam1, g.duty1, length) + _square_wave_transitions(lam2, g.duty2, length):
        counts[x] = counts.get(x, 0) + 1
    return sorted(x for x, c in counts.items() if c % 2)


def synthesize_pattern(g: DualGrating, total_length: float) -> DomainPattern:
    """Domain pattern of g1(x) g2(x) on [0, total_length], starting with a + domain."""
    if total_length < g.lambda2:
        raise ValueError(f"pattern length {total_length} um is shorter than lambda2 = {g.lambda2} um")
    walls = exact_walls(g, total_length)
    return DomainPattern(np.array([float(x) for x in walls]), 1, float(total_length))


def pattern_fourier(p: DomainPattern, G):
    """(1/L) int_0^L g(x) exp(+i G x) dx, integrated exactly domain by domain."""
    if p.length <= 0:
        raise ValueError("empty pattern")
    edges = p.edges
    signs = p.signs
    G_arr = np.atleast_1d(np.asarray(G, dtype=float))
    out = np.empty(G_arr.shape, dtype=complex)
    for i, k in enumerate(G_arr):
        if k == 0.0:
            out[i] = np.sum(signs * np.diff(edges)) / p.length
        else:
            e = np.exp(1j * k * edges)
            out[i] = np.sum(signs * (e[1:] - e[:-1])) / (1j * k * p.length)
    return out[0] if np.ndim(G) == 0 else out


def min_domain(p: DomainPattern) -> float:
    """Smallest distance between consecutive domain walls (um).

    End domains are cut by the pattern edges and are not counted, unless the
    pattern has fewer than two walls.
    """
    if p.boundaries.size >= 2:
        return float(np.min(np.diff(p.boundaries)))
    return float(np.min(np.diff(p.edges)))


# -- poling jitter -----------------------------------------------------------


@dataclass(frozen=True)
class JitterStats:
    sigma: float
    trials: int
    mean_abs: float
    std_abs: float
    crossing_rate: float


def _jittered(p: DomainPattern, sigma: float, rng: np.random.Generator):
    walls = p.boundaries + rng.normal(0.0, sigma, p.boundaries.size)
    crossed = bool(np.any(np.diff(walls) <= 0))
    walls = np.sort(walls)
    sign = p.initial_sign
    # a wall pushed below x=0 flips the first domain; walls past the end vanish
    below = int(np.count_nonzero(walls <= 0))
    if below % 2:
        sign = -sign
    walls = walls[(walls > 0) & (walls < p.length)]
    # coincident walls annihilate in pairs
    if walls.size > 1:
        keep = np.ones(walls.size, dtype=bool)
        gaps = np.diff(walls) <= 1e-12
        i = 0
        while i < gaps.size:
            if gaps[i] and keep[i]:
                keep[i] = keep[i + 1] = False
                i += 2
            else:
                i += 1
        walls = walls[keep]
    return DomainPattern(walls, sign, p.length), crossed


def poling_error_mc(p: DomainPattern, sigma: float, trials: int, G: float, seed: int) -> JitterStats:
    """Monte Carlo of |pattern_fourier| under independent Gaussian wall displacement.

    Trial i draws from SeedSequence(seed, spawn_key=(i,)), so results do not
    depend on evaluation order.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if trials < 1:
        raise ValueError("need at least one trial")
    values = np.empty(trials)
    crossings = 0
    for i in range(trials):
        if sigma == 0:
            q = p
        else:
            rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
            q, crossed = _jittered(p, sigma, rng)
            crossings += crossed
        values[i] = abs(pattern_fourier(q, G))
    rate = crossings / trials
    if rate > 0.01:
        warnings.warn(
            f"domain walls crossed in {rate:.1%} of trials at sigma={sigma} um",
            PolingJitterWarning,
            stacklevel=2,
        )
    return JitterStats(sigma, trials, float(values.mean()), float(values.std()), rate)


# -- pattern files --------------------------------------------------------


def _header(g: Optional[DualGrating], length: float) -> list:
    lines = [f"# length_um = {length:.6f}"]
    if g is not None:
        lines = [
            f"# lambda1_um = {g.lambda1!r}",
            f"# lambda2_um = {g.lambda2!r}",
            f"# duty1 = {g.duty1}",
            f"# duty2 = {g.duty2}",
            f"# l = {g.l if g.l is not None else 'none'}",
        ] + lines
    return lines


def write_pattern(
    p: DomainPattern,
    out: Union[TextIO, None] = None,
    grating: Optional[DualGrating] = None,
    fmt: str = "txt",
    extra_header: tuple = (),
) -> str:
    """Serialize walls as (position um, sign of the domain ending there).

    The last row is the pattern end. `fmt` is "txt" (whitespace columns) or
    "csv". Returns the text and also writes it to `out` when given.
    """
    if fmt not in ("txt", "csv"):
        raise ValueError(f"unknown pattern format {fmt!r}")
    lines = [f"# {h}" for h in extra_header] + _header(grating, p.length)
    sep = "," if fmt == "csv" else " "
    if fmt == "csv":
        lines.append("boundary_um,ending_sign")
    positions = np.concatenate((p.boundaries, [p.length]))
    for x, s in zip(positions, p.signs):
        lines.append(f"{x:.6f}{sep}{int(s):+d}")
    text = "\n".join(lines) + "\n"
    if out is not None:
        out.write(text)
    return text


def read_pattern(source: Union[str, TextIO]) -> DomainPattern:
    """Inverse of `write_pattern` (positions are rounded to 1e-6 um by the format)."""
    stream = io.StringIO(source) if isinstance(source, str) else source
    rows = []
    for line in stream:
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("boundary_um"):
            continue
        pos, sign = line.replace(",", " ").split()
        rows.append((float(pos), int(sign)))
    if not rows:
        raise ValueError("pattern file has no rows")
    positions = np.array([r[0] for r in rows])
    return DomainPattern(positions[:-1], rows[0][1], float(positions[-1]))

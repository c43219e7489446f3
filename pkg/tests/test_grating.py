import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualpole.grating import (
    DomainPattern,
    DualGrating,
    PairingRuleWarning,
    PolingJitterWarning,
    ReciprocalOrder,
    aliased_coefficient,
    coefficient_phase,
    constrained_duty,
    effective_nonlinearity,
    exact_walls,
    fourier_coefficient,
    min_domain,
    pattern_fourier,
    poling_error_mc,
    read_pattern,
    reciprocal,
    synthesize_pattern,
    write_pattern,
)

DEGENERATE = DualGrating.constrained(1.056, 31)
NONDEGENERATE = DualGrating.constrained(1.220, 21)
orders = st.tuples(st.integers(-9, 9).filter(bool), st.integers(-9, 9).filter(bool))


def test_reciprocal_examples():
    g = DualGrating(1.056, 16.36, Fraction(1, 2), Fraction(15, 31))
    assert reciprocal((3, -1), g) == pytest.approx(17.47, abs=5e-3)
    assert reciprocal((3, 1), g) == pytest.approx(18.23, abs=5e-3)
    assert reciprocal((-3, 1), g) == -reciprocal((3, -1), g)


@given(orders)
def test_reciprocal_odd(o):
    assert reciprocal(ReciprocalOrder(*o), DEGENERATE) == -reciprocal(-ReciprocalOrder(*o), DEGENERATE)


def test_order_validation():
    with pytest.raises(ValueError):
        ReciprocalOrder(0, 1)
    with pytest.raises(ValueError):
        ReciprocalOrder(3, 0)


def test_fourier_coefficient_examples():
    direct = 4 / (3 * math.pi**2) * math.sin(3 * math.pi / 2) * math.sin(15 * math.pi / 31)
    assert fourier_coefficient((3, 1), DEGENERATE) == pytest.approx(direct, rel=1e-12)
    # direct evaluation gives -0.134922
    assert fourier_coefficient((3, 1), DEGENERATE) == pytest.approx(-0.134922, abs=1e-6)
    assert fourier_coefficient((2, 1), DEGENERATE) == 0.0
    assert fourier_coefficient((2, 5), NONDEGENERATE) == 0.0


@given(orders)
def test_fourier_symmetry_and_bound(o):
    for g in (DEGENERATE, NONDEGENERATE):
        c = fourier_coefficient(o, g)
        assert c == fourier_coefficient((-o[0], -o[1]), g)
        assert abs(c) <= 4 / (abs(o[0] * o[1]) * math.pi**2) + 1e-15


def test_constrained_duty():
    assert constrained_duty(31) == (Fraction(1, 2), Fraction(15, 31))
    assert constrained_duty(21) == (Fraction(1, 2), Fraction(10, 21))
    assert constrained_duty(4) == (Fraction(1, 2), Fraction(1, 2))
    for bad in (2, 1, 0, -3):
        with pytest.raises(ValueError):
            constrained_duty(bad)


def test_grating_invariants():
    with pytest.raises(ValueError):
        DualGrating(2.0, 1.0)
    with pytest.raises(ValueError):
        DualGrating(1.0, 2.0, Fraction(0), Fraction(1, 2))
    with pytest.raises(ValueError):
        DualGrating(1.0, 15.0, Fraction(1, 2), Fraction(15, 31), 31)  # ratio must be l/2
    with pytest.raises(ValueError):
        DualGrating(1.0, 15.5, Fraction(1, 2), Fraction(1, 2), 31)  # duty must be 15/31


def test_effective_nonlinearity_degenerate():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        nl = effective_nonlinearity(3.9, (3, 1), (3, -1), DEGENERATE)
    assert abs(nl.d_eff_hv) == pytest.approx(0.526, abs=1e-3)
    assert abs(nl.d_eff_hv) == abs(nl.d_eff_vh)


def test_effective_nonlinearity_same_order():
    nl = effective_nonlinearity(3.9, (3, 1), (3, 1), DEGENERATE)
    assert nl.d_eff_hv == nl.d_eff_vh


def test_pairing_violation_warns():
    with pytest.warns(PairingRuleWarning):
        nl = effective_nonlinearity(3.9, (3, 1), (1, 3), DEGENERATE)
    assert abs(nl.d_eff_hv) != abs(nl.d_eff_vh)


@settings(max_examples=100)
@given(st.integers(3, 80), st.integers(1, 7).map(lambda k: 2 * k - 1), st.integers(-7, 7).filter(bool), st.booleans())
def test_pairing_rule_gives_equal_magnitudes(l, m, n, flip):
    g = DualGrating.constrained(1.0, l)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        nl = effective_nonlinearity(1.0, (m, n), (m, -n) if flip else (-m, n), g)
    assert abs(nl.d_eff_hv) == abs(nl.d_eff_vh)


@pytest.mark.parametrize("g", [DEGENERATE, NONDEGENERATE], ids=["l31", "l21"])
def test_constrained_pattern_domain_lengths(g):
    p = synthesize_pattern(g, 10 * g.common_period())
    widths = np.diff(p.boundaries)
    assert np.allclose(np.unique(np.round(widths, 9)), [g.lambda1 / 2, g.lambda1])
    assert min_domain(p) == pytest.approx(g.lambda1 / 2, rel=1e-12)


def test_min_domain_examples():
    assert min_domain(synthesize_pattern(DEGENERATE, 1000.0)) == pytest.approx(0.528, abs=1e-9)
    assert min_domain(synthesize_pattern(NONDEGENERATE, 1000.0)) == pytest.approx(0.610, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(5, 60), st.fractions(Fraction(1, 2), Fraction(3), max_denominator=1000))
def test_constraint_gives_exact_half_period_min_domain(l, lam1):
    g = DualGrating.constrained(float(lam1), l)
    walls = exact_walls(g, 3 * g.common_period())
    assert min(b - a for a, b in zip(walls, walls[1:])) == g.exact_periods[0] / 2


@pytest.mark.parametrize("l, smallest", [(3, Fraction(3, 2)), (4, Fraction(1))])
def test_smallest_l_cancel_every_half_period_domain(l, smallest):
    # g2 walls coincide with every other g1 wall, so no Lambda_1/2 domain survives
    g = DualGrating.constrained(1.0, l)
    walls = exact_walls(g, 3 * g.common_period())
    assert min(b - a for a, b in zip(walls, walls[1:])) == smallest


def test_single_period_pattern():
    # g2 with one period longer than the pattern: plain alternating domains
    g = DualGrating(1.0, 500.0, Fraction(1, 2), Fraction(99, 100))
    p = synthesize_pattern(g, 500.0)
    assert min_domain(p) == pytest.approx(0.5)
    assert np.allclose(np.diff(p.boundaries[: 100]), 0.5)


def test_unconstrained_pattern_has_short_domains():
    g = DualGrating(1.0, math.sqrt(2) * 10, Fraction(1, 2), Fraction(1, 2))
    assert min_domain(synthesize_pattern(g, 2000.0)) < 0.5


def test_pattern_sign_is_product_of_square_waves():
    g = NONDEGENERATE
    p = synthesize_pattern(g, 3 * g.common_period())
    x = np.random.default_rng(0).uniform(0, p.length, 2000)
    s1 = np.where(np.mod(x, g.lambda1) < float(g.duty1) * g.lambda1, 1, -1)
    s2 = np.where(np.mod(x, g.lambda2) < float(g.duty2) * g.lambda2, 1, -1)
    # keep away from walls where rounding decides
    far = np.min(np.abs(x[:, None] - p.edges[None, :]), axis=1) > 1e-9
    assert np.array_equal(p.sign_at(x[far]), (s1 * s2)[far])


def test_pattern_too_short():
    with pytest.raises(ValueError):
        synthesize_pattern(DEGENERATE, 10.0)


def test_pattern_fourier_zero_frequency():
    p = synthesize_pattern(DEGENERATE, 2 * DEGENERATE.common_period())
    mean_sign = np.sum(p.signs * np.diff(p.edges)) / p.length
    assert pattern_fourier(p, 0.0) == pytest.approx(mean_sign, abs=1e-15)
    x = np.linspace(0, p.length, 400001)[:-1] + p.length / 800000
    assert mean_sign == pytest.approx(np.mean(p.sign_at(x)), abs=1e-4)


def test_pattern_fourier_off_reciprocal():
    g = DEGENERATE
    p = synthesize_pattern(g, 200 * g.lambda2)
    mid = 0.5 * (reciprocal((3, -1), g) + reciprocal((3, 1), g))
    assert abs(pattern_fourier(p, mid)) < 0.02


def test_pattern_fourier_matches_aliased_series():
    # second analytic route: sum every (m', n') that shares K_mn with the requested order
    for g in (DEGENERATE, NONDEGENERATE, DualGrating.constrained(1.0, 20)):
        p = synthesize_pattern(g, 2 * g.common_period())
        for m in range(-5, 6):
            for n in range(-5, 6):
                if m and n:
                    num = pattern_fourier(p, reciprocal((m, n), g))
                    assert abs(num - aliased_coefficient((m, n), g)) < 1e-5


def test_pattern_fourier_matches_single_term_coefficient():
    # Single-term analytic coefficient vs per-domain integration, |m|,|n| <= 5, pattern of 500 Lambda_2.
    # Known to fail: orders (m - 2j, n + l j) alias onto K_mn and the single term misses them.
    worst = 0.0
    for g in (DEGENERATE, NONDEGENERATE):
        p = synthesize_pattern(g, 500 * g.lambda2)
        for m in range(-5, 6):
            for n in range(-5, 6):
                if m and n:
                    num = pattern_fourier(p, reciprocal((m, n), g))
                    ana = fourier_coefficient((m, n), g) * coefficient_phase((m, n), g)
                    worst = max(worst, abs(num - ana))
    assert worst < 1e-3, f"max |numeric - single-term| = {worst:.3e}"


def test_pattern_fourier_working_order_magnitude():
    g = DEGENERATE
    p = synthesize_pattern(g, 500 * g.lambda2)
    got = abs(pattern_fourier(p, reciprocal((3, -1), g)))
    assert got == pytest.approx(abs(fourier_coefficient((3, -1), g)), abs=1e-3)


def test_domain_pattern_validation():
    with pytest.raises(ValueError):
        DomainPattern(np.array([1.0, 0.5]), 1, 2.0)
    with pytest.raises(ValueError):
        DomainPattern(np.array([0.5, 2.5]), 1, 2.0)
    with pytest.raises(ValueError):
        DomainPattern(np.array([0.5]), 0, 2.0)


def test_jitter_zero_sigma():
    g = DEGENERATE
    p = synthesize_pattern(g, 4 * g.common_period())
    G = reciprocal((3, -1), g)
    stats = poling_error_mc(p, 0.0, 10, G, seed=1)
    assert stats.mean_abs == pytest.approx(abs(pattern_fourier(p, G)), rel=1e-14)
    assert stats.std_abs == pytest.approx(0.0, abs=1e-15)


def test_jitter_reproducible_and_monotone():
    g = DEGENERATE
    p = synthesize_pattern(g, 4 * g.common_period())
    G = reciprocal((3, -1), g)
    means = [poling_error_mc(p, s, 1000, G, seed=7).mean_abs for s in (0.0, 0.01, 0.05)]
    assert means[0] >= means[1] >= means[2]
    assert poling_error_mc(p, 0.05, 50, G, seed=7) == poling_error_mc(p, 0.05, 50, G, seed=7)
    assert poling_error_mc(p, 0.05, 50, G, seed=7) != poling_error_mc(p, 0.05, 50, G, seed=8)


def test_jitter_crossing_warning():
    g = DEGENERATE
    p = synthesize_pattern(g, 2 * g.common_period())
    with pytest.warns(PolingJitterWarning):
        poling_error_mc(p, 0.5, 20, reciprocal((3, 1), g), seed=0)


@pytest.mark.parametrize("fmt", ["txt", "csv"])
def test_pattern_file_round_trip(fmt):
    g = DEGENERATE
    p = synthesize_pattern(g, 100.0)
    text = write_pattern(p, grating=g, fmt=fmt)
    assert "# duty2 = 15/31" in text
    assert "# l = 31" in text
    q = read_pattern(text)
    assert q.initial_sign == p.initial_sign
    assert q.length == pytest.approx(p.length)
    assert np.allclose(q.boundaries, p.boundaries, atol=1e-6)
    rows = [r for r in text.splitlines() if r and not r.startswith("#") and not r.startswith("boundary")]
    assert rows[0] == ("0.528000,+1" if fmt == "csv" else "0.528000 +1")

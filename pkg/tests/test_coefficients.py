"""Coefficient catalogue, continuity moduli, and the assumption audits."""

import math

import numpy as np
import pytest

from svie.coefficients import (
    AUDIT_SLACK,
    CoefficientSet,
    audit_linear_growth,
    audit_modulus,
    catalogue_scale,
    coefficient_catalogue,
    deterministic_ode_coefficients,
    domain_sampler,
    example_coefficients,
    linear_modulus,
    linear_test_coefficients,
    log_modulus,
    modulus_catalogue,
    osgood_ladder,
    pair_sampler,
    quadratic_modulus,
    scale_for_log_modulus,
    zero_coefficients,
)
from svie.errors import ConfigurationError
from svie.grid_noise import LevyMeasure

E_XI_SQ = math.exp(2.0)
E_XI_4TH = math.exp(8.0)


# --- catalogue kernels ------------------------------------------------------


def test_example_kernels_at_pinned_points():
    coeffs = example_coefficients(0.5)
    assert coeffs.drift(0.3, 0.1, 2.0) == pytest.approx(1.0)
    assert coeffs.diffusion(0.7, 0.7, 1.0) == pytest.approx(4.0)
    assert coeffs.jump(0.3, 0.1, 1.0, 2.0) == pytest.approx(2.0)
    assert coeffs.initial(0.42) == pytest.approx(1.0)


def test_example_diffusion_depends_on_time_gap_only():
    coeffs = example_coefficients(0.1)
    lag = 0.3
    for base in (0.0, 0.2, 0.5):
        assert coeffs.diffusion(base + lag, base, 2.0) == pytest.approx(8.0 * math.cos(lag) ** 2)


def test_example_compensator_closed_form():
    coeffs = example_coefficients(0.25, rate=2.0)
    assert coeffs.compensator(0.5, 0.1, 3.0) == pytest.approx(0.25 * 3.0 * 2.0 * E_XI_SQ, rel=1e-12)


def test_example_growth_constant_is_the_worst_kernel():
    # drift gives 1/4, diffusion 16, jumps rate * E[xi^4] * c^2
    assert example_coefficients(0.01).growth_constant == pytest.approx(16.0)
    assert example_coefficients(0.1, rate=2.0).growth_constant == pytest.approx(2.0 * E_XI_4TH * 0.01, rel=1e-12)


def test_example_rejects_bad_jump_coefficient():
    with pytest.raises(ConfigurationError):
        example_coefficients(0.0)
    with pytest.raises(ConfigurationError):
        example_coefficients(-1.0)


def test_deterministic_ode_has_no_noise():
    coeffs = deterministic_ode_coefficients()
    assert coeffs.drift(1.0, 0.5, 2.0) == pytest.approx(1.0)
    assert coeffs.diffusion(1.0, 0.5, 2.0) == 0.0
    assert coeffs.jump is None
    assert coeffs.measure.total_mass == 0.0


def test_linear_test_kernels():
    coeffs = linear_test_coefficients(0.2, rate=1.5)
    assert coeffs.drift(0.4, 0.1, 2.0) == pytest.approx(0.5)
    assert coeffs.diffusion(0.4, 0.1, 2.0) == pytest.approx(1.0)
    assert coeffs.jump(0.4, 0.1, 2.0, 3.0) == pytest.approx(0.2 * 3.0 * 2.0)


def test_zero_coefficients_are_identically_zero():
    coeffs = zero_coefficients()
    assert coeffs.drift(0.5, 0.2, 7.0) == 0.0
    assert coeffs.diffusion(0.5, 0.2, 7.0) == 0.0
    assert coeffs.growth_constant == 0.0


def test_catalogue_dispatch_and_unknown_name():
    assert coefficient_catalogue("example", 0.1, 2.0).name == "example"
    assert coefficient_catalogue("zero").name == "zero"
    assert catalogue_scale("linear_test", 0.1, 2.0) == linear_test_coefficients(0.1, 2.0).growth_constant
    with pytest.raises(ConfigurationError):
        coefficient_catalogue("no-such-set")


def test_jump_requires_mark_sampler():
    measure = LevyMeasure(
        total_mass=1.0,
        mark_density=LevyMeasure.lognormal(1.0).mark_density,
        mark_sampler=None,
    )
    with pytest.raises(ConfigurationError):
        CoefficientSet(
            drift=lambda t, s, x: 0.0,
            diffusion=lambda t, s, x: 0.0,
            initial=lambda t: 1.0,
            measure=measure,
            jump=lambda t, s, x, xi: x,
        )


# --- moduli -----------------------------------------------------------------


def test_linear_modulus_is_identity():
    mod = linear_modulus(3.0)
    assert mod.kappa(0.0) == 0.0
    assert float(mod.kappa(0.25)) == 0.25
    assert mod.scale == 3.0
    assert mod.osgood_divergent


def test_log_modulus_values_and_flat_extension():
    mod = log_modulus(1.0)
    cap = math.exp(-1.0)
    assert mod.kappa(0.0) == 0.0
    assert mod.kappa(math.exp(-2.0)) == pytest.approx(2.0 * math.exp(-2.0), rel=1e-12)
    assert mod.kappa(cap) == pytest.approx(cap, rel=1e-12)
    assert mod.kappa(0.5) == pytest.approx(cap, rel=1e-12)
    assert mod.kappa(10.0) == pytest.approx(cap, rel=1e-12)
    grid = np.geomspace(1e-14, 20.0, 200)
    vals = np.asarray(mod.kappa(grid))
    assert np.all(np.diff(vals) >= -1e-15)


def test_modulus_catalogue_names():
    assert modulus_catalogue("linear", 1.0).name == "linear"
    assert modulus_catalogue("log", 1.0).name == "log"
    assert modulus_catalogue("quadratic", 1.0).name == "quadratic"
    with pytest.raises(ConfigurationError):
        modulus_catalogue("cubic", 1.0)


def test_scale_for_log_modulus_dominates_the_linear_bound():
    for linear_scale, d_max in [(16.0, 0.01), (16.0, 400.0), (59.0, 1.0), (2.0, math.exp(-1.0))]:
        scale = scale_for_log_modulus(linear_scale, d_max)
        mod = log_modulus(1.0)
        d = np.geomspace(1e-12, d_max, 500)
        assert np.all(linear_scale * d <= scale * np.asarray(mod.kappa(d)) * (1.0 + 1e-12))


def test_modulus_rejects_bad_scale():
    with pytest.raises(ConfigurationError):
        linear_modulus(-1.0)
    with pytest.raises(ConfigurationError):
        linear_modulus(math.nan)


# --- osgood ladder ----------------------------------------------------------


def test_osgood_ladder_linear_matches_logarithm():
    probe = osgood_ladder(linear_modulus(1.0))
    # int_eps^1 du/u = ln(1/eps), decade ladder from 1e-2 down
    expected = np.log(1.0 / np.asarray(probe.epsilons))
    np.testing.assert_allclose(probe.values, expected, rtol=1e-8)
    assert probe.divergent


def test_osgood_ladder_log_modulus_diverges():
    assert osgood_ladder(log_modulus(1.0)).divergent


def test_osgood_ladder_detects_convergent_integral():
    # kappa(u) = sqrt(u) is concave and monotone but int du/kappa converges
    root = type(linear_modulus(1.0))(
        kappa=lambda u: np.sqrt(np.asarray(u, dtype=np.float64)),
        scale=1.0,
        osgood_divergent=True,
        name="sqrt",
    )
    probe = osgood_ladder(root)
    assert not probe.divergent
    assert probe.values[-1] == pytest.approx(2.0, rel=1e-6)


# --- linear-growth audit ------------------------------------------------------


def test_growth_audit_passes_catalogue_sets():
    for name in ("example", "linear_test", "deterministic_ode"):
        coeffs = coefficient_catalogue(name, 0.1, 2.0)
        audit = audit_linear_growth(coeffs, domain_sampler(0.5, 10.0, seed=3), 400)
        assert audit.passed, name
        assert audit.estimated_constant <= coeffs.growth_constant + AUDIT_SLACK


def test_growth_audit_zero_coefficients_estimate_zero():
    audit = audit_linear_growth(zero_coefficients(), domain_sampler(1.0, 10.0, seed=1), 100)
    assert audit.estimated_constant == 0.0
    assert audit.passed


def test_growth_audit_is_monotone_in_the_sample_set():
    coeffs = example_coefficients(0.1)
    pool_t = np.linspace(0.0, 0.5, 256)
    pool_s = pool_t * 0.7
    pool_x = np.linspace(-10.0, 10.0, 256)

    def pooled(n):
        return pool_t[:n], pool_s[:n], pool_x[:n]

    small = audit_linear_growth(coeffs, pooled, 64).estimated_constant
    large = audit_linear_growth(coeffs, pooled, 256).estimated_constant
    assert large >= small


def test_growth_audit_flags_undersupplied_constant():
    coeffs = example_coefficients(0.1)
    tight = CoefficientSet(
        drift=coeffs.drift,
        diffusion=coeffs.diffusion,
        initial=coeffs.initial,
        measure=coeffs.measure,
        jump=coeffs.jump,
        compensator=coeffs.compensator,
        growth_constant=1.0,
        name="undersupplied",
    )
    audit = audit_linear_growth(tight, domain_sampler(0.5, 10.0, seed=3), 200)
    assert not audit.passed
    assert audit.estimated_constant > 1.0


def test_growth_audit_names_a_nan_sample():
    coeffs = zero_coefficients()
    broken = CoefficientSet(
        drift=lambda t, s, x: np.where(np.asarray(x) > 5.0, np.nan, 0.0),
        diffusion=coeffs.diffusion,
        initial=coeffs.initial,
        measure=coeffs.measure,
        name="nan-drift",
    )
    audit = audit_linear_growth(broken, domain_sampler(1.0, 10.0, seed=8), 300)
    assert not audit.passed
    assert audit.bad_points
    t, s, x = audit.bad_points[0]
    assert x > 5.0


# --- modulus audit ----------------------------------------------------------


def test_modulus_audit_passes_lipschitz_sets_with_linear_kappa():
    for name in ("example", "linear_test"):
        coeffs = coefficient_catalogue(name, 0.1, 2.0)
        mod = linear_modulus(coeffs.growth_constant)
        audit = audit_modulus(coeffs, mod, pair_sampler(0.5, 10.0, seed=5), 300)
        assert audit.passed, (name, audit.worst_slack)
        assert audit.worst_slack <= AUDIT_SLACK


def test_modulus_audit_passes_example_with_log_kappa():
    coeffs = example_coefficients(0.1, rate=2.0)
    scale = scale_for_log_modulus(coeffs.growth_constant, (2.0 * 10.0) ** 2)
    audit = audit_modulus(coeffs, log_modulus(scale), pair_sampler(0.5, 10.0, seed=6), 300)
    assert audit.passed


def test_modulus_audit_pinned_diffusion_difference():
    # t = s, x = 1, y = 0 makes the diffusion difference exactly 4, squared 16
    coeffs = example_coefficients(0.01, rate=0.0)

    def pinned(n):
        t = np.full(n, 0.3)
        return t, t, np.ones(n), np.zeros(n)

    audit = audit_modulus(coeffs, linear_modulus(16.0), pinned, 8)
    assert audit.passed
    assert audit.worst_slack == pytest.approx(0.0, abs=1e-12)


def test_modulus_audit_equal_states_give_zero_slack():
    coeffs = linear_test_coefficients(0.3, rate=1.0)

    def diagonal(n):
        rng = np.random.default_rng(4)
        t = 0.5 * rng.random(n)
        x = 10.0 * (2.0 * rng.random(n) - 1.0)
        return t, t * rng.random(n), x, x.copy()

    audit = audit_modulus(coeffs, linear_modulus(coeffs.growth_constant), diagonal, 64)
    assert audit.passed
    assert audit.worst_slack <= 0.0


def test_modulus_audit_rejects_convex_kappa():
    coeffs = linear_test_coefficients(0.1)
    audit = audit_modulus(coeffs, quadratic_modulus(1e6), pair_sampler(0.5, 10.0, seed=7), 200)
    assert not audit.passed
    assert not audit.concave_ok


def test_modulus_audit_flags_undersized_scale():
    coeffs = example_coefficients(0.1, rate=2.0)
    audit = audit_modulus(coeffs, linear_modulus(1.0), pair_sampler(0.5, 10.0, seed=9), 200)
    assert not audit.passed
    assert audit.worst_slack > AUDIT_SLACK
    t, s, x, y = audit.worst_point
    assert 0.0 <= s <= t <= 0.5 and abs(x) <= 10.0 and abs(y) <= 10.0


def test_modulus_audit_rejects_false_divergence_claims():
    coeffs = zero_coefficients()
    sqrt_mod = linear_modulus(1.0)
    sqrt_mod = type(sqrt_mod)(
        kappa=lambda u: np.sqrt(np.asarray(u, dtype=np.float64)),
        scale=1.0,
        osgood_divergent=True,
        name="sqrt",
    )
    audit = audit_modulus(coeffs, sqrt_mod, pair_sampler(0.5, 10.0, seed=2), 100)
    assert not audit.passed
    assert not audit.osgood.divergent


# --- samplers ---------------------------------------------------------------


def test_domain_sampler_is_seed_deterministic_and_in_range():
    a = domain_sampler(0.7, 5.0, seed=11)
    b = domain_sampler(0.7, 5.0, seed=11)
    ta, sa, xa = a(500)
    tb, sb, xb = b(500)
    np.testing.assert_array_equal(ta, tb)
    np.testing.assert_array_equal(xa, xb)
    assert np.all((0.0 <= sa) & (sa <= ta) & (ta <= 0.7))
    assert np.all(np.abs(xa) <= 5.0)


def test_pair_sampler_covers_both_states():
    t, s, x, y = pair_sampler(0.5, 2.0, seed=12)(400)
    assert np.all((0.0 <= s) & (s <= t) & (t <= 0.5))
    assert np.all(np.abs(x) <= 2.0) and np.all(np.abs(y) <= 2.0)
    assert np.any(x != y)

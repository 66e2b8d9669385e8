"""Lower-triangular recursion, successive approximation, and ensembles."""

import math

import numpy as np
import pytest

from svie.coefficients import (
    CoefficientSet,
    deterministic_ode_coefficients,
    example_coefficients,
    linear_test_coefficients,
    zero_coefficients,
)
from svie.errors import ConfigurationError, ExplosionError
from svie.grid_noise import LevyMeasure, NoisePath, build_grid, sample_noise_path
from svie.solver import (
    DiscretePath,
    direct_recursion,
    ensemble_simulate,
    picard_iterates,
    picard_solve,
    picard_step,
)


def quiet_path(grid, jump_times=(), jump_marks=()):
    """A noise path with zero Brownian increments and prescribed jumps."""
    return NoisePath(
        grid=grid,
        brownian=np.zeros(grid.steps),
        jump_times=np.asarray(jump_times, dtype=np.float64),
        jump_marks=np.asarray(jump_marks, dtype=np.float64),
        lineage=(0, 0),
    )


def jump_only_coefficients():
    """h(t,s,x,xi) = x*xi with the compensator forced to zero.

    Isolates the raw jump sum so the state-reading convention can be
    checked against hand-computed values.
    """
    return CoefficientSet(
        drift=lambda t, s, x: np.zeros_like(np.asarray(x, dtype=np.float64)),
        diffusion=lambda t, s, x: np.zeros_like(np.asarray(x, dtype=np.float64)),
        initial=lambda t: np.ones_like(np.asarray(t, dtype=np.float64)),
        measure=LevyMeasure.lognormal(1.0),
        jump=lambda t, s, x, xi: np.asarray(x) * np.asarray(xi),
        compensator=lambda t, s, x: np.zeros_like(np.asarray(x, dtype=np.float64)),
        growth_constant=math.exp(2.0),
        name="jump-only",
    )


# --- direct recursion oracles -------------------------------------------------


def test_two_step_ode_recursion_matches_hand_computation():
    # f = x/2, phi = 1, T = 1, n = 2: x = (1, 1.25, 1.5625)
    grid = build_grid(1.0, 2)
    path = direct_recursion(deterministic_ode_coefficients(), quiet_path(grid))
    np.testing.assert_allclose(path.values, [1.0, 1.25, 1.5625], rtol=0.0, atol=0.0)


@pytest.mark.parametrize("steps", [1, 2, 4, 16, 128])
def test_ode_recursion_closed_form(steps):
    # left-endpoint sums with f = x/2 compound exactly: x(1) = (1 + 1/(2n))^n
    grid = build_grid(1.0, steps)
    path = direct_recursion(deterministic_ode_coefficients(), quiet_path(grid))
    assert path.values[-1] == pytest.approx((1.0 + 0.5 / steps) ** steps, rel=1e-14)


def test_brownian_only_recursion_accumulates_increments():
    grid = build_grid(1.0, 2)
    coeffs = CoefficientSet(
        drift=lambda t, s, x: np.zeros_like(np.asarray(x, dtype=np.float64)),
        diffusion=lambda t, s, x: 1.0,
        initial=lambda t: np.ones_like(np.asarray(t, dtype=np.float64)),
        measure=LevyMeasure.empty(),
        name="unit-diffusion",
    )
    noise = NoisePath(
        grid=grid,
        brownian=np.array([0.3, -0.2]),
        jump_times=np.empty(0),
        jump_marks=np.empty(0),
        lineage=(0, 0),
    )
    np.testing.assert_allclose(direct_recursion(coeffs, noise).values, [1.0, 1.3, 1.1], atol=0.0)


def test_jump_on_grid_point_reads_strictly_earlier_state():
    # jump at tau = 0.5 lands on t_1 and must read x(t_0), not x(t_1)
    grid = build_grid(1.0, 2)
    noise = quiet_path(grid, jump_times=[0.5], jump_marks=[2.0])
    path = direct_recursion(jump_only_coefficients(), noise)
    np.testing.assert_allclose(path.values, [1.0, 3.0, 3.0], atol=0.0)


def test_jump_between_grid_points_reads_floor_state():
    grid = build_grid(1.0, 2)
    noise = quiet_path(grid, jump_times=[0.6], jump_marks=[2.0])
    path = direct_recursion(jump_only_coefficients(), noise)
    np.testing.assert_allclose(path.values, [1.0, 1.0, 3.0], atol=0.0)


def test_compensator_subtracts_from_the_drift_side():
    # no jumps land, but a positive compensator still pulls the state down
    grid = build_grid(1.0, 2)
    coeffs = CoefficientSet(
        drift=lambda t, s, x: np.zeros_like(np.asarray(x, dtype=np.float64)),
        diffusion=lambda t, s, x: np.zeros_like(np.asarray(x, dtype=np.float64)),
        initial=lambda t: np.ones_like(np.asarray(t, dtype=np.float64)),
        measure=LevyMeasure.lognormal(1.0),
        jump=lambda t, s, x, xi: np.asarray(x) * np.asarray(xi),
        compensator=lambda t, s, x: 0.5 * np.ones_like(np.asarray(x, dtype=np.float64)),
        name="constant-compensator",
    )
    path = direct_recursion(coeffs, quiet_path(grid))
    np.testing.assert_allclose(path.values, [1.0, 0.75, 0.5], atol=1e-15)


def test_explosion_raises_with_grid_index():
    grid = build_grid(1.0, 4)
    coeffs = CoefficientSet(
        drift=lambda t, s, x: 1e160 * np.asarray(x, dtype=np.float64),
        diffusion=lambda t, s, x: np.zeros_like(np.asarray(x, dtype=np.float64)),
        initial=lambda t: np.ones_like(np.asarray(t, dtype=np.float64)),
        measure=LevyMeasure.empty(),
        name="explosive",
    )
    with np.errstate(over="ignore"), pytest.raises(ExplosionError) as info:
        direct_recursion(coeffs, quiet_path(grid))
    assert info.value.grid_index == 2


# --- successive approximation -------------------------------------------------


def test_first_iterate_uses_initial_curve_everywhere():
    grid = build_grid(1.0, 2)
    coeffs = deterministic_ode_coefficients()
    noise = quiet_path(grid)
    start = DiscretePath(grid=grid, values=np.ones(3))
    step1 = picard_step(coeffs, noise, start)
    np.testing.assert_allclose(step1.values, [1.0, 1.25, 1.5], atol=0.0)
    step2 = picard_step(coeffs, noise, step1)
    np.testing.assert_allclose(step2.values, [1.0, 1.25, 1.5625], atol=0.0)


def test_iterate_k_is_exact_on_the_first_k_entries():
    grid = build_grid(0.5, 32)
    coeffs = example_coefficients(0.1)
    noise = sample_noise_path(grid, coeffs.measure, (21, 0))
    final = direct_recursion(coeffs, noise).values
    iterates = picard_iterates(coeffs, noise, (1, 5, 12, 33))
    for k in (1, 5, 12):
        np.testing.assert_array_equal(iterates[k].values[: k + 1], final[: k + 1])
    np.testing.assert_array_equal(iterates[33].values, final)


def test_picard_terminates_exactly_within_steps_plus_one():
    grid = build_grid(0.5, 48)
    coeffs = example_coefficients(0.15, rate=3.0)
    noise = sample_noise_path(grid, coeffs.measure, (99, 4))
    run = picard_solve(coeffs, noise, tolerance=0.0, k_max=grid.steps + 1)
    assert run.converged
    assert run.iterations <= grid.steps + 1
    assert run.sup_diffs[-1] == 0.0


def test_picard_final_is_bitwise_equal_to_direct_recursion():
    grid = build_grid(0.5, 64)
    coeffs = example_coefficients(0.1)
    noise = sample_noise_path(grid, coeffs.measure, (7, 3))
    run = picard_solve(coeffs, noise, tolerance=0.0, k_max=grid.steps + 1)
    direct = direct_recursion(coeffs, noise)
    assert np.array_equal(run.final.values, direct.values)


def test_picard_reports_nonconvergence_when_capped():
    grid = build_grid(0.5, 16)
    coeffs = example_coefficients(0.1)
    noise = sample_noise_path(grid, coeffs.measure, (11, 0))
    run = picard_solve(coeffs, noise, tolerance=0.0, k_max=1)
    assert not run.converged
    assert run.iterations == 1
    assert run.sup_diffs[-1] > 0.0


def test_zero_coefficients_converge_in_one_iteration():
    grid = build_grid(1.0, 8)
    run = picard_solve(zero_coefficients(), quiet_path(grid), tolerance=0.0, k_max=9)
    assert run.converged
    assert run.iterations == 1
    assert run.sup_diffs == (0.0,)
    np.testing.assert_array_equal(run.final.values, np.ones(9))


def test_picard_step_rejects_mismatched_grid():
    coeffs = deterministic_ode_coefficients()
    noise = quiet_path(build_grid(1.0, 4))
    wrong = DiscretePath(grid=build_grid(1.0, 8), values=np.ones(9))
    with pytest.raises(ConfigurationError):
        picard_step(coeffs, noise, wrong)


def test_discrete_path_validates_shape():
    with pytest.raises(ConfigurationError):
        DiscretePath(grid=build_grid(1.0, 4), values=np.ones(3))


# --- ensembles ----------------------------------------------------------------


def test_ensemble_rows_match_single_path_solves():
    grid = build_grid(0.5, 16)
    coeffs = linear_test_coefficients(0.2, rate=2.0)
    ens = ensemble_simulate(coeffs, grid, coeffs.measure, 6, master_seed=31)
    for idx in (0, 3, 5):
        noise = sample_noise_path(grid, coeffs.measure, (31, idx))
        np.testing.assert_array_equal(ens.values[idx], direct_recursion(coeffs, noise).values)


def test_ensemble_is_thread_count_invariant():
    grid = build_grid(0.5, 32)
    coeffs = example_coefficients(0.1)
    a = ensemble_simulate(coeffs, grid, coeffs.measure, 24, master_seed=5, threads=1)
    b = ensemble_simulate(coeffs, grid, coeffs.measure, 24, master_seed=5, threads=8)
    np.testing.assert_array_equal(a.values, b.values)


def test_ensemble_seed_changes_paths():
    grid = build_grid(0.5, 16)
    coeffs = example_coefficients(0.1)
    a = ensemble_simulate(coeffs, grid, coeffs.measure, 4, master_seed=1)
    b = ensemble_simulate(coeffs, grid, coeffs.measure, 4, master_seed=2)
    assert not np.array_equal(a.values, b.values)


def test_ensemble_flags_exploded_paths_and_keeps_survivor_rows():
    grid = build_grid(1.0, 4)
    coeffs = CoefficientSet(
        drift=lambda t, s, x: 1e160 * np.asarray(x, dtype=np.float64),
        diffusion=lambda t, s, x: np.zeros_like(np.asarray(x, dtype=np.float64)),
        initial=lambda t: np.ones_like(np.asarray(t, dtype=np.float64)),
        measure=LevyMeasure.empty(),
        name="explosive",
    )
    with np.errstate(over="ignore"):
        ens = ensemble_simulate(coeffs, grid, coeffs.measure, 3, master_seed=1)
    assert ens.exploded.all()
    assert np.isnan(ens.values[:, -1]).all()
    assert set(ens.explosion_index.tolist()) == {2}
    assert ens.survivors.shape == (0, 5)

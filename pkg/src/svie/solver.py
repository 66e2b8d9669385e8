"""Explicit left-endpoint scheme and successive approximation for
jump-diffusion Volterra equations.

The state at a grid point t_i is

    x(t_i) = phi(t_i)
           + sum_{j<i} f(t_i, t_j, x_j) dt
           + sum_{j<i} g(t_i, t_j, x_j) dW_j
           + sum_{tau <= t_i} h(t_i, tau, x_{floor(tau)}, xi)
           - sum_{j<i} (int h(t_i, t_j, x_j, xi) nu(dxi)) dt

where floor(tau) is the last grid index strictly below tau (jumps landing
exactly on a grid point, a null event, read the state one step earlier so
the scheme stays adapted).  Every sum over j < i makes the update strictly
lower triangular, which is why successive approximation started from
x^0 = phi reproduces the direct recursion exactly after at most n
iterations and the (n+1)-th sweep changes nothing.

``direct_recursion`` and ``picard_step`` share one row kernel, so a
converged Picard iterate is bitwise identical to the direct solution: the
floating-point summation order is the same code in both cases.

Kernel evaluation cost is O(n^2) per path by design; the t_i argument of a
Volterra kernel changes every row, so increments cannot be reused.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .coefficients import CoefficientSet
from .errors import ConfigurationError, ExplosionError
from .grid_noise import (
    LevyMeasure,
    NoisePath,
    TimeGrid,
    compensator_integral,
    sample_noise_path,
)

__all__ = [
    "DiscretePath",
    "PicardRun",
    "Ensemble",
    "direct_recursion",
    "picard_step",
    "picard_solve",
    "picard_iterates",
    "ensemble_simulate",
]

DEFAULT_TOLERANCE = 1e-10


@dataclass(frozen=True)
class DiscretePath:
    """State values x(t_i) over a grid's n + 1 points."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.grid.steps + 1,):
            raise ConfigurationError(
                f"path has shape {self.values.shape}, expected ({self.grid.steps + 1},)"
            )


@dataclass(frozen=True)
class PicardRun:
    """Record of one successive-approximation run.

    ``sup_diffs[k-1]`` is max_i |x^k(t_i) - x^{k-1}(t_i)| for iteration k.
    ``previous`` is the iterate one sweep before ``final``.
    """

    converged: bool
    iterations: int
    sup_diffs: np.ndarray
    final: DiscretePath
    previous: DiscretePath


class _RowContext:
    """Per-(coefficients, noise) precomputation shared by every sweep."""

    __slots__ = ("coeffs", "grid", "pts", "dt", "dW", "phi", "comp", "jtimes", "jmarks", "jstate", "jcounts")

    def __init__(self, coeffs: CoefficientSet, noise: NoisePath):
        self.coeffs = coeffs
        self.grid = noise.grid
        self.pts = noise.grid.points
        self.dt = noise.grid.dt
        self.dW = noise.brownian
        self.phi = _as_row(coeffs.initial(self.pts), self.grid.steps + 1)
        has_jumps = coeffs.jump is not None and coeffs.measure.total_mass > 0.0
        if has_jumps:
            self.comp = coeffs.compensator or (lambda t, s, x: compensator_integral(coeffs, t, s, x))
            self.jtimes = noise.jump_times
            self.jmarks = noise.jump_marks
            # state index: last grid point strictly before tau (adapted read)
            self.jstate = np.searchsorted(self.pts, self.jtimes, side="left") - 1
            self.jcounts = np.searchsorted(self.jtimes, self.pts, side="right")
        else:
            self.comp = None
            self.jtimes = self.jmarks = self.jstate = self.jcounts = None

    def sweep(self, source: np.ndarray, out: np.ndarray) -> None:
        """Fill out[1:] from ``source``; ``source`` may alias ``out``.

        When it does, row i reads the rows this sweep already wrote, which
        is the direct recursion; when it is a previous iterate, this is one
        Picard step.  Identical code path either way.
        """
        pts, dt, dW, phi = self.pts, self.dt, self.dW, self.phi
        drift, diffusion, jump = self.coeffs.drift, self.coeffs.diffusion, self.coeffs.jump
        comp = self.comp
        for i in range(1, len(pts)):
            t_i = pts[i]
            s_j = pts[:i]
            x_j = source[:i]
            val = phi[i]
            val += np.sum(_as_row(drift(t_i, s_j, x_j), i)) * dt
            val += np.dot(_as_row(diffusion(t_i, s_j, x_j), i), dW[:i])
            if comp is not None:
                m = self.jcounts[i]
                if m:
                    val += np.sum(
                        _as_row(jump(t_i, self.jtimes[:m], source[self.jstate[:m]], self.jmarks[:m]), m)
                    )
                val -= np.sum(_as_row(comp(t_i, s_j, x_j), i)) * dt
            if not math.isfinite(val):
                raise ExplosionError(i)
            out[i] = val


def _as_row(values, m: int) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.shape == (m,):
        return arr
    return np.broadcast_to(arr, (m,))


def _initial_values(ctx: _RowContext) -> np.ndarray:
    phi0 = ctx.phi[0]
    if not math.isfinite(phi0):
        raise ExplosionError(0)
    return np.array(ctx.phi, dtype=np.float64)


def direct_recursion(coeffs: CoefficientSet, noise: NoisePath) -> DiscretePath:
    """Solve the discretized equation exactly, row by row.

    Raises ExplosionError with the first offending grid index if the state
    leaves the finite floats.
    """
    ctx = _RowContext(coeffs, noise)
    values = np.empty(noise.grid.steps + 1, dtype=np.float64)
    values[0] = ctx.phi[0]
    if not math.isfinite(values[0]):
        raise ExplosionError(0)
    ctx.sweep(values, values)
    return DiscretePath(grid=noise.grid, values=values)


def picard_step(coeffs: CoefficientSet, noise: NoisePath, prev: DiscretePath) -> DiscretePath:
    """One successive-approximation sweep: evaluate all rows on ``prev``."""
    if prev.grid != noise.grid:
        raise ConfigurationError("previous iterate lives on a different grid than the noise path")
    ctx = _RowContext(coeffs, noise)
    out = np.empty(noise.grid.steps + 1, dtype=np.float64)
    out[0] = ctx.phi[0]
    if not math.isfinite(out[0]):
        raise ExplosionError(0)
    ctx.sweep(prev.values, out)
    return DiscretePath(grid=noise.grid, values=out)


def picard_solve(
    coeffs: CoefficientSet,
    noise: NoisePath,
    tolerance: float = DEFAULT_TOLERANCE,
    k_max: int | None = None,
) -> PicardRun:
    """Iterate sweeps from x^0 = phi until sup |x^k - x^{k-1}| <= tolerance.

    The default ``k_max`` is n + 1: on a lower-triangular scheme iterate n
    is exact and iterate n + 1 repeats it, so tolerance 0 always converges
    within the default budget.
    """
    if not (math.isfinite(tolerance) and tolerance >= 0.0):
        raise ConfigurationError(f"tolerance must be finite and non-negative, got {tolerance!r}")
    n = noise.grid.steps
    if k_max is None:
        k_max = n + 1
    if k_max < 1:
        raise ConfigurationError(f"k_max must be at least 1, got {k_max!r}")
    ctx = _RowContext(coeffs, noise)
    prev = _initial_values(ctx)
    curr = np.empty(n + 1, dtype=np.float64)
    sup_diffs = []
    converged = False
    for _ in range(k_max):
        curr[0] = ctx.phi[0]
        ctx.sweep(prev, curr)
        sup = float(np.max(np.abs(curr - prev)))
        sup_diffs.append(sup)
        prev, curr = curr, prev
        if sup <= tolerance:
            converged = True
            break
    # after the swap, ``prev`` holds the newest iterate
    return PicardRun(
        converged=converged,
        iterations=len(sup_diffs),
        sup_diffs=np.asarray(sup_diffs, dtype=np.float64),
        final=DiscretePath(grid=noise.grid, values=prev.copy()),
        previous=DiscretePath(grid=noise.grid, values=curr.copy()),
    )


def picard_iterates(coeffs: CoefficientSet, noise: NoisePath, keep: Iterable[int]) -> dict[int, DiscretePath]:
    """Return the requested iterates {k: x^k}; k = 0 is the initial curve."""
    wanted = sorted(set(int(k) for k in keep))
    if wanted and wanted[0] < 0:
        raise ConfigurationError("iterate indices must be non-negative")
    ctx = _RowContext(coeffs, noise)
    n = noise.grid.steps
    state = _initial_values(ctx)
    out: dict[int, DiscretePath] = {}
    if not wanted:
        return out
    if wanted[0] == 0:
        out[0] = DiscretePath(grid=noise.grid, values=state.copy())
    for k in range(1, wanted[-1] + 1):
        nxt = np.empty(n + 1, dtype=np.float64)
        nxt[0] = ctx.phi[0]
        ctx.sweep(state, nxt)
        state = nxt
        if k in wanted:
            out[k] = DiscretePath(grid=noise.grid, values=state.copy())
    return out


@dataclass(frozen=True)
class Ensemble:
    """Direct-recursion solutions over lineages (master_seed, 0..n_paths-1).

    Exploded paths are flagged and their rows are NaN; statistics downstream
    run on the survivors and report the loss.
    """

    grid: TimeGrid
    values: np.ndarray
    exploded: np.ndarray
    explosion_index: np.ndarray
    master_seed: int

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    @property
    def survivors(self) -> np.ndarray:
        return self.values[~self.exploded]


def ensemble_simulate(
    coeffs: CoefficientSet,
    grid: TimeGrid,
    measure: LevyMeasure | None,
    n_paths: int,
    master_seed: int,
    threads: int = 1,
) -> Ensemble:
    """Simulate n_paths independent paths; results never depend on ``threads``.

    Each path index maps to its own noise lineage and is solved by
    ``direct_recursion``; the thread pool only changes scheduling.
    """
    if n_paths < 1:
        raise ConfigurationError(f"n_paths must be at least 1, got {n_paths!r}")
    if threads < 1:
        raise ConfigurationError(f"threads must be at least 1, got {threads!r}")
    if measure is None:
        measure = coeffs.measure
    values = np.empty((n_paths, grid.steps + 1), dtype=np.float64)
    exploded = np.zeros(n_paths, dtype=bool)
    explosion_index = np.full(n_paths, -1, dtype=np.int64)

    def solve_one(idx: int) -> None:
        noise = sample_noise_path(grid, measure, (master_seed, idx))
        try:
            values[idx] = direct_recursion(coeffs, noise).values
        except ExplosionError as err:
            values[idx] = np.nan
            exploded[idx] = True
            explosion_index[idx] = err.grid_index

    if threads == 1:
        for idx in range(n_paths):
            solve_one(idx)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(solve_one, range(n_paths)))
    return Ensemble(
        grid=grid,
        values=values,
        exploded=exploded,
        explosion_index=explosion_index,
        master_seed=int(master_seed),
    )

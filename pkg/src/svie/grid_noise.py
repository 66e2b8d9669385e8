"""Uniform time grids and the random inputs of a jump-diffusion Volterra model.

A simulation consumes three sources of randomness per path: Brownian
increments on a uniform grid, a finite-activity jump train (Poisson count,
uniform times, i.i.d. marks), and nothing else.  Every draw is derived from
a ``(master_seed, path_index)`` lineage through a counter-based bit
generator, so resampling any path in any order, on any number of threads,
reproduces identical arrays.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable

import numpy as np
from scipy.integrate import quad

from .errors import ConfigurationError, NumericalError

if TYPE_CHECKING:
    from .coefficients import CoefficientSet

__all__ = [
    "TimeGrid",
    "LevyMeasure",
    "NoisePath",
    "build_grid",
    "sample_brownian",
    "sample_jumps",
    "sample_noise_path",
    "sample_noise_ensemble",
    "compensator_integral",
]

_MASK32 = 0xFFFFFFFF
_ROLE_BROWNIAN = 0
_ROLE_JUMPS = 1

# Quadrature constants for integrals against the mark density: probe grid
# resolution, relative floor below the probed peak at which the core
# bracket is cut, and the safety factor on the reported quad error.
_PROBE_COUNT = 161
_CORE_FLOOR = 1e-18
_ERR_SAFETY = 10.0


def _check_lineage(lineage: tuple[int, int]) -> tuple[int, int]:
    try:
        seed, idx = lineage
    except (TypeError, ValueError):
        raise ConfigurationError(f"seed lineage must be a (master_seed, path_index) pair, got {lineage!r}")
    seed = int(seed)
    idx = int(idx)
    if not 0 <= seed < 2**64:
        raise ConfigurationError(f"master_seed must lie in [0, 2^64), got {seed}")
    if not 0 <= idx < 2**32:
        raise ConfigurationError(f"path_index must lie in [0, 2^32), got {idx}")
    return seed, idx


def _generator(lineage: tuple[int, int], role: int) -> np.random.Generator:
    """Counter-style stream: the Philox key is (master_seed, path_index | role).

    Distinct keys give statistically independent streams, so per-path
    generators never depend on sampling order or thread scheduling.
    """
    seed, idx = _check_lineage(lineage)
    key = [seed, ((idx & _MASK32) << 32) | (role & _MASK32)]
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class TimeGrid:
    """Uniform partition 0 = t_0 < t_1 < ... < t_n = horizon.

    ``dt`` is computed once as ``horizon / steps`` and reused everywhere;
    grid points are ``i * dt`` so spacing never drifts with re-derivation.
    """

    horizon: float
    steps: int
    dt: float = field(init=False)
    points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        horizon = float(self.horizon)
        steps = int(self.steps)
        if not math.isfinite(horizon) or horizon <= 0.0:
            raise ConfigurationError(f"horizon must be finite and positive, got {self.horizon!r}")
        if steps < 1:
            raise ConfigurationError(f"steps must be at least 1, got {self.steps!r}")
        object.__setattr__(self, "horizon", horizon)
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "dt", horizon / steps)
        pts = self.dt * np.arange(steps + 1, dtype=np.float64)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)


def build_grid(horizon: float, steps: int) -> TimeGrid:
    """Build the uniform grid used by every solver and analysis routine."""
    return TimeGrid(horizon, steps)


@dataclass(frozen=True)
class LevyMeasure:
    """Finite-activity jump measure ``total_mass * mark_density(xi) dxi``.

    Parameters
    ----------
    total_mass : float
        Expected number of jumps per unit time; must be finite and >= 0.
    mark_density : callable or None
        Probability density of a single mark on ``support``.  Required
        whenever ``total_mass > 0``; it must integrate to one within 1e-6.
    mark_sampler : callable or None
        ``sampler(rng, size) -> ndarray`` drawing marks exactly in
        distribution.  Required for simulation when ``total_mass > 0``.
    support : (float, float)
        Interval carrying the marks; the origin is never included.
    """

    total_mass: float
    mark_density: Callable[[float], float] | None = None
    mark_sampler: Callable[[np.random.Generator, int], np.ndarray] | None = None
    support: tuple[float, float] = (0.0, math.inf)

    def __post_init__(self):
        mass = float(self.total_mass)
        if not math.isfinite(mass) or mass < 0.0:
            raise ConfigurationError(f"total_mass must be finite and non-negative, got {self.total_mass!r}")
        object.__setattr__(self, "total_mass", mass)
        lo, hi = self.support
        if not lo < hi:
            raise ConfigurationError(f"support must be an interval (lo, hi) with lo < hi, got {self.support!r}")
        if mass > 0.0:
            if self.mark_density is None:
                raise ConfigurationError("a positive-mass measure needs a mark_density")
            norm = self.integrate(lambda xi: 1.0) / mass
            if abs(norm - 1.0) > 1e-6:
                raise ConfigurationError(f"mark_density integrates to {norm!r}, expected 1 within 1e-6")

    @classmethod
    def empty(cls) -> "LevyMeasure":
        """Measure with no jumps at all."""
        return cls(total_mass=0.0)

    @classmethod
    def lognormal(cls, rate: float, mu: float = 0.0, sigma: float = 1.0) -> "LevyMeasure":
        """Jump rate ``rate`` with log-normal marks exp(mu + sigma * Z).

        Sampling exponentiates a standard normal draw, which is exact in
        distribution; the density is only used by quadrature checks.
        """
        if not (math.isfinite(sigma) and sigma > 0.0):
            raise ConfigurationError(f"sigma must be finite and positive, got {sigma!r}")
        norm = 1.0 / (sigma * math.sqrt(2.0 * math.pi))

        def density(xi):
            if isinstance(xi, (float, int)):
                # scalar fast path: quadrature calls this many thousands of times
                if xi <= 0.0:
                    return 0.0
                z = (math.log(xi) - mu) / sigma
                return norm * math.exp(-0.5 * z * z) / xi
            xi = np.asarray(xi, dtype=np.float64)
            pos = xi > 0.0
            safe = np.where(pos, xi, 1.0)
            z = (np.log(safe) - mu) / sigma
            out = np.where(pos, norm * np.exp(-0.5 * z * z) / safe, 0.0)
            return out if out.ndim else float(out)

        def sampler(rng: np.random.Generator, size: int) -> np.ndarray:
            return np.exp(mu + sigma * rng.standard_normal(size))

        return cls(total_mass=float(rate), mark_density=density, mark_sampler=sampler, support=(0.0, math.inf))

    def sample_marks(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if size == 0:
            return np.empty(0, dtype=np.float64)
        if self.mark_sampler is None:
            raise ConfigurationError("this measure has no mark_sampler; cannot draw marks")
        marks = np.asarray(self.mark_sampler(rng, size), dtype=np.float64)
        if marks.shape != (size,):
            raise ConfigurationError(f"mark_sampler returned shape {marks.shape}, expected ({size},)")
        return marks

    def integrate(self, fn: Callable[[float], float], rel_tol: float = 1e-8) -> float:
        """Integrate ``fn`` against the measure: total_mass * int fn * density.

        The integrand is probed on a log-spaced grid first; adaptive
        quadrature then runs on the bracket actually carrying mass, with
        the residual tails added separately.  Probing guards against
        integrands (heavy mark powers) whose mass sits far from the bulk
        of the density.
        """
        if self.total_mass == 0.0:
            return 0.0
        lo, hi = float(self.support[0]), float(self.support[1])

        def weighted(xi: float) -> float:
            # density first: where it underflows to 0 the product is 0 even
            # if fn alone would overflow (large mark powers at huge xi)
            w = float(self.mark_density(xi))
            if w == 0.0:
                return 0.0
            try:
                return float(fn(xi)) * w
            except OverflowError:
                return math.inf

        if lo >= 0.0:
            value, err = _integrate_half_line(weighted, lo, hi, rel_tol)
        elif hi <= 0.0:
            value, err = _integrate_half_line(lambda u: weighted(-u), -hi, -lo, rel_tol)
        else:
            vpos, epos = _integrate_half_line(weighted, 0.0, hi, rel_tol)
            vneg, eneg = _integrate_half_line(lambda u: weighted(-u), 0.0, -lo, rel_tol)
            value, err = vpos + vneg, epos + eneg

        scale = max(abs(value), 1e-300)
        if err > _ERR_SAFETY * rel_tol * scale:
            raise NumericalError(
                f"mark integral did not converge: estimate {value!r}, error {err!r}, "
                f"relative target {rel_tol!r}"
            )
        return self.total_mass * value


def _integrate_half_line(w: Callable[[float], float], lo: float, hi: float, rel_tol: float) -> tuple[float, float]:
    """Quadrature of w over [lo, hi] with 0 <= lo < hi (hi may be inf)."""
    plo = max(lo, 1e-150)
    phi = min(hi, 1e150)
    if not plo < phi:
        res, err = quad(w, lo, hi, epsabs=0.0, epsrel=rel_tol, limit=200)
        return res, err
    probes = np.geomspace(plo, phi, _PROBE_COUNT)
    if math.isfinite(hi):
        probes[-1] = hi
    if lo > 0.0:
        probes[0] = lo
    mags = np.array([abs(w(p)) for p in probes])
    peak = mags.max()
    if peak == 0.0 or not math.isfinite(peak):
        # Nothing detectable on the probe grid: hand the raw interval to quad.
        res, err = quad(w, lo, hi, epsabs=0.0, epsrel=rel_tol, limit=200)
        return res, err
    alive = np.nonzero(mags >= _CORE_FLOOR * peak)[0]
    # piecewise over probe segments: one quad call across many decades can
    # put all its nodes where the integrand is flat and miss the bump
    edges = probes[max(alive[0] - 1, 0) : min(alive[-1] + 1, len(probes) - 1) + 1]
    a, b = float(edges[0]), float(edges[-1])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        core = core_err = 0.0
        for e0, e1 in zip(edges[:-1], edges[1:]):
            piece, piece_err = quad(w, e0, e1, epsabs=0.0, epsrel=rel_tol, limit=200)
            core += piece
            core_err += piece_err
        tail_abs = rel_tol * max(abs(core), 1e-300)
        left = left_err = right = right_err = 0.0
        if lo < a:
            left, left_err = quad(w, lo, a, epsabs=tail_abs, epsrel=rel_tol, limit=200)
        if b < hi:
            right, right_err = quad(w, b, hi, epsabs=tail_abs, epsrel=rel_tol, limit=200)
    return core + left + right, core_err + left_err + right_err


@dataclass(frozen=True)
class NoisePath:
    """One path's random inputs: Brownian increments plus a jump train.

    ``brownian`` holds the n increments W(t_{i+1}) - W(t_i).  ``jump_times``
    is sorted inside (0, horizon]; ``jump_marks`` aligns with it.  The pair
    ``lineage = (master_seed, path_index)`` fully determines every array.
    """

    grid: TimeGrid
    brownian: np.ndarray
    jump_times: np.ndarray
    jump_marks: np.ndarray
    lineage: tuple[int, int]

    def __post_init__(self):
        if self.brownian.shape != (self.grid.steps,):
            raise ConfigurationError(
                f"brownian increments have shape {self.brownian.shape}, expected ({self.grid.steps},)"
            )
        if self.jump_times.shape != self.jump_marks.shape:
            raise ConfigurationError("jump_times and jump_marks must align")


def sample_brownian(grid: TimeGrid, lineage: tuple[int, int]) -> np.ndarray:
    """Draw the n Brownian increments, each N(0, dt), for one lineage."""
    rng = _generator(lineage, _ROLE_BROWNIAN)
    return math.sqrt(grid.dt) * rng.standard_normal(grid.steps)


def sample_jumps(grid: TimeGrid, measure: LevyMeasure, lineage: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """Draw one path's jump train.

    The count is Poisson(total_mass * horizon); given the count, times are
    i.i.d. uniform on (0, horizon] and returned sorted, with marks drawn
    i.i.d. from the mark law.
    """
    rng = _generator(lineage, _ROLE_JUMPS)
    if measure.total_mass == 0.0:
        return np.empty(0, dtype=np.float64), np.empty(0, dtype=np.float64)
    count = int(rng.poisson(measure.total_mass * grid.horizon))
    times = grid.horizon * (1.0 - rng.random(count))
    order = np.argsort(times, kind="stable")
    times = times[order]
    marks = measure.sample_marks(rng, count)[order]
    return times, marks


def sample_noise_path(grid: TimeGrid, measure: LevyMeasure, lineage: tuple[int, int]) -> NoisePath:
    """Assemble a full NoisePath; Brownian and jump draws use disjoint streams."""
    times, marks = sample_jumps(grid, measure, lineage)
    return NoisePath(
        grid=grid,
        brownian=sample_brownian(grid, lineage),
        jump_times=times,
        jump_marks=marks,
        lineage=_check_lineage(lineage),
    )


def sample_noise_ensemble(
    grid: TimeGrid, measure: LevyMeasure, n_paths: int, master_seed: int
) -> list[NoisePath]:
    """Paths with lineages (master_seed, 0..n_paths-1)."""
    if n_paths < 1:
        raise ConfigurationError(f"n_paths must be at least 1, got {n_paths!r}")
    return [sample_noise_path(grid, measure, (master_seed, i)) for i in range(n_paths)]


def compensator_integral(coeffs: "CoefficientSet", t, s, x):
    """Mean jump contribution int h(t, s, x, xi) nu(dxi).

    Uses the coefficient set's closed form when present, otherwise adaptive
    quadrature against the mark density (relative tolerance 1e-8).  ``s``
    and ``x`` may be arrays; ``s <= t`` is required elementwise.
    """
    t_arr = np.asarray(t, dtype=np.float64)
    s_arr = np.asarray(s, dtype=np.float64)
    x_arr = np.asarray(x, dtype=np.float64)
    if np.any(s_arr > t_arr):
        raise ConfigurationError("compensator_integral requires s <= t")
    shape = np.broadcast_shapes(t_arr.shape, s_arr.shape, x_arr.shape)
    if coeffs.jump is None or coeffs.measure.total_mass == 0.0:
        out = np.zeros(shape, dtype=np.float64)
        return float(out) if out.ndim == 0 else out
    if coeffs.compensator is not None:
        out = np.broadcast_to(np.asarray(coeffs.compensator(t, s, x), dtype=np.float64), shape).copy()
        return float(out) if out.ndim == 0 else out
    tb = np.broadcast_to(t_arr, shape).ravel()
    sb = np.broadcast_to(s_arr, shape).ravel()
    xb = np.broadcast_to(x_arr, shape).ravel()
    vals = np.array(
        [
            coeffs.measure.integrate(lambda xi, tk=tk, sk=sk, xk=xk: coeffs.jump(tk, sk, xk, xi))
            for tk, sk, xk in zip(tb, sb, xb)
        ]
    )
    out = vals.reshape(shape)
    return float(out) if out.ndim == 0 else out

"""Numerical counterparts of the inequalities behind well-posedness.

Everything here is a check, not a proof: Monte Carlo estimates carry
standard errors and are compared one-sidedly against theoretical
envelopes with a uniform four-standard-error allowance.

Contents
--------
* ``bihari_integral`` / ``bihari_bound``: the comparison function
  G(v) = int dv / kappa and its inverse, which turn an integral inequality
  y(t) <= y0 + int kappa(y) into the explicit bound G^{-1}(G(y0) + Z).
  With kappa(u) = u this collapses to the Gronwall bound y0 * exp(Z).
* ``doob_check``: L^p maximal inequality
  E sup |X|^p <= (p/(p-1))^p E |X(T)|^p for ensembles of martingales.
* ``uniform_moment_bound`` / ``moment_check``: the a priori envelope
  4 (1 + E|phi(T)|^2) exp(4 C max(T,1)^2) on second moments of iterates.
* ``picard_gap``: E sup_{s<=t} |x^{k+m} - x^k|^2 against its linear-in-t
  envelope c3 * t with c3 = 12 max(T,1) * scale * kappa(4 C1).
* ``majorant_recursion``: the deterministic sequence psi_1 = c3 t,
  psi_{j+1} = int_0^t kappa(psi_j), which must decrease monotonically on a
  window where kappa(c3 t) <= c3.
* Martingale ensemble builders for the Doob and compensation checks.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid, quad

from .coefficients import CoefficientSet, Modulus
from .errors import AnalysisError, ConfigurationError, DomainError
from .grid_noise import LevyMeasure, NoisePath, TimeGrid
from .solver import Ensemble, picard_iterates

__all__ = [
    "bihari_integral",
    "bihari_bound",
    "DoobReport",
    "doob_check",
    "uniform_moment_bound",
    "MomentReport",
    "moment_check",
    "GapReport",
    "picard_gap",
    "MajorantSequence",
    "majorant_recursion",
    "MartingaleEnsemble",
    "brownian_martingale_ensemble",
    "compensated_jump_ensemble",
]

_BATCH = 16384  # fixed batch size keeps vectorized ensembles reproducible


# --- comparison function and its inverse ---------------------------------


def bihari_integral(modulus: Modulus, v: float, v_ref: float) -> float:
    """G(v) - G(v_ref) = int_{v_ref}^{v} du / kappa(u), adaptive to 1e-8.

    G is only defined up to an additive constant, so a reference point is
    part of the signature.  kappa must stay positive on the span.
    """
    v = float(v)
    v_ref = float(v_ref)
    for name, val in (("v", v), ("v_ref", v_ref)):
        if not (math.isfinite(val) and val > 0.0):
            raise ConfigurationError(f"{name} must be finite and positive, got {val!r}")
    if v == v_ref:
        return 0.0

    def inv(u: float) -> float:
        k = float(modulus.kappa(u))
        if not k > 0.0:
            raise DomainError(f"kappa({u!r}) = {k!r}; the comparison integral needs kappa > 0")
        return 1.0 / k

    res, err = quad(inv, v_ref, v, epsabs=0.0, epsrel=1e-8, limit=400)
    if err > 1e-6 * max(abs(res), 1e-300):
        raise AnalysisError(f"comparison integral did not converge: estimate {res!r}, error {err!r}")
    return float(res)


def bihari_bound(y0: float, z_integral: float, modulus: Modulus) -> float:
    """Solve G(v) = G(y0) + z for v, by monotone bisection on the integral.

    y0 = 0 with a divergent modulus returns 0: no initial mass plus the
    Osgood condition pins the solution at zero.  A target beyond the
    reachable range of G raises DomainError.
    """
    y0 = float(y0)
    z = float(z_integral)
    if not (math.isfinite(y0) and y0 >= 0.0):
        raise ConfigurationError(f"y0 must be finite and non-negative, got {y0!r}")
    if not (math.isfinite(z) and z >= 0.0):
        raise ConfigurationError(f"z_integral must be finite and non-negative, got {z!r}")
    if y0 == 0.0:
        if modulus.osgood_divergent:
            return 0.0
        raise DomainError("y0 = 0 needs a divergent int du/kappa to pin the bound at 0")
    if z == 0.0:
        return y0

    # grow the bracket by factors of 4, accumulating the integral piecewise
    # so every quadrature call spans a well-conditioned interval
    lo, g_lo = y0, 0.0
    hi = max(2.0 * y0, y0 + 1.0)
    g_hi = g_lo + bihari_integral(modulus, hi, lo)
    while g_hi < z:
        nxt = hi * 4.0
        if nxt > 1e300:
            raise DomainError(
                f"target {z!r} exceeds the reachable range of the comparison function "
                f"(G spans about {g_hi!r} by v = {hi!r})"
            )
        lo, g_lo = hi, g_hi
        g_hi = g_lo + bihari_integral(modulus, nxt, lo)
        hi = nxt
    anchor, g_anchor = lo, g_lo
    while hi - lo > 1e-10 * hi:
        mid = 0.5 * (lo + hi)
        if g_anchor + bihari_integral(modulus, mid, anchor) < z:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --- maximal inequality ---------------------------------------------------


@dataclass(frozen=True)
class DoobReport:
    lhs: float
    rhs: float
    constant: float
    bound: float
    se_lhs: float
    se_rhs: float
    n_paths: int
    passed: bool


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    n = len(values)
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return mean, se


def doob_check(sup_sq: np.ndarray, terminal_sq: np.ndarray, p: float = 2.0, slack: float = 0.05) -> DoobReport:
    """Check E sup |X|^p <= (p/(p-1))^p E |X(T)|^p on an ensemble.

    Inputs are per-path running maxima of |X|^2 and terminal |X(T)|^2; for
    p other than 2 they are raised to p/2.  The verdict allows the given
    relative slack plus four combined standard errors.
    """
    sup_sq = np.asarray(sup_sq, dtype=np.float64)
    terminal_sq = np.asarray(terminal_sq, dtype=np.float64)
    if sup_sq.shape != terminal_sq.shape or sup_sq.ndim != 1 or len(sup_sq) == 0:
        raise ConfigurationError("sup and terminal arrays must be 1-d, non-empty and aligned")
    if not (math.isfinite(p) and p > 1.0):
        raise ConfigurationError(f"the maximal inequality needs p > 1, got {p!r}")
    if not np.all(np.isfinite(sup_sq)) or not np.all(np.isfinite(terminal_sq)):
        raise AnalysisError("ensemble contains non-finite values")
    if np.any(sup_sq + 1e-12 < terminal_sq):
        raise AnalysisError("running maxima fall below terminal values; ensemble is inconsistent")
    half_p = 0.5 * p
    lhs_samples = sup_sq if p == 2.0 else np.power(sup_sq, half_p)
    rhs_samples = terminal_sq if p == 2.0 else np.power(terminal_sq, half_p)
    lhs, se_lhs = _mean_se(lhs_samples)
    rhs, se_rhs = _mean_se(rhs_samples)
    constant = (p / (p - 1.0)) ** p
    bound = constant * rhs * (1.0 + slack) + 4.0 * math.hypot(se_lhs, constant * se_rhs)
    return DoobReport(
        lhs=lhs,
        rhs=rhs,
        constant=constant,
        bound=bound,
        se_lhs=se_lhs,
        se_rhs=se_rhs,
        n_paths=len(sup_sq),
        passed=bool(lhs <= bound),
    )


# --- second-moment envelope ------------------------------------------------


def uniform_moment_bound(growth_c: float, horizon: float, initial_sq_mean: float) -> float:
    """Envelope 4 (1 + E|phi(T)|^2) exp(4 C max(T, 1)^2), inf on overflow."""
    if not (math.isfinite(growth_c) and growth_c >= 0.0):
        raise ConfigurationError(f"growth constant must be finite and non-negative, got {growth_c!r}")
    if not (math.isfinite(horizon) and horizon > 0.0):
        raise ConfigurationError(f"horizon must be finite and positive, got {horizon!r}")
    if not (math.isfinite(initial_sq_mean) and initial_sq_mean >= 0.0):
        raise ConfigurationError(f"initial_sq_mean must be finite and non-negative, got {initial_sq_mean!r}")
    t_tilde = max(horizon, 1.0)
    exponent = 4.0 * growth_c * t_tilde * t_tilde
    if exponent > 709.0:
        warnings.warn("second-moment envelope overflows double precision; returning inf", RuntimeWarning)
        return math.inf
    return 4.0 * (1.0 + initial_sq_mean) * math.exp(exponent)


@dataclass(frozen=True)
class MomentReport:
    times: np.ndarray
    estimates: np.ndarray
    stderrs: np.ndarray
    bound: float
    passes: np.ndarray
    survivors: int
    exploded: int

    @property
    def all_pass(self) -> bool:
        return bool(np.all(self.passes))


def moment_check(ensemble: Ensemble, coeffs: CoefficientSet, growth_c: float | None = None) -> MomentReport:
    """Estimate E|x(t_i)|^2 per grid time and test it against the envelope.

    A time passes when estimate - 4 stderr <= bound; the envelope is
    one-sided, so only excesses beyond statistical noise count against it.
    """
    if growth_c is None:
        growth_c = coeffs.growth_constant
    if growth_c is None:
        raise ConfigurationError("no growth constant available; supply growth_c or audit the coefficients")
    surv = ensemble.survivors
    m = surv.shape[0]
    if m == 0:
        raise AnalysisError("every path exploded; no surviving paths to estimate moments")
    sq = surv * surv
    estimates = sq.mean(axis=0)
    stderrs = sq.std(axis=0, ddof=1) / math.sqrt(m) if m > 1 else np.zeros_like(estimates)
    horizon = ensemble.grid.horizon
    phi_terminal = float(np.asarray(coeffs.initial(horizon), dtype=np.float64))
    bound = uniform_moment_bound(float(growth_c), horizon, phi_terminal * phi_terminal)
    passes = estimates - 4.0 * stderrs <= bound
    return MomentReport(
        times=ensemble.grid.points,
        estimates=estimates,
        stderrs=stderrs,
        bound=bound,
        passes=passes,
        survivors=m,
        exploded=int(ensemble.exploded.sum()),
    )


# --- gap between iterates ---------------------------------------------------


@dataclass(frozen=True)
class GapReport:
    times: np.ndarray
    estimates: np.ndarray
    stderrs: np.ndarray
    envelope_slope: float
    passes: np.ndarray
    k: int
    m: int
    n_paths: int

    @property
    def all_pass(self) -> bool:
        return bool(np.all(self.passes))


def gap_envelope_slope(coeffs: CoefficientSet, modulus: Modulus, horizon: float, growth_c: float) -> float:
    """c3 = 12 max(T,1) * scale * kappa(4 C1) with C1 the moment envelope."""
    t_tilde = max(horizon, 1.0)
    phi_terminal = float(np.asarray(coeffs.initial(horizon), dtype=np.float64))
    with warnings.catch_warnings(), np.errstate(over="ignore"):
        warnings.simplefilter("ignore", RuntimeWarning)
        c1 = uniform_moment_bound(growth_c, horizon, phi_terminal * phi_terminal)
        kap = float(modulus.kappa(4.0 * c1)) if math.isfinite(c1) else math.inf
    return 12.0 * t_tilde * modulus.scale * kap


def picard_gap(
    coeffs: CoefficientSet,
    noises: list[NoisePath],
    k: int,
    m: int,
    modulus: Modulus,
    growth_c: float | None = None,
) -> GapReport:
    """Monte Carlo curve t -> E sup_{s<=t} |x^{k+m}(s) - x^k(s)|^2.

    Each time passes when the estimate stays below c3 * t within four
    standard errors.  m = 0 compares an iterate with itself and is zero.
    """
    if k < 1:
        raise ConfigurationError(f"k must be at least 1, got {k!r}")
    if m < 0:
        raise ConfigurationError(f"m must be non-negative, got {m!r}")
    if not noises:
        raise ConfigurationError("need at least one noise path")
    grid = noises[0].grid
    if any(noise.grid != grid for noise in noises):
        raise ConfigurationError("all noise paths must share one grid")
    if growth_c is None:
        growth_c = coeffs.growth_constant
    if growth_c is None:
        raise ConfigurationError("no growth constant available; supply growth_c or audit the coefficients")
    c3 = gap_envelope_slope(coeffs, modulus, grid.horizon, float(growth_c))
    n_paths = len(noises)
    if m == 0:
        zero = np.zeros(grid.steps + 1)
        return GapReport(grid.points, zero, zero.copy(), c3, np.ones(grid.steps + 1, dtype=bool), k, m, n_paths)
    sups = np.empty((n_paths, grid.steps + 1))
    for row, noise in enumerate(noises):
        iterates = picard_iterates(coeffs, noise, (k, k + m))
        diff = iterates[k + m].values - iterates[k].values
        sups[row] = np.maximum.accumulate(diff * diff)
    estimates = sups.mean(axis=0)
    stderrs = sups.std(axis=0, ddof=1) / math.sqrt(n_paths) if n_paths > 1 else np.zeros_like(estimates)
    # inf * 0 at t = 0 would poison the envelope when c3 overflows
    envelope = np.where(grid.points > 0.0, c3 * grid.points, 0.0)
    passes = estimates - 4.0 * stderrs <= envelope
    return GapReport(grid.points, estimates, stderrs, c3, passes, k, m, n_paths)


# --- deterministic majorant sequence ----------------------------------------


@dataclass(frozen=True)
class MajorantSequence:
    """Curves psi_1 = c3 t and psi_{j+1}(t) = int_0^t kappa(psi_j(s)) ds."""

    c3: float
    window: float
    times: np.ndarray
    curves: np.ndarray

    @property
    def final_value(self) -> float:
        return float(self.curves[-1, -1])


def majorant_recursion(
    c3: float,
    modulus: Modulus,
    window: float,
    steps: int = 256,
    iterations: int = 30,
) -> MajorantSequence:
    """Iterate the concave majorant and verify it decreases monotonically.

    Preconditions: kappa(c3 * t) <= c3 on [0, window], checked on the grid;
    the first grid time violating it is named.  Integration is cumulative
    trapezoidal on the uniform grid.
    """
    c3 = float(c3)
    if not (math.isfinite(c3) and c3 >= 0.0):
        raise ConfigurationError(f"c3 must be finite and non-negative, got {c3!r}")
    if not (math.isfinite(window) and window > 0.0):
        raise ConfigurationError(f"window must be finite and positive, got {window!r}")
    if steps < 1 or iterations < 1:
        raise ConfigurationError("steps and iterations must be at least 1")
    times = (window / steps) * np.arange(steps + 1, dtype=np.float64)
    # an overflowing kappa comes out as inf, which the precondition and
    # chain checks below reject on their own terms
    with np.errstate(over="ignore"):
        first_curve = c3 * times
        kap_first = np.asarray(modulus.kappa(first_curve), dtype=np.float64)
        tol = 1e-12 * max(c3, 1.0)
        bad = np.nonzero(kap_first > c3 + tol)[0]
        if bad.size:
            raise ConfigurationError(
                f"kappa(c3 t) = {float(kap_first[bad[0]])!r} exceeds c3 = {c3!r} at t = {float(times[bad[0]])!r}; "
                "shrink the window"
            )
        curves = np.empty((iterations, steps + 1), dtype=np.float64)
        curves[0] = first_curve
        for j in range(1, iterations):
            kap = np.asarray(modulus.kappa(curves[j - 1]), dtype=np.float64)
            curves[j] = cumulative_trapezoid(kap, times, initial=0.0)
            allow = 1e-12 + 1e-9 * np.abs(curves[j - 1])  # rounding room, scales with magnitude
            if np.any(curves[j] < -1e-12) or np.any(curves[j] > curves[j - 1] + allow):
                raise AnalysisError(f"majorant chain broke at iteration {j + 1}: psi_{j + 1} > psi_{j} somewhere")
    return MajorantSequence(c3=c3, window=float(window), times=times, curves=curves)


# --- martingale ensemble builders -------------------------------------------


@dataclass(frozen=True)
class MartingaleEnsemble:
    """Per-path running max of |X|^2, terminal |X(T)|^2 and terminal X(T)."""

    sup_sq: np.ndarray
    terminal_sq: np.ndarray
    terminal: np.ndarray


def brownian_martingale_ensemble(
    grid: TimeGrid,
    integrand: Callable,
    n_paths: int,
    seed: int,
) -> MartingaleEnsemble:
    """X(t_i) = sum_{j<i} sigma(t_j) dW_j for a deterministic sigma."""
    if n_paths < 1:
        raise ConfigurationError(f"n_paths must be at least 1, got {n_paths!r}")
    n = grid.steps
    sigma = np.broadcast_to(np.asarray(integrand(grid.points[:-1]), dtype=np.float64), (n,))
    rng = np.random.default_rng(seed)
    sup_sq = np.empty(n_paths)
    terminal = np.empty(n_paths)
    done = 0
    scale = math.sqrt(grid.dt)
    while done < n_paths:
        b = min(_BATCH, n_paths - done)
        incr = scale * rng.standard_normal((b, n)) * sigma
        x = np.cumsum(incr, axis=1)
        sup_sq[done : done + b] = np.maximum(np.max(x * x, axis=1), 0.0)
        terminal[done : done + b] = x[:, -1]
        done += b
    return MartingaleEnsemble(sup_sq=sup_sq, terminal_sq=terminal * terminal, terminal=terminal)


def compensated_jump_ensemble(
    grid: TimeGrid,
    measure: LevyMeasure,
    integrand: Callable,
    n_paths: int,
    seed: int,
    compensator_rate: Callable | None = None,
    cumulative_compensator: Callable | None = None,
) -> MartingaleEnsemble:
    """X(t_i) = sum_{tau<=t_i} u(tau, xi) - int_0^{t_i} (int u(s, .) dnu) ds.

    ``integrand`` u(s, xi) must be deterministic and broadcast over arrays.
    The compensator is taken from ``cumulative_compensator`` when given,
    else integrated from ``compensator_rate``, else computed by quadrature
    of u against the mark density at each grid time.  The running max is
    evaluated at grid times.
    """
    if n_paths < 1:
        raise ConfigurationError(f"n_paths must be at least 1, got {n_paths!r}")
    pts = grid.points
    n = grid.steps
    if measure.total_mass == 0.0:
        zeros = np.zeros(n_paths)
        return MartingaleEnsemble(sup_sq=zeros, terminal_sq=zeros.copy(), terminal=zeros.copy())
    if cumulative_compensator is not None:
        comp = np.broadcast_to(np.asarray(cumulative_compensator(pts), dtype=np.float64), (n + 1,))
    else:
        if compensator_rate is not None:
            rate = np.broadcast_to(np.asarray(compensator_rate(pts), dtype=np.float64), (n + 1,))
        else:
            rate = np.array([measure.integrate(lambda xi, s=s: integrand(s, xi)) for s in pts])
        comp = cumulative_trapezoid(rate, pts, initial=0.0)
    rng = np.random.default_rng(seed)
    mean_count = measure.total_mass * grid.horizon
    sup_sq = np.empty(n_paths)
    terminal = np.empty(n_paths)
    done = 0
    while done < n_paths:
        b = min(_BATCH, n_paths - done)
        counts = rng.poisson(mean_count, b)
        total = int(counts.sum())
        times = grid.horizon * (1.0 - rng.random(total))
        marks = measure.sample_marks(rng, total)
        path_of = np.repeat(np.arange(b), counts)
        jumps = np.broadcast_to(np.asarray(integrand(times, marks), dtype=np.float64), times.shape)
        first_idx = np.searchsorted(pts, times, side="left")  # first grid time >= tau
        flat = np.bincount(path_of * (n + 1) + first_idx, weights=jumps, minlength=b * (n + 1))
        x = np.cumsum(flat.reshape(b, n + 1), axis=1) - comp
        sup_sq[done : done + b] = np.max(x * x, axis=1)
        terminal[done : done + b] = x[:, -1]
        done += b
    return MartingaleEnsemble(sup_sq=sup_sq, terminal_sq=terminal * terminal, terminal=terminal)

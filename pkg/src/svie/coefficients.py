"""Coefficient sets, continuity moduli, and the audits that certify them.

A model is four kernels: drift f(t, s, x), diffusion g(t, s, x), jump
h(t, s, x, xi) and an initial curve phi(t), together with the jump measure
they integrate against.  Kernels must broadcast like numpy ufuncs over
``s``, ``x`` (and ``xi``) for a scalar ``t``.

Two sampling audits back the standing assumptions:

* ``audit_linear_growth`` certifies max(|f|^2, |g|^2, int |h|^2 nu)
  <= C (1 + |x|^2) on a sampled domain and estimates the best C.
* ``audit_modulus`` certifies the squared differences of all three kernels
  against scale * kappa(|x - y|^2) for a concave modulus kappa, and probes
  kappa's own contract (zero at zero, positivity, monotonicity, midpoint
  concavity, divergence of int du / kappa(u) at the origin).

Audits are certificates over their sample set, not proofs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .errors import ConfigurationError
from .grid_noise import LevyMeasure

__all__ = [
    "CoefficientSet",
    "Modulus",
    "GrowthAudit",
    "ModulusAudit",
    "OsgoodProbe",
    "example_coefficients",
    "deterministic_ode_coefficients",
    "linear_test_coefficients",
    "zero_coefficients",
    "coefficient_catalogue",
    "linear_modulus",
    "log_modulus",
    "quadratic_modulus",
    "modulus_catalogue",
    "catalogue_scale",
    "scale_for_log_modulus",
    "domain_sampler",
    "pair_sampler",
    "audit_linear_growth",
    "audit_modulus",
    "osgood_ladder",
]

AUDIT_SLACK = 1e-12  # uniform absolute slack on audited inequalities
MARK_INTEGRAL_REL_TOL = 1e-8  # certified relative error of mark-integral quadrature

_E2 = math.exp(2.0)  # second moment of a standard log-normal mark
_E4 = math.exp(8.0)  # fourth moment
_E1 = math.exp(0.5)  # first moment


@dataclass(frozen=True)
class CoefficientSet:
    """Kernels of one jump-diffusion Volterra model.

    ``jump=None`` switches the jump term off entirely.  ``compensator`` is
    an optional closed form for int h(t, s, x, xi) nu(dxi); when absent the
    solver falls back to quadrature against ``measure`` (correct but slow).
    ``growth_constant`` is the analytic C of the linear-growth condition
    when one is known.
    """

    drift: Callable
    diffusion: Callable
    initial: Callable
    measure: LevyMeasure
    jump: Callable | None = None
    compensator: Callable | None = None
    growth_constant: float | None = None
    name: str = "custom"

    def __post_init__(self):
        if self.jump is not None and self.measure.total_mass > 0.0 and self.measure.mark_sampler is None:
            raise ConfigurationError("a jump kernel with positive mass needs a measure that can sample marks")


@dataclass(frozen=True)
class Modulus:
    """Concave continuity modulus u -> scale * kappa(u).

    ``osgood_divergent`` declares that int_0+ du / kappa(u) diverges; the
    declaration is probed numerically by ``audit_modulus``.
    """

    kappa: Callable
    scale: float
    osgood_divergent: bool
    name: str = "custom"

    def __post_init__(self):
        scale = float(self.scale)
        if not math.isfinite(scale) or scale < 0.0:
            raise ConfigurationError(f"modulus scale must be finite and non-negative, got {self.scale!r}")
        object.__setattr__(self, "scale", scale)


# --- modulus catalogue -------------------------------------------------


def linear_modulus(scale: float) -> Modulus:
    """kappa(u) = u; the globally Lipschitz special case."""
    return Modulus(kappa=lambda u: np.asarray(u, dtype=np.float64), scale=scale, osgood_divergent=True, name="linear")


def log_modulus(scale: float) -> Modulus:
    """kappa(u) = u log(1/u) near zero, frozen at its maximum 1/e beyond u = 1/e.

    The flat extension keeps kappa concave, non-decreasing and continuous
    while int du / kappa still diverges at the origin.
    """
    cap = math.exp(-1.0)

    def kappa(u):
        arr = np.asarray(u, dtype=np.float64)
        small = (arr > 0.0) & (arr <= cap)
        safe = np.where(small, arr, cap)
        out = np.where(small, -safe * np.log(safe), np.where(arr <= 0.0, 0.0, cap))
        return out if out.ndim else float(out)

    return Modulus(kappa=kappa, scale=scale, osgood_divergent=True, name="log")


def quadratic_modulus(scale: float) -> Modulus:
    """kappa(u) = u^2.  Convex, so it fails the concavity probe; kept for negative tests."""
    return Modulus(
        kappa=lambda u: np.square(np.asarray(u, dtype=np.float64)),
        scale=scale,
        osgood_divergent=True,
        name="quadratic",
    )


def modulus_catalogue(kind: str, scale: float) -> Modulus:
    try:
        factory = {"linear": linear_modulus, "log": log_modulus, "quadratic": quadratic_modulus}[kind]
    except KeyError:
        raise ConfigurationError(f"unknown modulus kind {kind!r}; expected linear, log or quadratic")
    return factory(scale)


def scale_for_log_modulus(linear_scale: float, d_max: float) -> float:
    """Smallest scale putting L^2 * d under scale * kappa_log(d) for d in (0, d_max]."""
    if d_max <= 0.0:
        raise ConfigurationError("d_max must be positive")
    cap = math.exp(-1.0)
    if d_max <= cap:
        return linear_scale / math.log(1.0 / d_max)
    return linear_scale * math.e * d_max


# --- coefficient catalogue ---------------------------------------------


def _ones_like(t):
    out = np.ones_like(np.asarray(t, dtype=np.float64))
    return out if out.ndim else 1.0


def example_coefficients(c: float, rate: float = 2.0) -> CoefficientSet:
    """Worked jump-diffusion model with log-normal marks.

    f = x/2, g = 4 cos^2(t - s) x, h = c xi^2 x, phi = 1, with mark law
    exp(N(0, 1)) at the given jump rate.  The compensator has the closed
    form c * rate * e^2 * x, and the linear-growth constant is
    max(1/4, 16, rate * e^8 * c^2).
    """
    c = float(c)
    if not math.isfinite(c) or c <= 0.0:
        raise ConfigurationError(f"jump coefficient c must be finite and positive, got {c!r}")
    if not math.isfinite(rate) or rate < 0.0:
        raise ConfigurationError(f"jump rate must be finite and non-negative, got {rate!r}")
    measure = LevyMeasure.lognormal(rate=rate) if rate > 0.0 else LevyMeasure.empty()
    comp_slope = c * rate * _E2
    return CoefficientSet(
        drift=lambda t, s, x: 0.5 * np.asarray(x, dtype=np.float64),
        diffusion=lambda t, s, x: 4.0 * np.cos(np.asarray(t, dtype=np.float64) - s) ** 2 * x,
        jump=lambda t, s, x, xi: c * np.asarray(xi, dtype=np.float64) ** 2 * x,
        initial=_ones_like,
        measure=measure,
        compensator=lambda t, s, x: comp_slope * np.asarray(x, dtype=np.float64),
        growth_constant=max(0.25, 16.0, rate * _E4 * c * c),
        name="example",
    )


def deterministic_ode_coefficients() -> CoefficientSet:
    """f = x/2 with no noise at all; x(t) converges to exp(t/2) from phi = 1."""
    return CoefficientSet(
        drift=lambda t, s, x: 0.5 * np.asarray(x, dtype=np.float64),
        diffusion=lambda t, s, x: np.zeros_like(np.asarray(x, dtype=np.float64)),
        jump=None,
        initial=_ones_like,
        measure=LevyMeasure.empty(),
        growth_constant=0.25,
        name="deterministic_ode",
    )


def linear_test_coefficients(c: float = 0.1, rate: float = 2.0) -> CoefficientSet:
    """Globally Lipschitz set: f = x/4, g = x/2, h = c xi x, phi = 1."""
    c = float(c)
    if not math.isfinite(c) or c <= 0.0:
        raise ConfigurationError(f"jump coefficient c must be finite and positive, got {c!r}")
    measure = LevyMeasure.lognormal(rate=rate) if rate > 0.0 else LevyMeasure.empty()
    comp_slope = c * rate * _E1
    return CoefficientSet(
        drift=lambda t, s, x: 0.25 * np.asarray(x, dtype=np.float64),
        diffusion=lambda t, s, x: 0.5 * np.asarray(x, dtype=np.float64),
        jump=lambda t, s, x, xi: c * np.asarray(xi, dtype=np.float64) * x,
        initial=_ones_like,
        measure=measure,
        compensator=lambda t, s, x: comp_slope * np.asarray(x, dtype=np.float64),
        growth_constant=max(0.0625, 0.25, c * c * rate * _E2),
        name="linear_test",
    )


def zero_coefficients() -> CoefficientSet:
    """All kernels zero; every path equals the initial curve phi = 1."""
    zero = lambda t, s, x: np.zeros_like(np.asarray(x, dtype=np.float64))
    return CoefficientSet(
        drift=zero,
        diffusion=zero,
        jump=None,
        initial=_ones_like,
        measure=LevyMeasure.empty(),
        growth_constant=0.0,
        name="zero",
    )


def coefficient_catalogue(name: str, c: float = 0.1, rate: float = 2.0) -> CoefficientSet:
    """Named models reachable from run configurations."""
    if name == "example":
        return example_coefficients(c, rate)
    if name == "deterministic_ode":
        return deterministic_ode_coefficients()
    if name == "linear_test":
        return linear_test_coefficients(c, rate)
    if name == "zero":
        return zero_coefficients()
    raise ConfigurationError(
        f"unknown coefficient set {name!r}; expected example, deterministic_ode, linear_test or zero"
    )


def catalogue_scale(name: str, c: float = 0.1, rate: float = 2.0) -> float:
    """Analytic scale for the linear modulus of a catalogue set.

    All catalogue kernels are linear in x, so the squared-difference bound
    coincides with the linear-growth constant.
    """
    coeffs = coefficient_catalogue(name, c, rate)
    return float(coeffs.growth_constant)


# --- samplers -----------------------------------------------------------


def domain_sampler(horizon: float, x_bound: float = 10.0, seed: int = 0) -> Callable:
    """Draw triples (t, s, x) with 0 <= s <= t <= horizon and |x| <= x_bound."""
    rng = np.random.default_rng(seed)

    def draw(n: int):
        t = horizon * rng.random(n)
        s = t * rng.random(n)
        x = x_bound * (2.0 * rng.random(n) - 1.0)
        return t, s, x

    return draw


def pair_sampler(horizon: float, x_bound: float = 10.0, seed: int = 0) -> Callable:
    """Draw quadruples (t, s, x, y) on the same domain as ``domain_sampler``."""
    rng = np.random.default_rng(seed)

    def draw(n: int):
        t = horizon * rng.random(n)
        s = t * rng.random(n)
        x = x_bound * (2.0 * rng.random(n) - 1.0)
        y = x_bound * (2.0 * rng.random(n) - 1.0)
        return t, s, x, y

    return draw


def _sampled(values, n: int) -> np.ndarray:
    return np.broadcast_to(np.asarray(values, dtype=np.float64), (n,))


def _jump_square_integral(coeffs: CoefficientSet, t, s, x, y=None) -> np.ndarray:
    """int |h(t,s,x,xi) - h(t,s,y,xi)|^2 nu(dxi) per sample (y=None: plain |h|^2)."""
    n = len(t)
    if coeffs.jump is None or coeffs.measure.total_mass == 0.0:
        return np.zeros(n)
    out = np.empty(n)
    for k in range(n):
        tk, sk, xk = float(t[k]), float(s[k]), float(x[k])
        if y is None:
            fn = lambda xi: float(coeffs.jump(tk, sk, xk, xi)) ** 2
        else:
            yk = float(y[k])
            fn = lambda xi: (float(coeffs.jump(tk, sk, xk, xi)) - float(coeffs.jump(tk, sk, yk, xi))) ** 2
        out[k] = coeffs.measure.integrate(fn, rel_tol=MARK_INTEGRAL_REL_TOL)
    return out


# --- linear-growth audit -------------------------------------------------


@dataclass(frozen=True)
class GrowthAudit:
    """Outcome of a linear-growth audit over one sample set."""

    estimated_constant: float
    supplied_constant: float | None
    worst_point: tuple[float, float, float]
    bad_points: tuple
    n_samples: int
    passed: bool


def audit_linear_growth(coeffs: CoefficientSet, sampler: Callable, samples: int = 1000) -> GrowthAudit:
    """Estimate the best C with max(|f|^2, |g|^2, int |h|^2 nu) <= C (1 + |x|^2).

    The estimate is the worst sampled ratio, so it can only grow as samples
    are added.  Any non-finite kernel value fails the audit and is reported
    with the offending (t, s, x).
    """
    if samples < 1:
        raise ConfigurationError("samples must be at least 1")
    t, s, x = sampler(samples)
    t, s, x = (np.asarray(a, dtype=np.float64) for a in (t, s, x))
    fsq = _sampled(coeffs.drift(t, s, x), samples) ** 2
    gsq = _sampled(coeffs.diffusion(t, s, x), samples) ** 2
    hsq = _jump_square_integral(coeffs, t, s, x)
    numer = np.maximum(np.maximum(fsq, gsq), hsq)
    ratios = numer / (1.0 + x * x)
    finite = np.isfinite(ratios)
    bad = tuple((float(t[k]), float(s[k]), float(x[k])) for k in np.nonzero(~finite)[0])
    if not finite.any():
        return GrowthAudit(math.nan, coeffs.growth_constant, bad[0], bad, samples, False)
    worst = int(np.nanargmax(np.where(finite, ratios, -math.inf)))
    estimate = float(ratios[worst])
    supplied = coeffs.growth_constant
    passed = not bad and (supplied is None or estimate <= float(supplied) + AUDIT_SLACK)
    return GrowthAudit(
        estimated_constant=estimate,
        supplied_constant=supplied,
        worst_point=(float(t[worst]), float(s[worst]), float(x[worst])),
        bad_points=bad,
        n_samples=samples,
        passed=passed,
    )


# --- modulus audit -------------------------------------------------------


@dataclass(frozen=True)
class OsgoodProbe:
    """Decade ladder of int_eps^1 du / kappa(u); divergence shows as
    increments that refuse to die out as eps shrinks."""

    epsilons: tuple
    values: tuple
    divergent: bool


def osgood_ladder(modulus: Modulus, decades: int = 11) -> OsgoodProbe:
    """Evaluate int_eps^1 du / kappa(u) for eps = 1e-2 ... 1e-(decades+1).

    The integral runs in log coordinates (u = e^w) so steep integrands stay
    tame.  The ladder is judged divergent when the values keep increasing
    and the final decade still contributes at least a tenth of the first.
    """
    epsilons = tuple(10.0 ** (-(k + 2)) for k in range(decades))

    def integrand(w: float) -> float:
        u = math.exp(w)
        k = float(modulus.kappa(u))
        if not k > 0.0:
            raise ConfigurationError(f"kappa({u!r}) = {k!r} is not positive; ladder undefined")
        return u / k

    values = []
    for eps in epsilons:
        val, _ = quad(integrand, math.log(eps), 0.0, epsabs=0.0, epsrel=1e-10, limit=400)
        values.append(val)
    increments = np.diff([0.0] + values)
    increasing = bool(np.all(increments > 0.0))
    divergent = increasing and increments[-1] >= 0.1 * increments[1]
    return OsgoodProbe(epsilons=epsilons, values=tuple(values), divergent=bool(divergent))


@dataclass(frozen=True)
class ModulusAudit:
    """Outcome of a continuity-modulus audit over one sample set.

    ``worst_slack`` is the largest excess of a squared kernel difference over
    scale * kappa(|x - y|^2) after subtracting the certified quadrature error
    of the jump term; the audit passes when it stays within AUDIT_SLACK.
    """

    worst_slack: float
    worst_point: tuple
    kappa_zero_ok: bool
    positive_ok: bool
    monotone_ok: bool
    concave_ok: bool
    osgood: OsgoodProbe
    bad_points: tuple
    n_samples: int
    passed: bool


def _kappa_self_checks(modulus: Modulus, u_values: np.ndarray) -> tuple[bool, bool, bool, bool]:
    kappa = modulus.kappa
    zero_ok = abs(float(kappa(0.0))) <= AUDIT_SLACK
    grid = np.unique(np.concatenate([np.geomspace(1e-12, 1.0, 49), u_values[u_values > 0.0]]))
    vals = np.asarray(kappa(grid), dtype=np.float64)
    positive_ok = bool(np.all(vals > 0.0)) and bool(np.all(np.isfinite(vals)))
    monotone_ok = bool(np.all(np.diff(vals) >= -AUDIT_SLACK))
    mids = np.asarray(kappa(0.5 * (grid[:-1] + grid[1:])), dtype=np.float64)
    concave_ok = bool(np.all(mids + AUDIT_SLACK >= 0.5 * (vals[:-1] + vals[1:])))
    # concavity also across long ranges, not just neighbours
    lo, hi = grid[0], grid[-1]
    k_lo, k_hi = float(kappa(lo)), float(kappa(hi))
    chords = k_lo + (grid - lo) * (k_hi - k_lo) / (hi - lo)
    concave_ok = concave_ok and bool(np.all(vals + AUDIT_SLACK >= chords))
    return zero_ok, positive_ok, monotone_ok, concave_ok


def audit_modulus(coeffs: CoefficientSet, modulus: Modulus, sampler: Callable, samples: int = 1000) -> ModulusAudit:
    """Certify squared kernel differences against scale * kappa(|x - y|^2).

    Also probes kappa's own contract and the declared Osgood divergence.
    """
    if samples < 1:
        raise ConfigurationError("samples must be at least 1")
    t, s, x, y = sampler(samples)
    t, s, x, y = (np.asarray(a, dtype=np.float64) for a in (t, s, x, y))
    fdiff = (_sampled(coeffs.drift(t, s, x), samples) - _sampled(coeffs.drift(t, s, y), samples)) ** 2
    gdiff = (_sampled(coeffs.diffusion(t, s, x), samples) - _sampled(coeffs.diffusion(t, s, y), samples)) ** 2
    hdiff = _jump_square_integral(coeffs, t, s, x, y)
    lhs = np.maximum(np.maximum(fdiff, gdiff), hdiff)
    d = (x - y) ** 2
    rhs = modulus.scale * np.asarray(modulus.kappa(d), dtype=np.float64)
    finite = np.isfinite(lhs) & np.isfinite(rhs)
    bad = tuple((float(t[k]), float(s[k]), float(x[k]), float(y[k])) for k in np.nonzero(~finite)[0])
    # the jump term is a quadrature estimate with certified relative error
    # MARK_INTEGRAL_REL_TOL; an excess smaller than that is indistinguishable
    # from integration rounding, so it is not counted as slack
    slack = np.where(finite, lhs - rhs - MARK_INTEGRAL_REL_TOL * np.abs(hdiff), -math.inf)
    worst = int(np.argmax(slack))
    zero_ok, positive_ok, monotone_ok, concave_ok = _kappa_self_checks(modulus, d)
    probe = osgood_ladder(modulus)
    inequality_ok = not bad and bool(np.all(slack[finite] <= AUDIT_SLACK))
    passed = (
        inequality_ok
        and zero_ok
        and positive_ok
        and monotone_ok
        and concave_ok
        and modulus.osgood_divergent
        and probe.divergent
    )
    return ModulusAudit(
        worst_slack=float(slack[worst]),
        worst_point=(float(t[worst]), float(s[worst]), float(x[worst]), float(y[worst])),
        kappa_zero_ok=zero_ok,
        positive_ok=positive_ok,
        monotone_ok=monotone_ok,
        concave_ok=concave_ok,
        osgood=probe,
        bad_points=bad,
        n_samples=samples,
        passed=bool(passed),
    )

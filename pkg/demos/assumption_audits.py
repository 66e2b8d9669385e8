#!/usr/bin/env python3
"""Audit the structural assumptions behind the solver's guarantees.

The solver's moment bounds assume linear growth of the kernels and a
concave continuity modulus with a divergent Osgood integral.  Audits
sample the domain and certify those inequalities on the samples, report
the worst ratio seen, and probe the modulus contract numerically,
including a deliberately failing convex modulus.
"""

from svie import (
    audit_linear_growth,
    audit_modulus,
    domain_sampler,
    example_coefficients,
    linear_modulus,
    log_modulus,
    modulus_catalogue,
    osgood_ladder,
    pair_sampler,
    scale_for_log_modulus,
)

HORIZON = 0.5
X_BOUND = 10.0
SAMPLES = 1000

coeffs = example_coefficients(0.1, rate=2.0)

print("== linear growth: max(|f|^2, |g|^2, int |h|^2 nu) <= C (1 + |x|^2) ==")
audit = audit_linear_growth(coeffs, domain_sampler(HORIZON, X_BOUND, seed=1), SAMPLES)
print(f"  estimated C from {audit.n_samples} samples: {audit.estimated_constant:.4f}")
print(f"  supplied  C                 : {audit.supplied_constant:.4f}")
print(f"  worst sample (t, s, x) = {tuple(round(v, 4) for v in audit.worst_point)}")
print(f"  pass: {audit.passed}")

print("\n== continuity modulus: kernel differences under scale * kappa(|x - y|^2) ==")
mod = linear_modulus(coeffs.growth_constant)
audit = audit_modulus(coeffs, mod, pair_sampler(HORIZON, X_BOUND, seed=2), SAMPLES)
print(f"  linear kappa: worst slack {audit.worst_slack:.3e}, pass {audit.passed}")

log_scale = scale_for_log_modulus(coeffs.growth_constant, (2.0 * X_BOUND) ** 2)
audit = audit_modulus(coeffs, log_modulus(log_scale), pair_sampler(HORIZON, X_BOUND, seed=2), SAMPLES)
print(f"  log kappa (scale {log_scale:.1f}): worst slack {audit.worst_slack:.3e}, pass {audit.passed}")

convex = modulus_catalogue("quadratic", 1e6)
audit = audit_modulus(coeffs, convex, pair_sampler(HORIZON, X_BOUND, seed=2), SAMPLES)
print(f"  quadratic kappa: concave {audit.concave_ok}, pass {audit.passed}  (convexity is the failure)")

print("\n== Osgood ladder: int_eps^1 du / kappa(u) over decades eps = 1e-2 .. 1e-12 ==")
for name in ("linear", "log"):
    probe = osgood_ladder(modulus_catalogue(name, 1.0))
    tail = ", ".join(f"{v:.2f}" for v in probe.values[-3:])
    print(f"  {name:6s}: last three ladder values {tail}  divergent {probe.divergent}")

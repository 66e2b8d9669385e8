"""Simulation and verification toolkit for jump-diffusion Volterra equations.

The state solves an integral equation whose drift, diffusion, and jump
kernels may look back over the whole past, so paths are built row by row
on a time grid and refined by successive approximation.  The analysis
layer checks the classical inequalities that make that construction
trustworthy: linear-growth and continuity-modulus audits, Doob maximal
bounds for the driving martingales, a uniform second-moment envelope,
and the comparison argument that squeezes the approximation gap to zero.
"""

from .analysis import (
    DoobReport,
    GapReport,
    MajorantSequence,
    MartingaleEnsemble,
    MomentReport,
    bihari_bound,
    bihari_integral,
    brownian_martingale_ensemble,
    compensated_jump_ensemble,
    doob_check,
    majorant_recursion,
    moment_check,
    picard_gap,
    uniform_moment_bound,
)
from .coefficients import (
    AUDIT_SLACK,
    CoefficientSet,
    GrowthAudit,
    Modulus,
    ModulusAudit,
    OsgoodProbe,
    audit_linear_growth,
    audit_modulus,
    coefficient_catalogue,
    domain_sampler,
    example_coefficients,
    linear_modulus,
    log_modulus,
    modulus_catalogue,
    osgood_ladder,
    pair_sampler,
    quadratic_modulus,
    scale_for_log_modulus,
)
from .errors import (
    AnalysisError,
    ConfigParseError,
    ConfigurationError,
    DomainError,
    ExplosionError,
    NumericalError,
    SvieError,
)
from .grid_noise import (
    LevyMeasure,
    NoisePath,
    TimeGrid,
    build_grid,
    compensator_integral,
    sample_noise_ensemble,
    sample_noise_path,
)
from .solver import (
    DiscretePath,
    Ensemble,
    PicardRun,
    direct_recursion,
    ensemble_simulate,
    picard_iterates,
    picard_solve,
    picard_step,
)

__version__ = "0.1.0"

__all__ = [
    "AUDIT_SLACK",
    "AnalysisError",
    "CoefficientSet",
    "ConfigParseError",
    "ConfigurationError",
    "DiscretePath",
    "DomainError",
    "DoobReport",
    "Ensemble",
    "ExplosionError",
    "GapReport",
    "GrowthAudit",
    "LevyMeasure",
    "MajorantSequence",
    "MartingaleEnsemble",
    "Modulus",
    "ModulusAudit",
    "MomentReport",
    "NoisePath",
    "NumericalError",
    "OsgoodProbe",
    "PicardRun",
    "SvieError",
    "TimeGrid",
    "audit_linear_growth",
    "audit_modulus",
    "bihari_bound",
    "bihari_integral",
    "brownian_martingale_ensemble",
    "build_grid",
    "coefficient_catalogue",
    "compensated_jump_ensemble",
    "compensator_integral",
    "direct_recursion",
    "doob_check",
    "domain_sampler",
    "ensemble_simulate",
    "example_coefficients",
    "linear_modulus",
    "log_modulus",
    "majorant_recursion",
    "modulus_catalogue",
    "moment_check",
    "osgood_ladder",
    "pair_sampler",
    "picard_gap",
    "picard_iterates",
    "picard_solve",
    "picard_step",
    "quadratic_modulus",
    "sample_noise_ensemble",
    "sample_noise_path",
    "scale_for_log_modulus",
    "uniform_moment_bound",
]

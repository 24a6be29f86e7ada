"""Numerical toolkit for the joint law of the hitting time and hitting
place of d-dimensional Brownian motion on a sphere, with or without
constant drift, verified against closed forms and Monte Carlo."""

from .errors import InversionError, McConfigError, SpherehitError, TruncationError
from .fpt import (
    DEFAULT_INVERSION,
    Geometry,
    InversionControl,
    fpt_cdf,
    fpt_density,
    fpt_laplace,
    fpt_tail,
    fpt_tail_asymptotic,
    fpt_tail_bound,
    h_exp_tail,
    hitting_mass,
    kappa,
    l_const,
)
from .jointdist import (
    Drift,
    JointQuery,
    band_probability,
    drift_band_probability,
    drift_joint_density,
    drift_joint_laplace,
    drift_tail_asymptotic,
    hitting_place_density,
    joint_density,
    joint_laplace,
    place_kernel,
    tail_asymptotic,
    tail_probability,
)
from .mcverify import (
    EstimateResult,
    HitSample,
    McConfig,
    estimate,
    estimate_laplace_functional,
    simulate_hit,
)
from .specfun import (
    FULL_BAND,
    Band,
    Order,
    SeriesControl,
    band_measure,
    bessel_i,
    bessel_k,
    chebyshev_t,
    exp_poly_band_integral,
    gegenbauer,
    gegenbauer_at_one,
    gegenbauer_growth_constant,
    poly_band_integral,
    projected_transition_density,
    sphere_exp_average,
    speed_weight,
)

__version__ = "0.1.0"

__all__ = [
    "Band",
    "DEFAULT_INVERSION",
    "Drift",
    "EstimateResult",
    "FULL_BAND",
    "Geometry",
    "HitSample",
    "InversionControl",
    "InversionError",
    "JointQuery",
    "McConfig",
    "McConfigError",
    "Order",
    "SeriesControl",
    "SpherehitError",
    "TruncationError",
    "band_measure",
    "band_probability",
    "bessel_i",
    "bessel_k",
    "chebyshev_t",
    "drift_band_probability",
    "drift_joint_density",
    "drift_joint_laplace",
    "drift_tail_asymptotic",
    "estimate",
    "estimate_laplace_functional",
    "exp_poly_band_integral",
    "fpt_cdf",
    "fpt_density",
    "fpt_laplace",
    "fpt_tail",
    "fpt_tail_asymptotic",
    "fpt_tail_bound",
    "gegenbauer",
    "gegenbauer_at_one",
    "gegenbauer_growth_constant",
    "h_exp_tail",
    "hitting_mass",
    "hitting_place_density",
    "joint_density",
    "joint_laplace",
    "kappa",
    "l_const",
    "place_kernel",
    "poly_band_integral",
    "projected_transition_density",
    "simulate_hit",
    "speed_weight",
    "sphere_exp_average",
    "tail_asymptotic",
    "tail_probability",
]

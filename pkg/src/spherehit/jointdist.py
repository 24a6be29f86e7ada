"""Joint law of the hitting time and hitting place on a sphere.

Every quantity is a zonal series: the n-th term couples a weight, the
geometric factor (a/r)^n, a hitting-time factor at Bessel order n (circle)
or n + nu (d >= 3), and a surface integral of the degree-n zonal
polynomial.  The drifted variants tilt the same series through the
Cameron-Martin change of measure.

Truncation is driven by analytic term bounds: |P_n| <= P_n(1), the
hitting-time factors are capped by the total mass (and by the tail bound
r^{2 mu}/(2^mu Gamma(mu+1) t^mu) where it applies), and the geometric
factor makes the bounds summable in both regimes.
"""

import math
from dataclasses import dataclass
from typing import Optional

from .errors import TruncationError
from .fpt import (
    DEFAULT_INVERSION,
    Geometry,
    fpt_cdf,
    fpt_density,
    fpt_laplace,
    fpt_tail,
    fpt_tail_asymptotic,
    fpt_tail_bound,
    h_exp_tail,
    hitting_mass,
    l_const,
)
from .specfun import (
    FULL_BAND,
    Band,
    DEFAULT_SERIES,
    band_measure,
    exp_poly_band_integral,
    poly_band_integral,
    tilted_band_integral_block,
)

__all__ = [
    "Drift",
    "JointQuery",
    "place_kernel",
    "joint_laplace",
    "joint_density",
    "hitting_place_density",
    "band_probability",
    "tail_probability",
    "tail_asymptotic",
    "drift_joint_laplace",
    "drift_joint_density",
    "drift_band_probability",
    "drift_tail_asymptotic",
]


@dataclass(frozen=True)
class Drift:
    """Constant drift vector, reduced to coordinates adapted to the start axis.

    v1 is the component along the start axis, v_perp the magnitude of the
    orthogonal part (taken to lie along the second coordinate).
    """

    v1: float = 0.0
    v_perp: float = 0.0

    def __post_init__(self):
        if self.v_perp < 0:
            raise ValueError(f"v_perp must be >= 0, got {self.v_perp}")

    @property
    def speed(self):
        return math.hypot(self.v1, self.v_perp)


@dataclass(frozen=True)
class JointQuery:
    """A band of the sphere crossed with a time window, plus optional drift."""

    geometry: Geometry
    t_interval: tuple
    band: Band
    drift: Optional[Drift] = None

    def __post_init__(self):
        t1, t2 = self.t_interval
        if not (0.0 <= t1 < t2):
            raise ValueError(f"need 0 <= t1 < t2, got {self.t_interval}")


def place_kernel(d, s, x):
    """Classical harmonic-measure density (1 - s^2)/(1 + s^2 - 2 s x)^{d/2}
    on the sphere, relative to the uniform probability measure, 0 < s < 1.

    This closed form is the independent oracle for the series in
    hitting_place_density.
    """
    if not 0.0 <= s < 1.0:
        raise ValueError(f"need 0 <= s < 1, got {s}")
    if abs(x) > 1.0:
        raise ValueError(f"argument must lie in [-1, 1], got {x}")
    return (1.0 - s * s) / (1.0 + s * s - 2.0 * s * x) ** (0.5 * d)


def _zonal_values(d, nu, x):
    """Yield P_0(x), P_1(x), ... incrementally (Chebyshev or Gegenbauer)."""
    yield 1.0
    if d == 2:
        prev, cur = 1.0, x
        while True:
            yield cur
            prev, cur = cur, 2.0 * x * cur - prev
    else:
        prev, cur = 1.0, 2.0 * nu * x
        n = 1
        while True:
            yield cur
            n += 1
            prev, cur = cur, (2.0 * (n - 1 + nu) * x * cur - (n - 2 + 2.0 * nu) * prev) / n


def _run_series(geom, ctrl, time_val, space_val, time_env=None, space_env=1.0,
                op_name="series"):
    """Shared summation loop.

    time_env(n, order) supplies a rigorous cap on |time_val|; when None the
    computed |time_val| itself drives the stop rule (two consecutive terms
    below tolerance), which is used for pointwise densities where no closed
    cap exists.  Returns (value, info).
    """
    d, nu = geom.d, geom.nu
    s = geom.a / geom.r
    terms = []
    n = 0
    geo = 1.0
    polysup = 1.0
    env_prev = math.inf
    env = math.inf
    small_run = 0
    while True:
        weight = (1.0 if n == 0 else 2.0) if d == 2 else (n + nu) / nu
        order = float(n) if d == 2 else n + nu
        if time_env is not None:
            env = weight * geo * polysup * time_env(n, order) * space_env
            if n >= 1 and env < ctrl.abs_tol and env <= env_prev:
                break
            terms.append(weight * geo * time_val(n, order) * space_val(n))
        else:
            tval = time_val(n, order)
            env = weight * geo * polysup * abs(tval) * space_env
            terms.append(weight * geo * tval * space_val(n))
            if n >= 1 and env < ctrl.abs_tol:
                small_run += 1
                if small_run >= 2:
                    break
            else:
                small_run = 0
        if n >= ctrl.n_max:
            raise TruncationError(
                f"{op_name} not converged: term bound {env:.3e} at n={n} "
                f"exceeds abs_tol={ctrl.abs_tol}",
                n_terms=n, residual=env,
            )
        env_prev = env
        geo *= s
        if d != 2:
            polysup *= (n + 2.0 * nu) / (n + 1.0)
        n += 1
    ratio = env / env_prev if env_prev not in (0.0, math.inf) else 0.5
    residual = env / (1.0 - min(ratio, 0.99))
    return math.fsum(terms), {"n_terms": len(terms), "residual_bound": residual}


def _weight_order(geom, n):
    if geom.d == 2:
        return (1.0 if n == 0 else 2.0), float(n)
    return (n + geom.nu) / geom.nu, n + geom.nu


def _env_scan(geom, ctrl, time_env, space_env, op_name):
    """Term count needed so the analytic bound drops below abs_tol.

    Same stop rule as _run_series; returns (n_stop, residual_bound) where
    degrees 0 .. n_stop-1 are retained.
    """
    s = geom.a / geom.r
    n = 0
    geo = 1.0
    polysup = 1.0
    env_prev = math.inf
    while True:
        weight, order = _weight_order(geom, n)
        env = weight * geo * polysup * time_env(n, order) * space_env
        if n >= 1 and env < ctrl.abs_tol and env <= env_prev:
            ratio = env / env_prev if env_prev not in (0.0, math.inf) else 0.5
            return n, env / (1.0 - min(ratio, 0.99))
        if n >= ctrl.n_max:
            raise TruncationError(
                f"{op_name} not converged: term bound {env:.3e} at n={n} "
                f"exceeds abs_tol={ctrl.abs_tol}",
                n_terms=n, residual=env,
            )
        env_prev = env
        geo *= s
        if geom.d != 2:
            polysup *= (n + 2.0 * geom.nu) / (n + 1.0)
        n += 1


def joint_laplace(geom, lam, u_axis, u_perp, ctrl=None, full_output=False):
    """E[e^{-lam sigma} e^{<u, B_sigma>}; sigma < inf] for the hitting of the
    sphere, with u = (u_axis, u_perp, 0, ...) in axis-adapted coordinates.

    At u = 0 the surface integrals of every degree n >= 1 vanish and the
    series collapses to the plain hitting-time transform.
    """
    if lam <= 0:
        raise ValueError(f"rate must be > 0, got {lam}")
    if u_perp < 0:
        raise ValueError(f"u_perp must be >= 0, got {u_perp}")
    ctrl = ctrl or DEFAULT_SERIES
    a, r = geom.a, geom.r
    c1 = r * u_axis
    cp = r * u_perp
    tilt_cap = math.exp(r * math.hypot(u_axis, u_perp))

    def time_env(n, order):
        return 1.0 if geom.interior else hitting_mass(order, a, r)

    n_stop, residual = _env_scan(geom, ctrl, time_env, tilt_cap, "joint_laplace")
    space = tilted_band_integral_block(geom.d, FULL_BAND, c1, cp, n_stop)
    terms = []
    geo = 1.0
    for n in range(n_stop):
        weight, order = _weight_order(geom, n)
        if space[n] != 0.0:
            terms.append(weight * geo * fpt_laplace(order, a, r, lam) * space[n])
        geo *= a / r
    val = math.fsum(terms)
    info = {"n_terms": n_stop, "residual_bound": residual}
    return (val, info) if full_output else val


def joint_density(geom, t, x, ctrl=None, inv=None, full_output=False):
    """Joint density psi(t, x) of (hitting time, normalized first coordinate
    of the hitting place), relative to dt x uniform surface measure.

    The time factors are hitting densities obtained by Laplace inversion, so
    small negative noise within tolerance can appear near the edges.
    """
    if t <= 0:
        raise ValueError(f"time must be > 0, got {t}")
    if abs(x) > 1.0:
        raise ValueError(f"argument must lie in [-1, 1], got {x}")
    ctrl = ctrl or DEFAULT_SERIES
    inv = inv or DEFAULT_INVERSION
    gen = _zonal_values(geom.d, geom.nu, x)

    def time_val(n, order):
        return fpt_density(order, geom.a, geom.r, t, inv)

    def space_val(n):
        return next(gen)

    val, info = _run_series(geom, ctrl, time_val, space_val, None,
                            op_name="joint_density")
    return (val, info) if full_output else val


def hitting_place_density(geom, x, ctrl=None, full_output=False):
    """Density of the hitting place against the uniform surface measure.

    Series of the zonal polynomials with exact total-mass time factors; its
    closed form is place_kernel at s = a/r (inside) or the reflected kernel
    scaled by the hitting probability (outside).
    """
    if abs(x) > 1.0:
        raise ValueError(f"argument must lie in [-1, 1], got {x}")
    ctrl = ctrl or DEFAULT_SERIES
    gen = _zonal_values(geom.d, geom.nu, x)

    def time_val(n, order):
        return hitting_mass(order, geom.a, geom.r)

    def space_val(n):
        return next(gen)

    val, info = _run_series(geom, ctrl, time_val, space_val, time_val,
                            op_name="hitting_place_density")
    return (val, info) if full_output else val


def band_probability(query, ctrl=None, inv=None, full_output=False):
    """P(hitting time in [t1, t2], hitting place in the band), driftless.

    Time factors are distribution-function increments at shifted orders;
    space factors are band integrals of the zonal polynomials.
    """
    if query.drift is not None and query.drift.speed > 0.0:
        raise ValueError("band_probability is driftless; use drift_band_probability")
    ctrl = ctrl or DEFAULT_SERIES
    inv = inv or DEFAULT_INVERSION
    geom = query.geometry
    t1, t2 = query.t_interval
    if query.band.degenerate:
        return (0.0, {"n_terms": 0, "residual_bound": 0.0}) if full_output else 0.0
    bm = band_measure(geom.d, query.band)

    def time_val(n, order):
        hi = fpt_cdf(order, geom.a, geom.r, t2, inv)
        lo = 0.0 if t1 == 0.0 else fpt_cdf(order, geom.a, geom.r, t1, inv)
        return max(hi - lo, 0.0)

    def time_env(n, order):
        cap = hitting_mass(order, geom.a, geom.r)
        if t1 > 0.0 and order > 0.0:
            cap = min(cap, fpt_tail_bound(order, geom.r, t1))
        return cap

    def space_val(n):
        return poly_band_integral(geom.d, n, query.band)

    val, info = _run_series(geom, ctrl, time_val, space_val, time_env, bm,
                            op_name="band_probability")
    val = min(max(val, 0.0), 1.0)
    return (val, info) if full_output else val


def tail_probability(query, ctrl=None, inv=None, full_output=False):
    """P(t < hitting time < inf, hitting place in the band) from outside.

    Base term: full hitting tail times the band mass; corrections carry the
    degree >= 1 band integrals, each bounded through the uniform tail bound
    exactly as in the large-time analysis.
    """
    if query.drift is not None and query.drift.speed > 0.0:
        raise ValueError("tail_probability is driftless")
    geom = query.geometry
    if geom.interior:
        raise ValueError("tail asymptotics apply to exterior starts (a > r)")
    t1, t2 = query.t_interval
    if not math.isinf(t2):
        raise ValueError("tail queries use t_interval = [t, inf)")
    if t1 <= 0:
        raise ValueError(f"need t > 0, got {t1}")
    if query.band.degenerate:
        return (0.0, {"n_terms": 0, "residual_bound": 0.0}) if full_output else 0.0
    ctrl = ctrl or DEFAULT_SERIES
    inv = inv or DEFAULT_INVERSION
    bm = band_measure(geom.d, query.band)

    def time_val(n, order):
        return fpt_tail(order, geom.a, geom.r, t1, inv)

    def time_env(n, order):
        cap = hitting_mass(order, geom.a, geom.r)
        if order > 0.0:
            cap = min(cap, fpt_tail_bound(order, geom.r, t1))
        return cap

    def space_val(n):
        return poly_band_integral(geom.d, n, query.band)

    val, info = _run_series(geom, ctrl, time_val, space_val, time_env, bm,
                            op_name="tail_probability")
    val = min(max(val, 0.0), geom.hit_probability)
    return (val, info) if full_output else val


def tail_asymptotic(query):
    """Leading-order tail: the hitting-tail asymptote times the band mass."""
    geom = query.geometry
    if geom.interior:
        raise ValueError("tail asymptotics apply to exterior starts (a > r)")
    t1, t2 = query.t_interval
    if not math.isinf(t2):
        raise ValueError("tail queries use t_interval = [t, inf)")
    return fpt_tail_asymptotic(geom.nu, geom.a, geom.r, t1) * band_measure(geom.d, query.band)


def drift_joint_laplace(geom, drift, lam, u_axis, u_perp, ctrl=None, angle=0.0,
                        full_output=False):
    """Joint transform for the drifted motion via the Cameron-Martin tilt:

        e^{-a v1} x joint_laplace at rate lam + |v|^2/2 and exponent u + v.

    angle is the planar angle between the orthogonal parts of u and v
    (only the relative angle matters; 0 means aligned).
    """
    if lam <= 0:
        raise ValueError(f"rate must be > 0, got {lam}")
    if u_perp < 0:
        raise ValueError(f"u_perp must be >= 0, got {u_perp}")
    shifted = lam + 0.5 * drift.speed ** 2
    perp = math.sqrt(
        u_perp ** 2 + drift.v_perp ** 2 + 2.0 * u_perp * drift.v_perp * math.cos(angle)
    )
    out = joint_laplace(geom, shifted, u_axis + drift.v1, perp, ctrl,
                        full_output=full_output)
    scale = math.exp(-geom.a * drift.v1)
    if full_output:
        return scale * out[0], out[1]
    return scale * out


def drift_joint_density(geom, drift, t, x, ctrl=None, inv=None):
    """Drifted joint density, split into the part determined by (t, x) and
    the exponential tilt over the residual angle.

    Returns (axial_factor, (c1, c2)) with axial_factor = psi(t, x)
    e^{-a v1 - |v|^2 t/2} and tilt e^{c1 + c2 cos(phi)}, c1 = r v1 x and
    c2 = r v_perp sqrt(1 - x^2).  Averaging the tilt over the residual
    sphere multiplies the axial factor by e^{c1} Lambda_{d-1}(c2).
    """
    psi = joint_density(geom, t, x, ctrl, inv)
    axial = psi * math.exp(-geom.a * drift.v1 - 0.5 * drift.speed ** 2 * t)
    c1 = geom.r * drift.v1 * x
    c2 = geom.r * drift.v_perp * math.sqrt(max(0.0, 1.0 - x * x))
    return axial, (c1, c2)


def drift_band_probability(query, ctrl=None, inv=None, full_output=False):
    """P(drifted hitting time in [t1, t2], hitting place in the band).

    Time factors are increments of the exponentially weighted tail integral
    H at shifted orders; space factors are drift-tilted band integrals.
    """
    geom = query.geometry
    drift = query.drift or Drift()
    if drift.speed == 0.0:
        plain = JointQuery(geom, query.t_interval, query.band, None)
        return band_probability(plain, ctrl, inv, full_output)
    ctrl = ctrl or DEFAULT_SERIES
    inv = inv or DEFAULT_INVERSION
    t1, t2 = query.t_interval
    if query.band.degenerate:
        return (0.0, {"n_terms": 0, "residual_bound": 0.0}) if full_output else 0.0
    alpha = 0.5 * drift.speed ** 2
    c1 = geom.r * drift.v1
    cp = geom.r * drift.v_perp
    tilt_cap = math.exp(geom.r * drift.speed) * band_measure(geom.d, query.band)

    def h_at(order, t):
        if math.isinf(t):
            return 0.0
        return h_exp_tail(order, geom.a, geom.r, drift.speed, t, inv)

    def time_env(n, order):
        return fpt_laplace(order, geom.a, geom.r, alpha)

    n_stop, residual = _env_scan(geom, ctrl, time_env, tilt_cap,
                                 "drift_band_probability")
    space = tilted_band_integral_block(geom.d, query.band, c1, cp, n_stop)
    terms = []
    geo = 1.0
    for n in range(n_stop):
        weight, order = _weight_order(geom, n)
        if space[n] != 0.0:
            delta = max(h_at(order, t1) - h_at(order, t2), 0.0)
            terms.append(weight * geo * delta * space[n])
        geo *= geom.a / geom.r
    val = math.fsum(terms)
    info = {"n_terms": n_stop, "residual_bound": residual}
    val = min(max(val * math.exp(-geom.a * drift.v1), 0.0), 1.0)
    return (val, info) if full_output else val


def drift_tail_asymptotic(query):
    """Leading-order drifted tail:

        d = 2:  2 log(a/r) e^{-a v1} T(A) e^{-|v|^2 t/2} / (t (log t)^2)
        d >= 3: (2 L(nu)/|v|^2) e^{-a v1} T(A) t^{-nu-1} e^{-|v|^2 t/2}

    where T(A) is the drift-tilted band integral of degree 0.
    """
    geom = query.geometry
    drift = query.drift
    if geom.interior:
        raise ValueError("tail asymptotics apply to exterior starts (a > r)")
    if drift is None or drift.speed == 0.0:
        raise ValueError("drifted asymptotics need |v| > 0")
    t1, t2 = query.t_interval
    if not math.isinf(t2):
        raise ValueError("tail queries use t_interval = [t, inf)")
    if t1 <= 1.0:
        raise ValueError(f"need t > 1, got {t1}")
    tilt = exp_poly_band_integral(
        geom.d, 0, query.band, geom.r * drift.v1, geom.r * drift.v_perp
    )
    envelope = math.exp(-geom.a * drift.v1) * tilt * math.exp(-0.5 * drift.speed ** 2 * t1)
    if geom.d == 2:
        return 2.0 * math.log(geom.a / geom.r) * envelope / (t1 * math.log(t1) ** 2)
    lc = l_const(geom.nu, geom.a, geom.r)
    return (2.0 * lc / drift.speed ** 2) * envelope * t1 ** (-geom.nu - 1.0)

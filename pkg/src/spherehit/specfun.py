"""Special functions and spherical integration primitives.

Everything here is a pure function of its arguments.  The module covers
modified Bessel functions, the zonal polynomials (Chebyshev for the
circle, Gegenbauer for higher spheres), exponential averages over
spheres, and weighted integrals over bands {z : z1/r in [x_lo, x_hi]}
of a sphere.  These are the building blocks for every series evaluated
elsewhere in the package.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy import special as sps

from .errors import TruncationError

__all__ = [
    "Order",
    "Band",
    "FULL_BAND",
    "SeriesControl",
    "bessel_i",
    "bessel_k",
    "gegenbauer",
    "gegenbauer_at_one",
    "gegenbauer_growth_constant",
    "chebyshev_t",
    "sphere_exp_average",
    "band_measure",
    "poly_band_integral",
    "exp_poly_band_integral",
    "projected_transition_density",
    "speed_weight",
]

# Quadrature targets for band integrals.  The cos-theta substitution makes
# every integrand smooth, so QUADPACK reaches these comfortably.
_QUAD_EPSABS = 1e-13
_QUAD_EPSREL = 1e-11


@dataclass(frozen=True)
class Order:
    """Index pair (nu, n): Bessel/Gegenbauer index nu and polynomial degree n.

    nu = (d - 2) / 2 for ambient dimension d >= 2; nu == 0 exactly when d == 2.
    """

    nu: float
    n: int

    def __post_init__(self):
        if self.nu < 0:
            raise ValueError(f"nu must be >= 0, got {self.nu}")
        if self.n < 0 or int(self.n) != self.n:
            raise ValueError(f"n must be a nonnegative integer, got {self.n}")

    @classmethod
    def from_dimension(cls, d, n):
        if d < 2 or int(d) != d:
            raise ValueError(f"dimension must be an integer >= 2, got {d}")
        return cls(nu=(d - 2) / 2.0, n=int(n))

    @property
    def bessel_order(self):
        """Order of the Bessel ratio attached to degree n (n + nu)."""
        return self.n + self.nu


@dataclass(frozen=True)
class Band:
    """Interval of the normalized first coordinate x = z1/r, inside [-1, 1]."""

    x_lo: float
    x_hi: float

    def __post_init__(self):
        if not (-1.0 <= self.x_lo <= self.x_hi <= 1.0):
            raise ValueError(
                f"band must satisfy -1 <= x_lo <= x_hi <= 1, got [{self.x_lo}, {self.x_hi}]"
            )

    @property
    def degenerate(self):
        return self.x_lo == self.x_hi


FULL_BAND = Band(-1.0, 1.0)


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy: stop once the analytic term bound drops below abs_tol.

    If the bound is still above abs_tol at n_max the series raises
    TruncationError carrying the residual bound.
    """

    n_max: int = 400
    abs_tol: float = 1e-10

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if self.abs_tol <= 0:
            raise ValueError("abs_tol must be > 0")


DEFAULT_SERIES = SeriesControl()


def bessel_i(nu, x, scaled=False):
    """Modified Bessel function of the first kind I_nu(x) for x > 0.

    With scaled=True returns e^{-x} I_nu(x), finite across the double range.
    """
    if nu < 0:
        raise ValueError(f"order must be >= 0, got {nu}")
    if x <= 0:
        raise ValueError(f"argument must be > 0, got {x}")
    return float(sps.ive(nu, x)) if scaled else float(sps.iv(nu, x))


def bessel_k(nu, x, scaled=False):
    """Modified Bessel function of the second kind K_nu(x) for x > 0.

    With scaled=True returns e^{x} K_nu(x).  K is symmetric in the order,
    so negative nu is folded to |nu|.
    """
    if x <= 0:
        raise ValueError(f"argument must be > 0, got {x}")
    nu = abs(nu)
    return float(sps.kve(nu, x)) if scaled else float(sps.kv(nu, x))


def chebyshev_t(n, x):
    """Chebyshev polynomial T_n(x) on [-1, 1] via the three-term recurrence."""
    if n < 0 or int(n) != n:
        raise ValueError(f"degree must be a nonnegative integer, got {n}")
    if abs(x) > 1.0:
        raise ValueError(f"argument must lie in [-1, 1], got {x}")
    if n == 0:
        return 1.0
    tm, t = 1.0, float(x)
    for _ in range(int(n) - 1):
        tm, t = t, 2.0 * x * t - tm
    return t


def gegenbauer(n, nu, x):
    """Gegenbauer polynomial C_n^nu(x) for nu > 0 via the recurrence

        C_n = (2(n-1+nu) x C_{n-1} - (n-2+2nu) C_{n-2}) / n,

    which is stable on [-1, 1].  For nu == 0 use chebyshev_t instead.
    """
    if n < 0 or int(n) != n:
        raise ValueError(f"degree must be a nonnegative integer, got {n}")
    if nu <= 0:
        raise ValueError(f"index must be > 0, got {nu} (the circle case uses chebyshev_t)")
    if abs(x) > 1.0:
        raise ValueError(f"argument must lie in [-1, 1], got {x}")
    if n == 0:
        return 1.0
    cm, c = 1.0, 2.0 * nu * x
    for k in range(2, int(n) + 1):
        cm, c = c, (2.0 * (k - 1 + nu) * x * c - (k - 2 + 2.0 * nu) * cm) / k
    return c


def gegenbauer_at_one(n, nu):
    """C_n^nu(1) = Gamma(n + 2 nu) / (n! Gamma(2 nu)), evaluated in log space."""
    if n < 0 or int(n) != n:
        raise ValueError(f"degree must be a nonnegative integer, got {n}")
    if nu <= 0:
        raise ValueError(f"index must be > 0, got {nu}")
    n = int(n)
    if n == 0:
        return 1.0
    return math.exp(
        math.lgamma(n + 2.0 * nu) - math.lgamma(n + 1.0) - math.lgamma(2.0 * nu)
    )


def gegenbauer_growth_constant(nu, n_max=400):
    """Smallest C with C_n^nu(1) <= C n^{2 nu - 1} for 1 <= n <= n_max.

    The ratio tends to 1/Gamma(2 nu) as n grows; the constant is fitted
    empirically because no quantitative value is available a priori.
    """
    if nu <= 0:
        raise ValueError(f"index must be > 0, got {nu}")
    best = 0.0
    for n in range(1, int(n_max) + 1):
        best = max(best, gegenbauer_at_one(n, nu) / n ** (2.0 * nu - 1.0))
    return best


def sphere_exp_average(m, rho):
    """Average of e^{<w, xi>} over the unit sphere S^{m-1}, with |w| = rho.

    Equals Gamma(m/2) (rho/2)^{1-m/2} I_{m/2-1}(rho); the m = 1 sphere is
    the two-point set {-1, +1}, so the average is cosh(rho).  Continuous
    at rho = 0 with value 1.
    """
    if m < 1 or int(m) != m:
        raise ValueError(f"m must be an integer >= 1, got {m}")
    if rho < 0:
        raise ValueError(f"rho must be >= 0, got {rho}")
    if m == 1:
        return math.cosh(rho)
    if rho < 1e-4:
        # series 1 + rho^2/(2m) + rho^4/(8 m (m+2)) + ..., truncation < 1e-26
        return 1.0 + rho * rho / (2.0 * m) * (1.0 + rho * rho / (4.0 * (m + 2.0)))
    alpha = 0.5 * m - 1.0
    log_val = (
        math.lgamma(0.5 * m)
        - alpha * math.log(0.5 * rho)
        + rho
        + math.log(float(sps.ive(alpha, rho)))
    )
    return math.exp(log_val)


def speed_weight(d, x):
    """Density 2 (1 - x^2)^{(d-3)/2} of the speed measure on (-1, 1)."""
    if abs(x) >= 1.0:
        return 0.0 if d >= 3 else math.inf
    return 2.0 * (1.0 - x * x) ** ((d - 3.0) / 2.0)


def _uniform_weight_const(d):
    # normalizing constant of the z1-marginal of the uniform sphere measure
    return math.exp(math.lgamma(0.5 * d) - 0.5 * math.log(math.pi) - math.lgamma(0.5 * (d - 1)))


def band_measure(d, band):
    """Uniform-measure mass of a band of S^{d-1}.

    Computed through the symmetric incomplete Beta function; the full band
    has mass 1 and adjacent bands add exactly.
    """
    if d < 2 or int(d) != d:
        raise ValueError(f"dimension must be an integer >= 2, got {d}")
    if band.degenerate:
        return 0.0
    h = 0.5 * (d - 1)
    lo = 0.5 * (band.x_lo + 1.0)
    hi = 0.5 * (band.x_hi + 1.0)
    return float(sps.betainc(h, h, hi) - sps.betainc(h, h, lo))


def _zonal(d, n, x):
    if d == 2:
        return chebyshev_t(n, x)
    return gegenbauer(n, (d - 2) / 2.0, x)


def _poly_band_closed(d, n, band):
    """Untilted band integral of the degree-n zonal polynomial, n >= 1.

    The eigenfunction identity d/dx[(1-x^2)^{nu+1/2} dP_n/dx] =
    -n(n+2nu) (1-x^2)^{nu-1/2} P_n(x) turns the integral into a boundary
    term, so no quadrature (and no oscillation) is involved.
    """
    if d == 2:
        # (1/pi) int cos(n theta) d theta over the image of the band
        theta_lo = math.acos(band.x_hi)
        theta_hi = math.acos(band.x_lo)
        return (math.sin(n * theta_hi) - math.sin(n * theta_lo)) / (n * math.pi)
    nu = (d - 2) / 2.0

    def boundary(x):
        one_m = 1.0 - x * x
        if one_m <= 0.0:
            return 0.0
        return one_m ** (nu + 0.5) * gegenbauer(n - 1, nu + 1.0, x)

    const = _uniform_weight_const(d) * 2.0 * nu / (n * (n + 2.0 * nu))
    return const * (boundary(band.x_lo) - boundary(band.x_hi))


def _band_quad(d, n, band, c1, c_perp):
    """Integral of e^{c1 x} Lambda_{d-1}(c_perp sqrt(1-x^2)) P_n(x) w_d(x) dx.

    Substituting x = cos(theta) removes the endpoint singularity of the
    d = 2 weight and leaves a smooth integrand c * sin^{d-2}(theta) * ...
    The untilted case is evaluated in closed form instead.
    """
    if c1 == 0.0 and c_perp == 0.0:
        if n == 0:
            return band_measure(d, band)
        return _poly_band_closed(d, n, band)
    theta_lo = math.acos(band.x_hi)
    theta_hi = math.acos(band.x_lo)
    if d == 2:
        const = 1.0 / math.pi
        power = 0
    else:
        const = _uniform_weight_const(d)
        power = d - 2

    def integrand(theta):
        x = math.cos(theta)
        s = math.sin(theta)
        val = const * _zonal(d, n, x)
        if power:
            val *= s ** power
        if c1 != 0.0:
            val *= math.exp(c1 * x)
        if c_perp != 0.0:
            val *= sphere_exp_average(d - 1, c_perp * s)
        return val

    limit = max(100, 4 * int(n) + 20)
    out = integrate.quad(
        integrand, theta_lo, theta_hi,
        epsabs=_QUAD_EPSABS, epsrel=_QUAD_EPSREL, limit=limit,
        full_output=1,
    )
    return out[0]


@lru_cache(maxsize=200_000)
def _band_quad_cached(d, n, x_lo, x_hi, c1, c_perp):
    return _band_quad(d, n, Band(x_lo, x_hi), c1, c_perp)


def poly_band_integral(d, n, band):
    """Integral of the degree-n zonal polynomial over a band, against the
    z1-marginal of the uniform sphere measure.

    Vanishes (to quadrature tolerance) on the full band for n >= 1 and
    reduces to band_measure for n = 0.
    """
    if d < 2 or int(d) != d:
        raise ValueError(f"dimension must be an integer >= 2, got {d}")
    if n < 0 or int(n) != n:
        raise ValueError(f"degree must be a nonnegative integer, got {n}")
    if band.degenerate:
        return 0.0
    return _band_quad_cached(int(d), int(n), band.x_lo, band.x_hi, 0.0, 0.0)


def exp_poly_band_integral(d, n, band, c1, c_perp):
    """Exponentially tilted band integral

        int_band e^{c1 x} Lambda_{d-1}(c_perp sqrt(1-x^2)) P_n(x) w_d(x) dx

    where P_n is the zonal polynomial and Lambda the sphere average of
    sphere_exp_average.  With c1 = c_perp = 0 this is poly_band_integral.
    """
    if d < 2 or int(d) != d:
        raise ValueError(f"dimension must be an integer >= 2, got {d}")
    if n < 0 or int(n) != n:
        raise ValueError(f"degree must be a nonnegative integer, got {n}")
    if c_perp < 0:
        raise ValueError(f"c_perp must be >= 0, got {c_perp}")
    if band.degenerate:
        return 0.0
    return _band_quad_cached(int(d), int(n), band.x_lo, band.x_hi, float(c1), float(c_perp))


def _sphere_exp_average_vec(m, rho):
    """Vectorized sphere_exp_average over an array of radii rho >= 0."""
    rho = np.asarray(rho, dtype=float)
    if m == 1:
        return np.cosh(rho)
    small = rho < 1e-4
    out = np.empty_like(rho)
    if np.any(small):
        rs = rho[small]
        out[small] = 1.0 + rs * rs / (2.0 * m) * (1.0 + rs * rs / (4.0 * (m + 2.0)))
    if np.any(~small):
        rb = rho[~small]
        alpha = 0.5 * m - 1.0
        log_val = (
            math.lgamma(0.5 * m)
            - alpha * np.log(0.5 * rb)
            + rb
            + np.log(sps.ive(alpha, rb))
        )
        out[~small] = np.exp(log_val)
    return out


@lru_cache(maxsize=64)
def _leggauss(n):
    nodes, weights = np.polynomial.legendre.leggauss(n)
    return nodes, weights


def tilted_band_integral_block(d, band, c1, c_perp, count):
    """exp_poly_band_integral for every degree n < count at once.

    One Gauss-Legendre pass on the cos-substituted interval evaluates the
    tilt and the whole polynomial ladder; the node count is doubled once
    and the two passes must agree to near machine precision.  Serves the
    series that need many tilted surface integrals with one tilt.
    """
    if count < 1:
        return np.empty(0)
    if band.degenerate:
        return np.zeros(count)
    if c1 == 0.0 and c_perp == 0.0:
        out = np.empty(count)
        out[0] = band_measure(d, band)
        for n in range(1, count):
            out[n] = _poly_band_closed(d, n, band)
        return out
    return _tilted_block_cached(int(d), band.x_lo, band.x_hi, float(c1),
                                float(c_perp), int(count))


def _tilted_block_eval(d, band, c1, c_perp, count, n_nodes):
    theta_lo = math.acos(band.x_hi)
    theta_hi = math.acos(band.x_lo)
    half = 0.5 * (theta_hi - theta_lo)
    mid = 0.5 * (theta_hi + theta_lo)
    base_nodes, base_weights = _leggauss(n_nodes)
    theta = mid + half * base_nodes
    x = np.cos(theta)
    s = np.sin(theta)
    nu = (d - 2) / 2.0
    if d == 2:
        density = np.full_like(x, 1.0 / math.pi)
    else:
        density = _uniform_weight_const(d) * s ** (d - 2)
    tilt = np.exp(c1 * x) * _sphere_exp_average_vec(d - 1, c_perp * s)
    base = half * base_weights * density * tilt
    out = np.empty(count)
    p_prev = np.ones_like(x)
    out[0] = base.sum()
    if count == 1:
        return out
    p_cur = x.copy() if d == 2 else 2.0 * nu * x
    out[1] = (base * p_cur).sum()
    for n in range(2, count):
        if d == 2:
            p_prev, p_cur = p_cur, 2.0 * x * p_cur - p_prev
        else:
            p_prev, p_cur = p_cur, (
                2.0 * (n - 1 + nu) * x * p_cur - (n - 2 + 2.0 * nu) * p_prev
            ) / n
        out[n] = (base * p_cur).sum()
    return out


@lru_cache(maxsize=4096)
def _tilted_block_cached(d, x_lo, x_hi, c1, c_perp, count):
    band = Band(x_lo, x_hi)
    # enough nodes for the polynomial degree plus the entire-function tilt
    n_nodes = max(64, (count + 40 + int(2.0 * (abs(c1) + c_perp))) // 2 * 2)
    vals = _tilted_block_eval(d, band, c1, c_perp, count, n_nodes)
    check = _tilted_block_eval(d, band, c1, c_perp, count, 2 * n_nodes)
    scale = max(1.0, float(np.max(np.abs(check))))
    if float(np.max(np.abs(vals - check))) > 1e-12 * scale:
        refine = _tilted_block_eval(d, band, c1, c_perp, count, 4 * n_nodes)
        check = refine
    return check


def _norm_sq_log(d, n):
    """log of phi_n(1)^2 for the orthonormal eigenfunctions (d >= 3)."""
    nu = (d - 2) / 2.0
    # phi_n = ((n+nu) n! / (pi Gamma(n+2nu)))^{1/2} 2^{nu-1} Gamma(nu) C_n^nu
    log_c = (
        0.5 * (math.log(n + nu) + math.lgamma(n + 1.0) - math.log(math.pi) - math.lgamma(n + 2.0 * nu))
        + (nu - 1.0) * math.log(2.0)
        + math.lgamma(nu)
    )
    log_cn1 = 0.0 if n == 0 else math.lgamma(n + 2.0 * nu) - math.lgamma(n + 1.0) - math.lgamma(2.0 * nu)
    return 2.0 * (log_c + log_cn1)


def projected_transition_density(d, t, x, y, ctrl=None, full_output=False):
    """Transition density p_d(t, x, y) of the first coordinate of spherical
    Brownian motion, taken with respect to the speed measure.

    Eigenfunction series: the circle uses 1/(2 pi) + (1/pi) sum e^{-n^2 t/2}
    T_n(x) T_n(y); higher dimensions use the orthonormal Gegenbauer basis with
    eigenvalues n (n + 2 nu) / 2.  Symmetric in (x, y) and normalized to total
    mass 1 against the speed measure.

    Raises TruncationError when the remainder bound at n_max is still above
    ctrl.abs_tol (small t needs roughly 1/sqrt(t) terms).
    """
    if d < 2 or int(d) != d:
        raise ValueError(f"dimension must be an integer >= 2, got {d}")
    if t <= 0:
        raise ValueError(f"time must be > 0, got {t}")
    if abs(x) > 1.0 or abs(y) > 1.0:
        raise ValueError("arguments must lie in [-1, 1]")
    ctrl = ctrl or DEFAULT_SERIES
    nu = (d - 2) / 2.0

    if d == 2:
        total = 1.0 / (2.0 * math.pi)
        tx_m, tx = 1.0, x
        ty_m, ty = 1.0, y
        n = 1
        env = math.exp(-0.5 * t) / math.pi
        while env >= ctrl.abs_tol:
            if n > ctrl.n_max:
                raise TruncationError(
                    f"transition density not converged at n_max={ctrl.n_max}",
                    n_terms=n, residual=env,
                )
            total += math.exp(-0.5 * n * n * t) / math.pi * tx * ty
            tx_m, tx = tx, 2.0 * x * tx - tx_m
            ty_m, ty = ty, 2.0 * y * ty - ty_m
            n += 1
            env = math.exp(-0.5 * n * n * t) / math.pi
        if full_output:
            return total, {"n_terms": n, "residual_bound": env / (1.0 - math.exp(-0.5 * (2 * n + 1) * t))}
        return total

    total = 0.0
    cx_m, cx = 1.0, 2.0 * nu * x
    cy_m, cy = 1.0, 2.0 * nu * y
    n = 0
    while True:
        env = math.exp(-0.5 * n * (n + 2.0 * nu) * t + _norm_sq_log(d, n))
        if n > 0 and env < ctrl.abs_tol:
            break
        if n > ctrl.n_max:
            raise TruncationError(
                f"transition density not converged at n_max={ctrl.n_max}",
                n_terms=n, residual=env,
            )
        cnx = 1.0 if n == 0 else cx
        cny = 1.0 if n == 0 else cy
        log_phi_sq = _norm_sq_log(d, n)
        cn1 = 1.0 if n == 0 else gegenbauer_at_one(n, nu)
        # phi_n(x) phi_n(y) = phi_n(1)^2 * (C_n(x)/C_n(1)) * (C_n(y)/C_n(1))
        total += math.exp(-0.5 * n * (n + 2.0 * nu) * t + log_phi_sq) * (cnx / cn1) * (cny / cn1)
        if n >= 1:
            k = n + 1
            cx_m, cx = cx, (2.0 * (k - 1 + nu) * x * cx - (k - 2 + 2.0 * nu) * cx_m) / k
            cy_m, cy = cy, (2.0 * (k - 1 + nu) * y * cy - (k - 2 + 2.0 * nu) * cy_m) / k
        n += 1
    if full_output:
        return total, {"n_terms": n, "residual_bound": env}
    return total

"""First-passage toolkit for Bessel radial processes.

The hitting time tau_r of the radial part (index mu) of Brownian motion
has the Laplace transform a^{-mu} L_mu(a sqrt(2 lam)) / (r^{-mu} L_mu(r
sqrt(2 lam))) with L = I when a < r and L = K when a > r.  Densities,
distribution functions and tails are recovered by numerical inversion of
that ratio; the constants of the large-time asymptotics are evaluated in
closed form.
"""

import math
import threading
from dataclasses import dataclass

import mpmath as mp
import numpy as np
from scipy import integrate
from scipy import special as sps

from .errors import InversionError
from .inversion import gaver_stehfest, talbot

__all__ = [
    "Geometry",
    "InversionControl",
    "DEFAULT_INVERSION",
    "hitting_mass",
    "fpt_laplace",
    "fpt_density",
    "fpt_cdf",
    "fpt_tail",
    "kappa",
    "fpt_tail_asymptotic",
    "fpt_tail_bound",
    "h_exp_tail",
    "l_const",
    "negative_clamp_count",
]

# Inversion noise below this magnitude is clamped to zero (and counted);
# anything more negative means the inversion cannot be trusted.  The fixed
# Talbot rule carries roundoff of order eps * e^{2M/5} / t from its first
# contour weight, so the clamp window widens accordingly.
_NEG_NOISE = 1e-10


def _noise_floor(inv, t):
    if inv.method == "talbot":
        return max(_NEG_NOISE, 64.0 * 2.3e-16 * math.exp(0.4 * inv.nodes) / t)
    return _NEG_NOISE

_clamp_lock = threading.Lock()
_clamp_count = 0


def _count_clamp():
    global _clamp_count
    with _clamp_lock:
        _clamp_count += 1


def negative_clamp_count():
    """Number of density evaluations whose tiny negative noise was clamped."""
    return _clamp_count


@dataclass(frozen=True)
class Geometry:
    """Problem instance: dimension d, sphere radius r, start radius a.

    The start point is (a, 0, ..., 0).  a < r is the interior regime
    (I-Bessel ratios), a > r the exterior regime (K-Bessel ratios).
    """

    d: int
    r: float
    a: float

    def __post_init__(self):
        if self.d < 2 or int(self.d) != self.d:
            raise ValueError(f"dimension must be an integer >= 2, got {self.d}")
        if self.r <= 0 or self.a <= 0:
            raise ValueError("radii must be > 0")
        if self.a == self.r:
            raise ValueError("start radius must differ from the sphere radius")

    @property
    def nu(self):
        return (self.d - 2) / 2.0

    @property
    def interior(self):
        return self.a < self.r

    @property
    def regime(self):
        return "interior" if self.interior else "exterior"

    @property
    def hit_probability(self):
        """P(the motion ever reaches the sphere): 1, except (r/a)^{d-2} outside for d >= 3."""
        if self.interior or self.d == 2:
            return 1.0
        return (self.r / self.a) ** (self.d - 2)


@dataclass(frozen=True)
class InversionControl:
    """Inversion method selection.

    method is "talbot" (fixed Talbot, float64, the fast default) or
    "stehfest" (Gaver-Stehfest in extended precision).  nodes defaults to
    24 and 40 respectively; Gaver-Stehfest requires an even count.  With
    cross_validate=True every density/cdf/tail inversion is recomputed by
    the other method and an InversionError is raised when the two differ
    by more than 1e-6 relative (1e-10 absolute floor).
    """

    method: str = "talbot"
    nodes: int = 0
    cross_validate: bool = False

    _ALIASES = {
        "talbot": "talbot",
        "fixedtalbot": "talbot",
        "fixed-talbot": "talbot",
        "stehfest": "stehfest",
        "gaverstehfest": "stehfest",
        "gaver-stehfest": "stehfest",
    }

    def __post_init__(self):
        key = self.method.replace("_", "-").lower()
        if key not in self._ALIASES:
            raise ValueError(f"unknown inversion method {self.method!r}")
        object.__setattr__(self, "method", self._ALIASES[key])
        nodes = self.nodes or (24 if self.method == "talbot" else 40)
        if nodes < 8:
            raise ValueError(f"nodes must be >= 8, got {nodes}")
        if self.method == "stehfest" and nodes % 2:
            raise ValueError(f"Gaver-Stehfest needs an even node count, got {nodes}")
        object.__setattr__(self, "nodes", int(nodes))


DEFAULT_INVERSION = InversionControl()
_CROSS_TOL_REL = 1e-6
_CROSS_TOL_ABS = 1e-10


def hitting_mass(mu, a, r):
    """Total mass of the hitting-time law: 1 from inside (or mu = 0), else (r/a)^{2 mu}."""
    if a < r or mu == 0.0:
        return 1.0
    return (r / a) ** (2.0 * mu)


# ---------------------------------------------------------------------------
# transform evaluation


def _debye_u(k, p):
    if k == 0:
        return np.ones_like(p)
    if k == 1:
        return (3.0 * p - 5.0 * p ** 3) / 24.0
    if k == 2:
        return (81.0 * p ** 2 - 462.0 * p ** 4 + 385.0 * p ** 6) / 1152.0
    if k == 3:
        return (30375.0 * p ** 3 - 369603.0 * p ** 5 + 765765.0 * p ** 7
                - 425425.0 * p ** 9) / 414720.0
    return (4465125.0 * p ** 4 - 94121676.0 * p ** 6 + 349922430.0 * p ** 8
            - 446185740.0 * p ** 10 + 185910725.0 * p ** 12) / 39813120.0


def _transform_debye(mu, a, r, w):
    """(r/a)^mu L_mu(a w)/L_mu(r w) by large-order uniform asymptotics.

    Relative error is O(mu^-5) away from the turning points z = +-i mu/x;
    contour points falling inside the turning-point annulus are rescued
    with arbitrary-precision Bessel evaluations instead.
    """
    sgn = 1.0 if a < r else -1.0
    za, zr = a * w / mu, r * w / mu
    sa2 = 1.0 + za * za
    sr2 = 1.0 + zr * zr
    near_turn = (np.abs(sa2) < 0.15) | (np.abs(sr2) < 0.15)
    sa = np.sqrt(sa2)
    sr = np.sqrt(sr2)
    with np.errstate(all="ignore"):
        eta_a = sa + np.log(za / (1.0 + sa))
        eta_r = sr + np.log(zr / (1.0 + sr))
        corr_a = sum(sgn ** k * _debye_u(k, 1.0 / sa) / mu ** k for k in range(5))
        corr_r = sum(sgn ** k * _debye_u(k, 1.0 / sr) / mu ** k for k in range(5))
        log_val = mu * (math.log(r / a) + sgn * (eta_a - eta_r)) + 0.5 * np.log(sr / sa)
        vals = np.exp(log_val) * (corr_a / corr_r)
    bad = near_turn | ~np.isfinite(vals)
    if np.any(bad):
        for i in np.flatnonzero(bad):
            vals[i] = _transform_exact_mp(mu, a, r, complex(w[i]))
    return vals


def _transform_exact_mp(mu, a, r, w):
    """Scalar arbitrary-precision evaluation, the fallback of last resort."""
    with mp.workdps(30):
        zw = mp.mpc(w.real, w.imag)
        if a < r:
            ratio = mp.besseli(mu, a * zw) / mp.besseli(mu, r * zw)
        else:
            ratio = mp.besselk(mu, a * zw) / mp.besselk(mu, r * zw)
        val = mp.mpf(r / a) ** mu * ratio
        return complex(val)


def _hit_transform(mu, a, r, p):
    """Laplace transform of the hitting-time law at (complex) rate p.

    Vectorized over p; principal square root keeps Re sqrt(2p) >= 0, and
    the scaled Bessel functions keep every intermediate finite.  Orders
    the scipy routines cannot represent fall back to Debye asymptotics.
    """
    p = np.atleast_1d(np.asarray(p, dtype=complex))
    w = np.sqrt(2.0 * p)
    if mu > 120.0 or abs(mu * math.log(r / a)) > 600.0:
        return _transform_debye(mu, a, r, w)
    za, zr = a * w, r * w
    pref = (r / a) ** mu
    with np.errstate(all="ignore"):
        if a < r:
            ratio = sps.ive(mu, za) / sps.ive(mu, zr) * np.exp((a - r) * w.real)
        else:
            ratio = sps.kve(mu, za) / sps.kve(mu, zr) * np.exp(zr - za)
        vals = pref * ratio
    bad = ~np.isfinite(vals)
    if np.any(bad):
        if mu >= 40.0:
            vals[bad] = _transform_debye(mu, a, r, w[bad])
        else:
            for i in np.flatnonzero(bad):
                vals[i] = _transform_exact_mp(mu, a, r, complex(w[i]))
    return vals


def _hit_transform_mp(mu, a, r, p):
    """Same transform for a single mpmath abscissa (Gaver-Stehfest path)."""
    w = mp.sqrt(2 * p)
    if a < r:
        ratio = mp.besseli(mu, a * w) / mp.besseli(mu, r * w)
    else:
        ratio = mp.besselk(mu, a * w) / mp.besselk(mu, r * w)
    return (mp.mpf(r) / a) ** mu * ratio


def _invert(kind, mu, a, r, t, inv):
    """Invert the density ('rho'), cdf ('cdf') or tail ('tail') transform."""
    mass = hitting_mass(mu, a, r)
    if inv.method == "talbot":
        if kind == "rho":
            fn = lambda p: _hit_transform(mu, a, r, p)
        elif kind == "cdf":
            fn = lambda p: _hit_transform(mu, a, r, p) / p
        else:
            fn = lambda p: (mass - _hit_transform(mu, a, r, p)) / p
        return talbot(fn, t, inv.nodes)
    if kind == "rho":
        fn = lambda p: _hit_transform_mp(mu, a, r, p)
    elif kind == "cdf":
        fn = lambda p: _hit_transform_mp(mu, a, r, p) / p
    else:
        fn = lambda p: (mass - _hit_transform_mp(mu, a, r, p)) / p
    return gaver_stehfest(fn, t, inv.nodes)


def _other_method(inv):
    if inv.method == "talbot":
        return InversionControl(method="stehfest")
    return InversionControl(method="talbot")


def _cross_check(kind, mu, a, r, t, inv, value):
    other = _invert(kind, mu, a, r, t, _other_method(inv))
    tol = max(_CROSS_TOL_ABS, _CROSS_TOL_REL * max(abs(value), abs(other)))
    if abs(value - other) > tol:
        raise InversionError(
            f"inversion methods disagree for {kind} at mu={mu}, a={a}, r={r}, t={t}: "
            f"{inv.method}={value!r} vs {other!r}"
        )


def fpt_laplace(mu, a, r, lam):
    """E[e^{-lam tau_r}; tau_r < inf] for the index-mu radial process from a.

    Strictly decreasing in lam with values in (0, 1); lam -> 0 recovers the
    hitting probability (1 from inside, (r/a)^{2 mu} from outside).
    """
    if mu < 0:
        raise ValueError(f"index must be >= 0, got {mu}")
    if a <= 0 or r <= 0 or a == r:
        raise ValueError("need a, r > 0 and a != r")
    if lam <= 0:
        raise ValueError(f"rate must be > 0, got {lam}")
    return float(_hit_transform(mu, a, r, lam)[0].real)


def fpt_density(mu, a, r, t, inv=None):
    """Density of the hitting time at t > 0, by numerical Laplace inversion.

    Tiny negative inversion noise (above -1e-10) is clamped to zero and
    counted; anything more negative raises InversionError, as does a
    cross-validation mismatch when inv.cross_validate is set.
    """
    if mu < 0:
        raise ValueError(f"index must be >= 0, got {mu}")
    if a <= 0 or r <= 0 or a == r:
        raise ValueError("need a, r > 0 and a != r")
    if t <= 0:
        raise ValueError(f"time must be > 0, got {t}")
    inv = inv or DEFAULT_INVERSION
    val = _invert("rho", mu, a, r, t, inv)
    if inv.cross_validate:
        _cross_check("rho", mu, a, r, t, inv, val)
    if val < 0.0:
        if val < -_noise_floor(inv, t):
            raise InversionError(
                f"density inversion produced {val} at mu={mu}, a={a}, r={r}, t={t}"
            )
        _count_clamp()
        return 0.0
    return val


def fpt_cdf(mu, a, r, t, inv=None):
    """P(tau_r <= t), nondecreasing with limit hitting_mass(mu, a, r)."""
    if mu < 0:
        raise ValueError(f"index must be >= 0, got {mu}")
    if a <= 0 or r <= 0 or a == r:
        raise ValueError("need a, r > 0 and a != r")
    if t <= 0:
        raise ValueError(f"time must be > 0, got {t}")
    mass = hitting_mass(mu, a, r)
    if math.isinf(t):
        return mass
    inv = inv or DEFAULT_INVERSION
    val = _invert("cdf", mu, a, r, t, inv)
    if inv.cross_validate:
        _cross_check("cdf", mu, a, r, t, inv, val)
    return min(max(val, 0.0), mass)


def fpt_tail(mu, a, r, t, inv=None):
    """P(t < tau_r < inf), inverted directly so large-t values keep relative accuracy."""
    if mu < 0:
        raise ValueError(f"index must be >= 0, got {mu}")
    if a <= 0 or r <= 0 or a == r:
        raise ValueError("need a, r > 0 and a != r")
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    mass = hitting_mass(mu, a, r)
    if t == 0.0:
        return mass
    if math.isinf(t):
        return 0.0
    inv = inv or DEFAULT_INVERSION
    val = _invert("tail", mu, a, r, t, inv)
    if inv.cross_validate:
        _cross_check("tail", mu, a, r, t, inv, val)
    return min(max(val, 0.0), mass)


def kappa(nu, a, r):
    """Leading constant of the power-law hitting tail from outside (nu > 0):

        kappa = (1/Gamma(nu+1)) (r^3/(2a))^nu ((a/r)^nu - (a/r)^{-nu}).
    """
    if nu <= 0:
        raise ValueError(f"index must be > 0, got {nu}")
    if not a > r > 0:
        raise ValueError(f"need a > r > 0, got a={a}, r={r}")
    s = a / r
    return math.exp(nu * math.log(r ** 3 / (2.0 * a)) - math.lgamma(nu + 1.0)) * (
        s ** nu - s ** (-nu)
    )


def fpt_tail_asymptotic(nu, a, r, t):
    """Leading-order tail from outside: 2 log(a/r)/log t for nu = 0,
    kappa t^{-nu} for nu > 0."""
    if nu < 0:
        raise ValueError(f"index must be >= 0, got {nu}")
    if not a > r > 0:
        raise ValueError(f"need a > r > 0, got a={a}, r={r}")
    if nu == 0.0:
        if t <= 1.0:
            raise ValueError(f"the logarithmic form needs t > 1, got {t}")
        return 2.0 * math.log(a / r) / math.log(t)
    if t <= 0:
        raise ValueError(f"time must be > 0, got {t}")
    return kappa(nu, a, r) * t ** (-nu)


def fpt_tail_bound(nu, r, t):
    """Uniform-in-a tail bound r^{2 nu} / (2^nu Gamma(nu+1) t^nu), nu > 0."""
    if nu <= 0:
        raise ValueError(f"index must be > 0, got {nu}")
    if r <= 0 or t <= 0:
        raise ValueError("need r > 0 and t > 0")
    return math.exp(
        2.0 * nu * math.log(r) - nu * math.log(2.0) - math.lgamma(nu + 1.0) - nu * math.log(t)
    )


def l_const(nu, a, r):
    """Constant L(nu) = r^{2 nu}/(2^nu Gamma(nu)) (1 - (r/a)^{2 nu}) of the
    drifted tail asymptotics (nu > 0, a > r)."""
    if nu <= 0:
        raise ValueError(f"index must be > 0, got {nu}")
    if not a > r > 0:
        raise ValueError(f"need a > r > 0, got a={a}, r={r}")
    return math.exp(
        2.0 * nu * math.log(r) - nu * math.log(2.0) - math.lgamma(nu)
    ) * (1.0 - (r / a) ** (2.0 * nu))


def h_exp_tail(nu, a, r, speed, t, inv=None, abs_tol=1e-10):
    """Exponentially weighted tail integral

        H(t) = int_t^inf e^{-speed^2 s / 2} rho(s) ds

    of the hitting density at index nu.  H(0) equals the Laplace transform
    at speed^2/2 exactly; for t > 0 the integral is truncated where the
    exponential weight has decayed by 45/alpha relative to t, which keeps
    the truncation far below both abs_tol and the leading value.
    """
    if speed <= 0:
        raise ValueError(f"speed must be > 0, got {speed}")
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    alpha = 0.5 * speed * speed
    if t == 0.0:
        return fpt_laplace(nu, a, r, alpha)
    inv = inv or DEFAULT_INVERSION

    def integrand(s):
        return math.exp(-alpha * s) * fpt_density(nu, a, r, s, inv)

    horizon = t + 45.0 / alpha
    pts = [t + 1.0 / alpha, t + 5.0 / alpha, t + 15.0 / alpha]
    out = integrate.quad(
        integrand, t, horizon,
        points=[p for p in pts if t < p < horizon],
        epsabs=1e-3 * abs_tol, epsrel=1e-9, limit=300,
        full_output=1,
    )
    return max(out[0], 0.0)

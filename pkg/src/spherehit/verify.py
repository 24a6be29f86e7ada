"""Cross-check suites: every check pits a series/inversion value against an
independent oracle (closed form, quadrature, or Monte Carlo).

Each suite returns a CheckResult; the CLI `verify` command and the
acceptance tests run the same code.  The half-integer closed forms used
as golden references are implemented here from scratch (reflection/image
series and spectral series), independent of the Laplace-inversion path
they validate.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy import special as sps

from . import fpt, jointdist, mcverify, specfun
from .fpt import Geometry, InversionControl
from .jointdist import Band, Drift, JointQuery
from .mcverify import McConfig
from .specfun import FULL_BAND, SeriesControl

__all__ = ["CheckResult", "SUITES", "run_suite", "run_suites"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    worst: float = math.nan
    seconds: float = 0.0
    failures: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# closed forms for the half-integer index (golden oracles)


def stable_half_density(a, r, t):
    """Hitting density from outside at index 1/2: scaled one-sided stable."""
    c = a - r
    return (r / a) * c / math.sqrt(2.0 * math.pi * t ** 3) * math.exp(-c * c / (2.0 * t))


def stable_half_cdf(a, r, t):
    return (r / a) * math.erfc((a - r) / math.sqrt(2.0 * t))


def stable_half_tail(a, r, t):
    return (r / a) * math.erf((a - r) / math.sqrt(2.0 * t))


def interior_half_density(a, r, t):
    """Hitting density from inside at index 1/2.

    Image series for small t, spectral series for large t; both follow
    from the sinh ratio of the transform and agree to machine precision
    on the overlap.
    """
    if t <= 0.55 * r * r:
        total = 0.0
        for k in range(400):
            cm = (2 * k + 1) * r - a
            cp = (2 * k + 1) * r + a
            gm = cm * math.exp(-cm * cm / (2.0 * t))
            gp = cp * math.exp(-cp * cp / (2.0 * t))
            total += gm - gp
            if k > 2 and abs(gm) < 1e-22:
                break
        return (r / a) * total / math.sqrt(2.0 * math.pi * t ** 3)
    total = 0.0
    for k in range(1, 2000):
        term = (-1) ** (k + 1) * (k * math.pi / (a * r)) * math.sin(k * math.pi * a / r) \
            * math.exp(-k * k * math.pi * math.pi * t / (2.0 * r * r))
        total += term
        if k > 3 and abs(term) < 1e-22:
            break
    return total


def interior_half_cdf(a, r, t):
    if t <= 0.55 * r * r:
        total = 0.0
        for k in range(400):
            cm = (2 * k + 1) * r - a
            cp = (2 * k + 1) * r + a
            gm = math.erfc(cm / math.sqrt(2.0 * t))
            gp = math.erfc(cp / math.sqrt(2.0 * t))
            total += gm - gp
            if k > 2 and gm < 1e-22:
                break
        return (r / a) * total
    return 1.0 - interior_half_tail(a, r, t)


def interior_half_tail(a, r, t):
    if t <= 0.55 * r * r:
        return 1.0 - interior_half_cdf(a, r, t)
    total = 0.0
    for k in range(1, 2000):
        term = (-1) ** (k + 1) * (2.0 * r / (k * math.pi * a)) * math.sin(k * math.pi * a / r) \
            * math.exp(-k * k * math.pi * math.pi * t / (2.0 * r * r))
        total += term
        if k > 3 and abs(term) < 1e-22:
            break
    return total


# ---------------------------------------------------------------------------
# suites


def check_poisson_kernel(n_draws=100, seed=20240811):
    """Place-density series against the closed-form harmonic-measure kernel."""
    t0 = time.time()
    rng = np.random.default_rng(seed)
    ctrl = SeriesControl(n_max=8000, abs_tol=1e-12)
    worst = 0.0
    failures = []
    for i in range(n_draws):
        d = int(rng.choice([2, 3, 4, 5, 7]))
        r = float(rng.choice([0.5, 1.0, 2.0]))
        if rng.random() < 0.5:
            s = rng.uniform(0.02, 0.95)
            a = s * r
        else:
            s = rng.uniform(1.05, 5.0)
            a = s * r
        x = rng.uniform(-1.0, 1.0)
        geom = Geometry(d, r, a)
        val = jointdist.hitting_place_density(geom, x, ctrl)
        if geom.interior:
            ref = jointdist.place_kernel(d, a / r, x)
        else:
            ref = (r / a) ** (d - 2) * jointdist.place_kernel(d, r / a, x)
        dev = abs(val - ref)
        worst = max(worst, dev)
        if dev > 1e-8:
            failures.append(f"draw {i}: d={d} a={a:.4f} r={r} x={x:.4f} dev={dev:.2e}")
    return CheckResult(
        "poisson-kernel", not failures,
        f"{n_draws} draws, max abs deviation {worst:.3e} (tol 1e-8)",
        worst, time.time() - t0, failures,
    )


def check_u0_collapse():
    """joint_laplace at u = 0 equals the plain hitting-time transform."""
    t0 = time.time()
    worst = 0.0
    failures = []
    for d in (2, 3, 4, 5, 7):
        for ratio in (0.25, 0.5, 0.8, 1.3, 2.5):
            geom = Geometry(d, 1.0, ratio)
            for lam in (0.1, 0.3, 1.0, 3.0, 9.0):
                jl = jointdist.joint_laplace(geom, lam, 0.0, 0.0)
                fl = fpt.fpt_laplace(geom.nu, geom.a, geom.r, lam)
                dev = abs(jl - fl)
                worst = max(worst, dev)
                if dev > 1e-10:
                    failures.append(f"d={d} a/r={ratio} lam={lam}: dev={dev:.2e}")
    return CheckResult(
        "u0-collapse", not failures,
        f"125 grid points, max |joint - plain| {worst:.3e} (tol 1e-10)",
        worst, time.time() - t0, failures,
    )


def _golden_points():
    """(a, r, t) grid along hitting-law quantiles, 200 points total."""
    exterior_pairs = [
        (2.0, 1.0), (1.5, 1.0), (3.0, 1.0), (5.0, 1.0), (1.2, 1.0),
        (2.2, 2.0), (4.0, 2.0), (3.0, 0.5), (8.0, 5.0), (1.6, 0.8),
        (2.6, 1.3), (6.0, 1.5), (1.9, 1.4),
    ]
    interior_pairs = [
        (0.2, 1.0), (0.5, 1.0), (0.8, 1.0), (1.0, 2.0), (1.5, 2.0),
        (0.3, 0.5), (2.0, 2.5), (0.6, 1.5), (5.0, 8.0), (0.9, 1.2),
        (0.4, 0.7), (1.1, 1.3),
    ]
    qs_ext = [0.002, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.98]
    qs_int = [0.001, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.999]
    pts = []
    for a, r in exterior_pairs:
        c = a - r
        for q in qs_ext:
            # quantile of the defective law normalized by its mass (r/a)
            t = c * c / (2.0 * sps.erfcinv(q) ** 2)
            pts.append((a, r, float(t)))
    for a, r in interior_pairs:
        for q in qs_int:
            lo, hi = 1e-6 * r * r, 60.0 * r * r
            for _ in range(80):
                mid = math.sqrt(lo * hi)
                if interior_half_cdf(a, r, mid) < q:
                    lo = mid
                else:
                    hi = mid
            pts.append((a, r, math.sqrt(lo * hi)))
    return pts


def check_golden_half(inv=None):
    """Inverted density/cdf/tail against the index-1/2 closed forms."""
    t0 = time.time()
    inv = inv or InversionControl()
    worst = 0.0
    failures = []
    pts = _golden_points()
    for a, r, t in pts:
        if a > r:
            refs = (stable_half_density(a, r, t), stable_half_cdf(a, r, t),
                    stable_half_tail(a, r, t))
        else:
            refs = (interior_half_density(a, r, t), interior_half_cdf(a, r, t),
                    interior_half_tail(a, r, t))
        if refs[0] <= 1e-12:
            continue
        vals = (fpt.fpt_density(0.5, a, r, t, inv), fpt.fpt_cdf(0.5, a, r, t, inv),
                fpt.fpt_tail(0.5, a, r, t, inv))
        for name, v, ref in zip(("density", "cdf", "tail"), vals, refs):
            rel = abs(v - ref) / abs(ref)
            worst = max(worst, rel)
            if rel > 1e-8:
                failures.append(f"{name} a={a} r={r} t={t:.4g}: rel={rel:.2e}")
    return CheckResult(
        "golden-half", not failures,
        f"{len(pts)} (a, r, t) points, worst relative error {worst:.3e} (tol 1e-8)",
        worst, time.time() - t0, failures,
    )


def check_laplace_roundtrip():
    """Numerical transform of inverted densities reproduces the Bessel ratios."""
    t0 = time.time()
    worst = 0.0
    failures = []
    for mu in (0.0, 0.5, 1.0, 1.5, 3.0):
        for a, r in ((0.6, 1.2), (2.2, 1.1)):
            peak = max((a - r) ** 2 / 3.0, 1e-3)
            for lam in (0.25, 1.0, 4.0):
                horizon = max(60.0 / lam, 20.0 * peak)

                def integrand(t):
                    return math.exp(-lam * t) * fpt.fpt_density(mu, a, r, t)

                val, _ = integrate.quad(
                    integrand, 0.0, horizon,
                    points=[peak, 10.0 * peak, min(horizon, 100.0 * peak)],
                    epsabs=1e-12, epsrel=1e-9, limit=400,
                )
                ref = fpt.fpt_laplace(mu, a, r, lam)
                rel = abs(val - ref) / ref
                worst = max(worst, rel)
                if rel > 1e-6:
                    failures.append(f"mu={mu} a={a} r={r} lam={lam}: rel={rel:.2e}")
    return CheckResult(
        "laplace-roundtrip", not failures,
        f"30 transforms at lam in (0.25, 1, 4), worst relative error {worst:.3e} (tol 1e-6)",
        worst, time.time() - t0, failures,
    )


def check_lemma4_domination():
    """Inverted tails never exceed the uniform power bound."""
    t0 = time.time()
    violations = []
    worst = 0.0
    count = 0
    for nu in (0.5, 1.0, 1.5, 2.5, 3.5):
        for ratio in (1.2, 1.5, 2.0, 3.0, 5.0):
            for r in (0.7, 1.3):
                for t in (0.3, 1.0, 3.0, 10.0):
                    a = ratio * r
                    count += 1
                    tail = fpt.fpt_tail(nu, a, r, t)
                    bound = fpt.fpt_tail_bound(nu, r, t)
                    frac = tail / bound
                    worst = max(worst, frac)
                    if tail > bound * (1.0 + 1e-8):
                        violations.append(f"nu={nu} a={a} r={r} t={t}: {tail} > {bound}")
    return CheckResult(
        "lemma4-domination", not violations,
        f"{count} grid points, max tail/bound {worst:.4f} (must stay <= 1)",
        worst, time.time() - t0, violations,
    )


def check_tail_asymptotics():
    """Band tails approach the leading-order law, monotonically in t."""
    t0 = time.time()
    failures = []
    worst = 0.0
    for d, a, r in ((3, 2.0, 1.0), (5, 3.0, 1.0)):
        geom = Geometry(d, r, a)
        kap = fpt.kappa(geom.nu, a, r)
        for band in (FULL_BAND, Band(0.0, 1.0)):
            bm = specfun.band_measure(d, band)
            ratios = []
            for scale in (1e2, 1e3, 1e4):
                t = scale * (a - r) ** 2
                tp = jointdist.tail_probability(JointQuery(geom, (t, math.inf), band))
                ratios.append(tp * t ** geom.nu / (kap * bm))
            worst = max(worst, abs(ratios[0] - 1.0))
            if not 0.85 <= ratios[0] <= 1.15:
                failures.append(f"d={d} band=[{band.x_lo},{band.x_hi}]: first ratio {ratios[0]:.4f}")
            gaps = [abs(x - 1.0) for x in ratios]
            if not gaps[0] >= gaps[1] >= gaps[2]:
                failures.append(f"d={d} band=[{band.x_lo},{band.x_hi}]: not monotone {ratios}")
    geom = Geometry(2, 1.0, 2.0)
    for band in (FULL_BAND, Band(0.0, 1.0)):
        bm = specfun.band_measure(2, band)
        ratios = []
        for t in (1e6, 1e9, 1e12):
            tp = jointdist.tail_probability(JointQuery(geom, (t, math.inf), band))
            ratios.append(tp / (2.0 * math.log(2.0) / math.log(t) * bm))
        worst = max(worst, abs(ratios[0] - 1.0))
        if not 0.5 <= ratios[0] <= 1.5:
            failures.append(f"d=2 band=[{band.x_lo},{band.x_hi}]: ratio at 1e6 {ratios[0]:.4f}")
        gaps = [abs(x - 1.0) for x in ratios]
        if not gaps[0] >= gaps[1] >= gaps[2]:
            failures.append(f"d=2 band=[{band.x_lo},{band.x_hi}]: trend not improving {ratios}")
    return CheckResult(
        "tail-asymptotics", not failures,
        f"leading-order tails, worst |ratio - 1| at the first checkpoint {worst:.4f}",
        worst, time.time() - t0, failures,
    )


def _mc_cases(n_paths, seed):
    """The canonical Monte Carlo agreement queries, grouped by path batch."""
    inf = math.inf
    cases = []

    g = Geometry(2, 1.0, 0.5)
    cfg = McConfig(n_paths=n_paths, time_horizon=60.0, seed=seed, base_step=0.05)
    cases.append((g, None, cfg, [
        JointQuery(g, (0.0, inf), Band(0.0, 1.0)),
        JointQuery(g, (0.05, 0.5), Band(-1.0, -0.2)),
    ]))

    g = Geometry(2, 1.0, 2.0)
    cfg = McConfig(n_paths=n_paths, time_horizon=20.0, seed=seed + 1, base_step=0.5)
    cases.append((g, None, cfg, [
        JointQuery(g, (0.0, 20.0), Band(0.5, 1.0)),
    ]))

    g = Geometry(3, 1.0, 0.5)
    cfg = McConfig(n_paths=n_paths, time_horizon=60.0, seed=seed + 2, base_step=0.05)
    cases.append((g, None, cfg, [
        JointQuery(g, (0.0, inf), Band(0.0, 1.0)),
        JointQuery(g, (0.1, 0.6), Band(0.3, 0.9)),
    ]))

    g = Geometry(3, 1.0, 2.0)
    cfg = McConfig(n_paths=n_paths, time_horizon=1e12, seed=seed + 3,
                   base_step=1e8, escape_radius=25000.0)
    cases.append((g, None, cfg, [
        JointQuery(g, (0.0, inf), Band(-1.0, 0.0)),
        JointQuery(g, (0.2, 1.0), Band(0.5, 1.0)),
        JointQuery(g, (1.0, inf), FULL_BAND),
    ]))

    g = Geometry(5, 1.0, 0.6)
    cfg = McConfig(n_paths=n_paths, time_horizon=60.0, seed=seed + 4, base_step=0.05)
    cases.append((g, None, cfg, [
        JointQuery(g, (0.0, 0.5), Band(-0.5, 0.5)),
    ]))

    g = Geometry(5, 1.0, 2.0)
    cfg = McConfig(n_paths=n_paths, time_horizon=1e9, seed=seed + 5,
                   base_step=1e6, escape_radius=500.0)
    cases.append((g, None, cfg, [
        JointQuery(g, (1.0, inf), FULL_BAND),
    ]))

    g = Geometry(3, 1.0, 0.5)
    v = Drift(0.5, 0.3)
    cfg = McConfig(n_paths=n_paths, time_horizon=60.0, seed=seed + 6, base_step=0.05)
    cases.append((g, v, cfg, [
        JointQuery(g, (0.0, inf), Band(0.0, 1.0), v),
    ]))

    g = Geometry(2, 1.0, 0.5)
    v = Drift(1.0, 0.0)
    cfg = McConfig(n_paths=n_paths, time_horizon=60.0, seed=seed + 7, base_step=0.05)
    cases.append((g, v, cfg, [
        JointQuery(g, (0.0, inf), Band(0.0, 1.0), v),
    ]))

    return cases


def check_mc_agreement(n_paths=1_000_000, seed=42):
    """Series values against Monte Carlo on the canonical query set.

    Passes when at least 11 of the 12 queries agree within 3 standard
    errors (one 3-sigma outlier is allowed by design).
    """
    t0 = time.time()
    rows = []
    for geom, drift, cfg, queries in _mc_cases(n_paths, seed):
        refs = []
        for q in queries:
            if q.drift is not None and q.drift.speed > 0.0:
                refs.append(jointdist.drift_band_probability(q))
            else:
                refs.append(jointdist.band_probability(q))
        for q, ref, res in zip(queries, refs, mcverify.estimate(geom, drift, queries, cfg)):
            z = (res.estimate - ref) / max(res.std_err, 1e-12)
            rows.append((q, ref, res, z))
    n_ok = sum(1 for _, _, _, z in rows if abs(z) <= 3.0)
    detail_rows = [
        f"d={q.geometry.d} {q.geometry.regime} t=[{q.t_interval[0]:g},{q.t_interval[1]:g}] "
        f"band=[{q.band.x_lo:g},{q.band.x_hi:g}]"
        f"{' drift' if q.drift else ''}: series {ref:.6f} mc {res.estimate:.6f}"
        f" +- {res.std_err:.6f} (z={z:+.2f})"
        for q, ref, res, z in rows
    ]
    worst = max(abs(z) for _, _, _, z in rows)
    return CheckResult(
        "mc-agreement", n_ok >= len(rows) - 1,
        f"{n_ok}/{len(rows)} queries within 3 sigma at {n_paths} paths (worst |z| {worst:.2f})",
        worst, time.time() - t0, detail_rows,
    )


def check_cameron_martin(n_draws=50, seed=987123):
    """Drifted transform equals the tilted driftless transform, exactly."""
    t0 = time.time()
    rng = np.random.default_rng(seed)
    worst = 0.0
    failures = []
    for i in range(n_draws):
        d = int(rng.choice([2, 3, 4, 5, 7]))
        ratio = float(rng.uniform(0.3, 0.9) if rng.random() < 0.5 else rng.uniform(1.2, 3.0))
        geom = Geometry(d, 1.0, ratio)
        lam = float(rng.uniform(0.2, 3.0))
        u1 = float(rng.uniform(-1.5, 1.5))
        up = float(rng.uniform(0.0, 1.5))
        v = Drift(float(rng.uniform(-1.0, 1.0)), float(rng.uniform(0.0, 1.0)))
        ang = float(rng.uniform(0.0, math.pi))
        lhs = jointdist.drift_joint_laplace(geom, v, lam, u1, up, angle=ang)
        perp = math.sqrt(up ** 2 + v.v_perp ** 2 + 2.0 * up * v.v_perp * math.cos(ang))
        rhs = math.exp(-geom.a * v.v1) * jointdist.joint_laplace(
            geom, lam + 0.5 * v.speed ** 2, u1 + v.v1, perp
        )
        dev = abs(lhs - rhs)
        worst = max(worst, dev)
        if dev > 1e-10:
            failures.append(f"draw {i}: dev={dev:.2e}")
    return CheckResult(
        "cameron-martin", not failures,
        f"{n_draws} random draws, max |tilt mismatch| {worst:.3e} (tol 1e-10)",
        worst, time.time() - t0, failures,
    )


def check_h_exp_tail():
    """Weighted tail integrals follow their stated leading-order law."""
    t0 = time.time()
    failures = []
    worst = 0.0
    for d, a, r, v in ((3, 2.0, 1.0, 1.0), (4, 2.0, 1.0, 0.5)):
        nu = (d - 2) / 2.0
        alpha = 0.5 * v * v
        lead = 2.0 * fpt.l_const(nu, a, r) / (v * v)
        t1 = 40.0 / (v * v)
        ratios = []
        for t in (t1, 10.0 * t1):
            h = fpt.h_exp_tail(nu, a, r, v, t)
            ratios.append(t ** (nu + 1.0) * math.exp(alpha * t) * h / lead)
        worst = max(worst, abs(ratios[0] - 1.0))
        if not 0.8 <= ratios[0] <= 1.2:
            failures.append(f"d={d} |v|={v}: ratio {ratios[0]:.4f} at t=40/|v|^2")
        if not abs(ratios[1] - 1.0) < abs(ratios[0] - 1.0):
            failures.append(f"d={d} |v|={v}: no trend toward 1 ({ratios})")
    return CheckResult(
        "h-exp-tail", not failures,
        f"weighted tails at t = 40/|v|^2, worst |ratio - 1| {worst:.4f} (band [0.8, 1.2])",
        worst, time.time() - t0, failures,
    )


SUITES = {
    "poisson-kernel": check_poisson_kernel,
    "u0-collapse": check_u0_collapse,
    "golden-half": check_golden_half,
    "laplace-roundtrip": check_laplace_roundtrip,
    "lemma4-domination": check_lemma4_domination,
    "tail-asymptotics": check_tail_asymptotics,
    "mc-agreement": check_mc_agreement,
    "cameron-martin": check_cameron_martin,
    "h-exp-tail": check_h_exp_tail,
}


def run_suite(name, **kwargs):
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; available: {', '.join(SUITES)}")
    return SUITES[name](**kwargs)


def run_suites(names=None, **kwargs):
    names = list(names) if names else list(SUITES)
    results = []
    for name in names:
        fn_kwargs = kwargs if name == "mc-agreement" else {}
        results.append(run_suite(name, **fn_kwargs))
    return results

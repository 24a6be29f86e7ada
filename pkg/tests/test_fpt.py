"""First-passage toolkit tests against closed forms and round trips.

The index-1/2 hitting law has elementary closed forms in both regimes
(scaled one-sided stable outside, reflection/image series inside); they
are the golden oracles for every inversion-based quantity.
"""

import math

import mpmath as mp
import numpy as np
import pytest
from scipy import integrate

import spherehit as sh
from spherehit import Geometry, InversionControl
from spherehit.errors import InversionError
from spherehit.fpt import _hit_transform
from spherehit.inversion import gaver_stehfest, stehfest_weights, talbot
from spherehit.verify import (
    interior_half_cdf,
    interior_half_density,
    interior_half_tail,
    stable_half_cdf,
    stable_half_density,
    stable_half_tail,
)


class TestInverters:
    def test_talbot_known_pairs(self):
        # transform of t e^{-t} and of sin t
        assert talbot(lambda p: 1.0 / (p + 1) ** 2, 1.0) == pytest.approx(
            math.exp(-1.0), rel=1e-12
        )
        assert talbot(lambda p: 1.0 / (p * p + 1), 0.7) == pytest.approx(
            math.sin(0.7), rel=1e-10
        )

    def test_stehfest_known_pairs(self):
        assert gaver_stehfest(lambda p: 1 / (p + 1) ** 2, 1.0, 40) == pytest.approx(
            math.exp(-1.0), rel=1e-12
        )
        assert gaver_stehfest(lambda p: 1 / mp.sqrt(p), 2.0, 40) == pytest.approx(
            1.0 / math.sqrt(2.0 * math.pi), rel=1e-10
        )

    def test_stehfest_weights_resum_constants(self):
        # the rule reproduces f = 1 exactly: sum_k V_k / k = 1 as rationals
        from fractions import Fraction

        from spherehit.inversion import _salzer_fractions

        for m in (16, 24, 40):
            exact = sum(w / (k + 1) for k, w in enumerate(_salzer_fractions(m)))
            assert exact == Fraction(1)
            assert len(stehfest_weights(m)) == m
            assert gaver_stehfest(lambda p: 1 / p, 3.0, m) == pytest.approx(1.0, rel=1e-10)

    def test_node_validation(self):
        with pytest.raises(ValueError):
            talbot(lambda p: 1 / p, 1.0, nodes=4)
        with pytest.raises(ValueError):
            gaver_stehfest(lambda p: 1 / p, 1.0, nodes=15)


class TestGeometry:
    def test_derived_fields(self):
        g = Geometry(5, 1.0, 2.0)
        assert g.nu == 1.5
        assert g.regime == "exterior"
        assert g.hit_probability == pytest.approx(0.125)
        gi = Geometry(2, 1.0, 0.5)
        assert gi.nu == 0.0 and gi.interior and gi.hit_probability == 1.0

    def test_validation(self):
        with pytest.raises(ValueError):
            Geometry(1, 1.0, 0.5)
        with pytest.raises(ValueError):
            Geometry(3, 1.0, 1.0)
        with pytest.raises(ValueError):
            Geometry(3, -1.0, 0.5)


class TestInversionControl:
    def test_aliases(self):
        assert InversionControl(method="FixedTalbot").method == "talbot"
        assert InversionControl(method="GaverStehfest").method == "stehfest"
        assert InversionControl(method="gaver-stehfest").nodes == 40

    def test_even_requirement(self):
        with pytest.raises(ValueError):
            InversionControl(method="stehfest", nodes=21)
        with pytest.raises(ValueError):
            InversionControl(method="talbot", nodes=4)
        with pytest.raises(ValueError):
            InversionControl(method="simpson")


class TestLaplaceTransform:
    def test_exterior_half_closed_form(self):
        # (r/a) e^{-(a-r) sqrt(2 lam)}
        for lam in (0.25, 0.5, 2.0):
            val = sh.fpt_laplace(0.5, 2.0, 1.0, lam)
            assert val == pytest.approx(0.5 * math.exp(-math.sqrt(2 * lam)), rel=1e-12)
        assert sh.fpt_laplace(0.5, 2.0, 1.0, 0.5) == pytest.approx(
            0.5 * math.exp(-1.0), rel=1e-12
        )

    def test_interior_half_closed_form(self):
        # (r/a) sinh(a sqrt(2 lam)) / sinh(r sqrt(2 lam))
        a, r = 0.5, 1.0
        for lam in (0.3, 1.0, 5.0):
            w = math.sqrt(2 * lam)
            assert sh.fpt_laplace(0.5, a, r, lam) == pytest.approx(
                (r / a) * math.sinh(a * w) / math.sinh(r * w), rel=1e-12
            )

    def test_small_rate_limits(self):
        assert sh.fpt_laplace(1.3, 0.4, 1.0, 1e-9) == pytest.approx(1.0, abs=1e-4)
        assert sh.fpt_laplace(1.0, 2.0, 1.0, 1e-10) == pytest.approx(0.25, abs=1e-4)

    def test_monotone_decreasing_in_rate(self):
        vals = [sh.fpt_laplace(1.0, 0.5, 1.0, lam) for lam in (0.1, 0.5, 1.0, 5.0, 20.0)]
        assert all(0.0 < v < 1.0 for v in vals)
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            sh.fpt_laplace(0.5, 2.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            sh.fpt_laplace(0.5, 1.0, 1.0, 1.0)

    def test_large_order_fallback_matches_mpmath(self):
        mp.mp.dps = 40
        for mu in (130.0, 250.0):
            for a, r in ((0.5, 1.0), (2.0, 1.0)):
                for lam in (0.5, 4.0):
                    got = sh.fpt_laplace(mu, a, r, lam)
                    w = mp.sqrt(2 * lam)
                    if a < r:
                        ref = (mp.mpf(r) / a) ** mu * mp.besseli(mu, a * w) / mp.besseli(mu, r * w)
                    else:
                        ref = (mp.mpf(r) / a) ** mu * mp.besselk(mu, a * w) / mp.besselk(mu, r * w)
                    assert got == pytest.approx(float(ref), rel=1e-9)

    def test_transform_continuous_across_order_switch(self):
        # scipy path vs asymptotic path joined near mu = 120
        p = np.array([0.3 + 0.0j, 1.0 + 2.0j])
        lo = _hit_transform(119.9, 0.6, 1.0, p)
        hi = _hit_transform(120.1, 0.6, 1.0, p)
        assert np.allclose(lo, hi, rtol=5e-3)


class TestDensityCdfTail:
    def test_exterior_golden_points(self):
        a, r = 2.0, 1.0
        assert sh.fpt_density(0.5, a, r, 1.0) == pytest.approx(
            0.5 / math.sqrt(2 * math.pi) * math.exp(-0.5), rel=1e-9
        )
        assert sh.fpt_cdf(0.5, a, r, 1.0) == pytest.approx(
            0.5 * 2.0 * (1.0 - 0.8413447460685429), rel=1e-8
        )
        assert sh.fpt_tail(0.5, a, r, 4.0) == pytest.approx(
            0.5 * (2.0 * 0.6914624612740131 - 1.0), rel=1e-8
        )

    @pytest.mark.parametrize("a,r", [(2.0, 1.0), (1.5, 1.0), (3.0, 0.5)])
    def test_exterior_half_family(self, a, r):
        c2 = (a - r) ** 2
        for t in (0.05 * c2, 0.5 * c2, 3.0 * c2, 40.0 * c2):
            assert sh.fpt_density(0.5, a, r, t) == pytest.approx(
                stable_half_density(a, r, t), rel=1e-8
            )
            assert sh.fpt_cdf(0.5, a, r, t) == pytest.approx(
                stable_half_cdf(a, r, t), rel=1e-8
            )
            assert sh.fpt_tail(0.5, a, r, t) == pytest.approx(
                stable_half_tail(a, r, t), rel=1e-8
            )

    @pytest.mark.parametrize("a,r", [(0.5, 1.0), (0.9, 1.2), (1.0, 2.0)])
    def test_interior_half_family(self, a, r):
        for t in (0.05 * r * r, 0.3 * r * r, 1.2 * r * r):
            assert sh.fpt_density(0.5, a, r, t) == pytest.approx(
                interior_half_density(a, r, t), rel=1e-8
            )
            assert sh.fpt_cdf(0.5, a, r, t) == pytest.approx(
                interior_half_cdf(a, r, t), rel=1e-8
            )
            assert sh.fpt_tail(0.5, a, r, t) == pytest.approx(
                interior_half_tail(a, r, t), rel=1e-8
            )

    def test_short_time_vanishes(self):
        assert sh.fpt_density(1.0, 2.0, 1.0, 1e-4) == pytest.approx(0.0, abs=1e-30)
        assert sh.fpt_cdf(0.0, 0.2, 1.0, 1e-4) == pytest.approx(0.0, abs=1e-30)

    def test_cdf_monotone_and_limit(self):
        a, r, mu = 2.0, 1.0, 1.0
        ts = [0.1, 0.5, 2.0, 10.0, 100.0, 5000.0]
        vals = [sh.fpt_cdf(mu, a, r, t) for t in ts]
        assert all(x <= y + 1e-12 for x, y in zip(vals, vals[1:]))
        assert sh.fpt_cdf(mu, a, r, math.inf) == 0.25
        assert vals[-1] == pytest.approx(0.25, rel=1e-2)

    def test_tail_is_mass_minus_cdf(self):
        for mu, a, r in ((0.0, 0.3, 1.0), (1.5, 2.0, 1.0), (0.5, 1.5, 1.0)):
            for t in (0.4, 2.0):
                mass = sh.hitting_mass(mu, a, r)
                total = sh.fpt_cdf(mu, a, r, t) + sh.fpt_tail(mu, a, r, t)
                assert total == pytest.approx(mass, abs=1e-9)

    def test_cdf_consistent_with_density_quadrature(self):
        for mu, a, r, t in ((0.5, 2.0, 1.0, 2.0), (1.0, 0.5, 1.0, 0.6)):
            val, _ = integrate.quad(
                lambda s: sh.fpt_density(mu, a, r, s), 1e-12, t,
                epsabs=1e-12, epsrel=1e-9, limit=300,
            )
            assert val == pytest.approx(sh.fpt_cdf(mu, a, r, t), abs=1e-6)

    def test_round_trip_interior_zero_index(self):
        # transform the inverted density back at a few rates
        mu, a, r = 0.0, 0.5, 1.0
        for lam in (0.5, 1.0, 2.0):
            val, _ = integrate.quad(
                lambda t: math.exp(-lam * t) * sh.fpt_density(mu, a, r, t),
                0.0, 80.0, epsabs=1e-12, epsrel=1e-9, limit=300,
            )
            assert val == pytest.approx(sh.fpt_laplace(mu, a, r, lam), rel=1e-6)

    def test_method_agreement(self):
        inv_t = InversionControl(method="talbot")
        inv_s = InversionControl(method="stehfest")
        for mu, a, r, t in ((0.5, 2.0, 1.0, 1.0), (0.0, 0.5, 1.0, 0.3), (1.5, 3.0, 1.0, 5.0)):
            dt = sh.fpt_density(mu, a, r, t, inv_t)
            ds = sh.fpt_density(mu, a, r, t, inv_s)
            assert abs(dt - ds) <= max(1e-10, 1e-6 * max(abs(dt), abs(ds)))

    def test_cross_validation_catches_bad_nodes(self):
        # an 8-node Gaver-Stehfest rule is far off; the cross-check must fire
        bad = InversionControl(method="stehfest", nodes=8, cross_validate=True)
        with pytest.raises(InversionError):
            sh.fpt_density(0.5, 2.0, 1.0, 1.0, bad)

    def test_cross_validation_passes_defaults(self):
        inv = InversionControl(cross_validate=True)
        val = sh.fpt_density(0.5, 2.0, 1.0, 1.0, inv)
        assert val == pytest.approx(stable_half_density(2.0, 1.0, 1.0), rel=1e-8)

    def test_time_validation(self):
        with pytest.raises(ValueError):
            sh.fpt_density(0.5, 2.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            sh.fpt_tail(0.5, 2.0, 1.0, -1.0)


class TestTailConstants:
    def test_kappa_values(self):
        # nu = 1/2: agrees with (r/a)(a - r) sqrt(2/pi) from the stable form
        assert sh.kappa(0.5, 2.0, 1.0) == pytest.approx(
            0.5 * 1.0 * math.sqrt(2.0 / math.pi), rel=1e-13
        )
        assert sh.kappa(1.0, 2.0, 1.0) == pytest.approx(0.375, rel=1e-13)

    def test_kappa_vanishes_at_equal_radii(self):
        assert sh.kappa(1.0, 1.0 + 1e-12, 1.0) == pytest.approx(0.0, abs=1e-9)

    def test_kappa_matches_tail_limit(self):
        # t^{1/2} Q(t) -> kappa for the stable closed form
        a, r = 2.0, 1.0
        for t in (1e4, 1e6):
            assert math.sqrt(t) * stable_half_tail(a, r, t) == pytest.approx(
                sh.kappa(0.5, a, r), rel=2e-5 * math.sqrt(t) / 100.0 + 1e-4
            )

    def test_kappa_domain(self):
        with pytest.raises(ValueError):
            sh.kappa(0.0, 2.0, 1.0)
        with pytest.raises(ValueError):
            sh.kappa(1.0, 1.0, 2.0)

    def test_tail_asymptotic_values(self):
        assert sh.fpt_tail_asymptotic(0.0, math.e, 1.0, math.exp(4.0)) == pytest.approx(
            0.5, rel=1e-13
        )
        assert sh.fpt_tail_asymptotic(1.0, 2.0, 1.0, 10.0) == pytest.approx(
            0.0375, rel=1e-13
        )
        assert sh.fpt_tail_asymptotic(0.5, 2.0, 1.0, 100.0) == pytest.approx(
            0.03989422804014327, rel=1e-12
        )
        with pytest.raises(ValueError):
            sh.fpt_tail_asymptotic(0.0, 2.0, 1.0, 0.5)

    def test_tail_bound_values(self):
        assert sh.fpt_tail_bound(0.5, 1.0, 1.0) == pytest.approx(
            math.sqrt(2.0 / math.pi), rel=1e-13
        )
        assert sh.fpt_tail_bound(1.0, 1.0, 2.0) == pytest.approx(0.25, rel=1e-13)
        assert sh.fpt_tail(1.0, 2.0, 1.0, 2.0) <= 0.25

    def test_tail_asymptotic_accuracy(self):
        # leading order within 15 percent at moderately large t
        val = sh.fpt_tail(1.0, 2.0, 1.0, 100.0)
        assert abs(val / (0.375 / 100.0) - 1.0) < 0.15

    def test_l_const(self):
        assert sh.l_const(1.0, 2.0, 1.0) == pytest.approx(0.375, rel=1e-13)
        assert sh.l_const(0.5, 2.0, 1.0) == pytest.approx(
            (1.0 / math.sqrt(2.0 * math.pi)) * 0.5, rel=1e-13
        )
        # a -> infinity limit
        assert sh.l_const(1.0, 1e9, 1.0) == pytest.approx(0.5, rel=1e-9)
        with pytest.raises(ValueError):
            sh.l_const(1.0, 1.0, 2.0)


class TestLemma4Domination:
    @pytest.mark.parametrize("nu", [0.5, 1.0, 2.5])
    def test_small_grid(self, nu):
        for ratio in (1.3, 2.0, 4.0):
            for t in (0.5, 2.0, 8.0):
                a, r = ratio, 1.0
                assert sh.fpt_tail(nu, a, r, t) <= sh.fpt_tail_bound(nu, r, t) * (1 + 1e-9)


class TestHExpTail:
    def test_zero_time_is_transform(self):
        assert sh.h_exp_tail(0.5, 2.0, 1.0, 1.0, 0.0) == pytest.approx(
            sh.fpt_laplace(0.5, 2.0, 1.0, 0.5), rel=1e-13
        )

    def test_matches_closed_form_quadrature(self):
        # integrate the stable closed form directly
        a, r, speed, t = 2.0, 1.0, 1.0, 2.0
        ref, _ = integrate.quad(
            lambda s: math.exp(-0.5 * s) * stable_half_density(a, r, s),
            t, t + 90.0, epsabs=1e-15, limit=300,
        )
        assert sh.h_exp_tail(0.5, a, r, speed, t) == pytest.approx(ref, rel=1e-8)

    def test_small_speed_approaches_tail(self):
        a, r, t = 2.0, 1.0, 3.0
        tail = sh.fpt_tail(0.5, a, r, t)
        h = sh.h_exp_tail(0.5, a, r, 0.02, t)
        # weight e^{-2e-4 s/...} is nearly 1 where the tail mass lives
        assert h < tail
        assert h == pytest.approx(tail, rel=0.05)

    def test_decreasing_in_time(self):
        vals = [sh.h_exp_tail(1.0, 2.0, 1.0, 1.0, t) for t in (1.0, 2.0, 4.0)]
        assert vals[0] > vals[1] > vals[2] > 0.0

    def test_speed_validation(self):
        with pytest.raises(ValueError):
            sh.h_exp_tail(0.5, 2.0, 1.0, 0.0, 1.0)


class TestClampCounting:
    def test_counter_exposed(self):
        from spherehit import fpt as fpt_mod

        before = fpt_mod.negative_clamp_count()
        # deep left tail values can clamp; the call must not raise
        val = sh.fpt_density(0.5, 2.0, 1.0, 1e-3)
        assert val >= 0.0
        assert fpt_mod.negative_clamp_count() >= before

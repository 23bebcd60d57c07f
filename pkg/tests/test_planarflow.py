from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from noncomp_lab.errors import PrefixTooShort
from noncomp_lab.exactnum import Dyadic, Interval, partial_sum
from noncomp_lab.fields import PolynomialProfile, RadialField
from noncomp_lab.planarflow import (
    RHO_OUT_SLOPE,
    basin_radius_estimate,
    field_distance_check,
    field_eval,
    integrate_flow,
    inward_check,
    modulus_theta,
    planar_field,
    profile_build,
    radial_reference,
    shift_profile,
    theta_for_lipschitz,
)

M = 6


@pytest.fixture(scope="module")
def profile(prefix):
    return profile_build(prefix, M)


@pytest.fixture(scope="module")
def field(profile):
    return planar_field(profile)


class TestProfile:
    def test_alpha(self, profile, prefix):
        assert profile.alpha_M == Dyadic(1, -1) + partial_sum(prefix, M, shift=2)
        assert Dyadic(1, -1) < profile.alpha_M < 1

    def test_alpha_nondecreasing(self, prefix):
        alphas = [profile_build(prefix, m).alpha_M for m in range(12)]
        assert all(a <= b for a, b in zip(alphas, alphas[1:]))

    def test_signs(self, profile):
        assert profile.value_iv(0).hi < 0
        assert profile.value_iv(Fraction(3, 2)) == Interval(0)
        assert profile.value_iv(Fraction(5, 2)).hi < 0

    @settings(max_examples=200)
    @given(st.integers(-2**10, 16 * 2**10))
    def test_sign_pattern(self, profile, m):
        w = Dyadic(m, -10)
        v = profile.value_iv(w)
        if profile.sign_at(w) < 0:
            assert v.hi < 0
        else:
            assert v == Interval(0)
        lo, hi = profile.plateau
        assert (profile.sign_at(w) == 0) == ((lo <= w <= hi) or w <= Dyadic(-1, -1))
        if Dyadic(-1, -2) < w < Dyadic(1, -1) or w > 2:
            assert profile.sign_at(w) < 0

    def test_level_too_high(self, prefix):
        with pytest.raises(PrefixTooShort):
            profile_build(prefix, len(prefix))

    def test_rho_out_slope_constant(self):
        # the slope bound must dominate sup rho_out' = 4 e^-2
        assert float(RHO_OUT_SLOPE) >= 4 * np.exp(-2)

    def test_lipschitz_bound(self, profile):
        w = np.linspace(-1, 16, 100001)
        assert np.abs(profile.deriv(w)).max() <= float(profile.lipschitz_bound())


class TestField:
    def test_origin(self, field):
        assert field_eval(field, 0, 0) == (Interval(0), Interval(0))

    def test_plateau_rotation(self, field):
        h1, h2 = field_eval(field, 1, 0)
        assert h1 == Interval(0) and h2 == Interval(1)

    def test_direct_substitution(self, field, profile):
        x = Dyadic(1, -1)
        c = profile.value_iv(x * x)
        h1, h2 = field_eval(field, x, 0)
        assert h1 == c * x and h2.contains(x)

    def test_inward(self, field):
        assert inward_check(field, radius=3)["inward"]

    def test_plateau_circle_not_inward(self, field):
        assert not inward_check(field, radius=Fraction(1), arcs=64)["inward"]

    def test_reversed_profile_fails(self):
        F = RadialField(PolynomialProfile((Fraction(1),)), name="outward")
        rep = inward_check(F, radius=3, arcs=64)
        assert not rep["inward"] and rep["failures"] == 64


class TestModulus:
    @pytest.mark.parametrize("L, n, expected", [(1, 0, 3), (Fraction(1, 2), 4, 7), (7, 0, 5), (7, 3, 8)])
    def test_formula(self, L, n, expected):
        assert theta_for_lipschitz(L, n) == expected

    @pytest.mark.parametrize("n", [0, 3, 6])
    def test_sampled_modulus(self, profile, n):
        theta = modulus_theta(profile, n)
        assert theta > n + 2
        rng = np.random.default_rng(n)
        x = rng.uniform(-1, 16, 10**4)
        y = x + rng.uniform(-1, 1, x.size) * 2.0**-theta
        assert np.all(np.abs(profile.value(x) - profile.value(y)) < 2.0 ** -(n + 2))

    def test_shift(self, profile):
        n = 5
        g = shift_profile(profile, n)
        theta = modulus_theta(profile, n)
        assert g.plateau == (profile.alpha_M + Dyadic(1, -theta), 2 + Dyadic(1, -theta))
        w = np.linspace(-1, 16, 40001)
        assert np.abs(profile.value(w) - g.value(w)).max() < 2.0 ** -(n + 2)


class TestBasin:
    def test_unshifted(self, profile, field):
        est = basin_radius_estimate(field)
        assert est.contains(profile.alpha_M) and est.width() <= Dyadic(1, -30)

    def test_shifted(self, profile):
        g = shift_profile(profile, 5)
        est = basin_radius_estimate(g)
        assert est.contains(profile.alpha_M + Dyadic(1, -modulus_theta(profile, 5)))

    def test_tolerance_halving(self, field):
        a = basin_radius_estimate(field, Dyadic(1, -12)).width()
        b = basin_radius_estimate(field, Dyadic(1, -13)).width()
        assert b <= a.scale2(-1) or b <= Dyadic(1, -13)

    def test_monotone_in_level(self, prefix):
        ests = [basin_radius_estimate(profile_build(prefix, m)).lo for m in range(8)]
        assert all(a <= b for a, b in zip(ests, ests[1:]))

    def test_field_distance(self, profile):
        F, G = planar_field(profile), planar_field(shift_profile(profile, 3))
        rep = field_distance_check(F, G, samples=40, seed=0)
        assert rep["violations"] == 0 and rep["bound"] < 2.0**-3


class TestTrajectories:
    def test_origin(self, field):
        tr = integrate_flow(field, [0.0, 0.0], 10.0)
        assert np.all(tr.x == 0)

    def test_plateau_circle(self, field):
        tr = integrate_flow(field, [0.8, 0.6], 6.0, tol=1e-11)
        drift = np.abs(np.sqrt(tr.sq_radius) - 1.0)
        assert np.all(drift <= tr.error_bound + 1e-12)

    def test_decay_matches_radial_reference(self, field):
        tr = integrate_flow(field, [0.3, 0.0], 50.0, tol=1e-10, amplification="lognorm", sample_dt=0.5)
        w = tr.sq_radius
        assert np.all(np.diff(w) <= 1e-15)
        _, ref = radial_reference(field, 0.09, 50.0, t_eval=tr.t)
        bound = 2 * np.sqrt(w) * tr.error_bound + tr.error_bound**2 + 1e-9
        assert np.all(np.abs(w - ref) <= bound)

    @settings(max_examples=25)
    @given(st.floats(0.05, 0.95), st.floats(0, 2 * np.pi))
    def test_random_starts_against_reference(self, field, r, a):
        x0 = [r * np.cos(a), r * np.sin(a)]
        tr = integrate_flow(field, x0, 5.0, tol=1e-10, amplification="lognorm", sample_dt=1.0)
        _, ref = radial_reference(field, r * r, 5.0, t_eval=tr.t)
        assert np.all(np.abs(tr.sq_radius - ref) <= 2 * tr.error_bound + 1e-8)

    def test_certified_mode(self, field):
        boxes = integrate_flow(field, [0.5, 0.0], 1.0, mode="certified")
        _, ref = radial_reference(field, 0.25, 1.0, t_eval=[1.0])
        x1, x2 = boxes[-1]
        w = x1.sqr() + x2.sqr()
        lo, hi = w.float_bounds()
        assert lo <= ref[0] <= hi

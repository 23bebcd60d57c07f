from fractions import Fraction

import numpy as np
import pytest

from noncomp_lab.classifier import (
    EXCLUDED_B,
    EXCLUDED_GAMMA,
    FLAG_BALL,
    IN_WA,
    IN_WS,
    CertifiedBall,
    Equilibrium,
    classify_point,
    compute_basin,
    enumerate_basin,
    grid_dense_sequence,
    grid_points,
    isolate_equilibria,
    isolate_periodic_orbits,
    krawczyk,
    phase_portrait,
    resolution_exponent,
    reverify_balls,
    square_side,
    stable_manifold_arc,
)
from noncomp_lab.errors import CycleCertificationFailed, DomainExit, NotStructurallyStable
from noncomp_lab.exactnum import Dyadic, Interval
from noncomp_lab.fields import PolynomialProfile, RadialField, build_field, linear_field
from noncomp_lab.planarflow import planar_field, profile_build

from oracles import circle, left_half_disk_boundary, left_well_inside, radial_inside

K = 16


@pytest.fixture(scope="module")
def radial():
    return build_field("radial")


@pytest.fixture(scope="module")
def radial_portrait(radial):
    return phase_portrait(radial, K)


@pytest.fixture(scope="module")
def two_well_portrait():
    return phase_portrait(build_field("two_well"), K)


def centre_of(square):
    return (float(square.centre[0]), float(square.centre[1]))


class TestResolution:
    @pytest.mark.parametrize("k, e", [(1, 0), (2, 1), (3, 2), (16, 4), (17, 5)])
    def test_exponent(self, k, e):
        assert resolution_exponent(k) == e
        assert square_side(k).to_fraction() <= Fraction(1, 2 * k)


class TestEquilibria:
    @pytest.mark.parametrize(
        "field, marker",
        [("source", "source"), ("saddle", "saddle"), ("focus", "sink"), ("rotated_saddle", "saddle")],
    )
    def test_linear_markers(self, field, marker):
        eqs = isolate_equilibria(build_field(field), K)
        assert len(eqs) == 1 and eqs[0].marker == marker
        assert eqs[0].box[0].contains(0) and eqs[0].box[1].contains(0)

    def test_plateau_base_field(self, prefix):
        eqs = isolate_equilibria(planar_field(profile_build(prefix, 6)), K)
        assert [e.marker for e in eqs] == ["sink"]
        assert eqs[0].box[0].contains(0)

    def test_two_well(self, two_well_portrait):
        assert [centre_of(s) for s in two_well_portrait.sinks] == pytest.approx([(-1, 0), (1, 0)], abs=1e-6)
        assert len(two_well_portrait.saddles) == 1

    def test_krawczyk_contracts(self):
        F = build_field("two_well")
        X = (Interval(Fraction(15, 16), Fraction(17, 16)), Interval(Fraction(-1, 16), Fraction(1, 16)))
        K_ = krawczyk(F, X)
        assert K_ is not None and all(k.lo > x.lo and k.hi < x.hi for k, x in zip(K_, X))

    def test_squares_are_small_and_disjoint(self, radial_portrait, two_well_portrait):
        for p in (radial_portrait, two_well_portrait):
            p.check_disjoint()
            for s in p.squares:
                assert s.side.to_fraction() < Fraction(1, K)
                if s.marker == "sink":
                    assert s.lognorm < 0 and s.radius_eff > 0


class TestCycles:
    def test_radial_oracle(self, radial_portrait):
        assert len(radial_portrait.repelling) == 1 and len(radial_portrait.attracting) == 1
        rep, att = radial_portrait.repelling[0], radial_portrait.attracting[0]
        assert np.allclose(np.linalg.norm(rep.cycle, axis=1), 0.6, atol=1e-6)
        assert np.allclose(np.linalg.norm(att.cycle, axis=1), 0.9, atol=1e-6)
        # Hausdorff distance from the strip boundaries to the cycle stays below 1/k
        for a in (rep, att):
            for poly in (a.inner, a.outer):
                assert np.abs(np.linalg.norm(poly, axis=1) - np.linalg.norm(a.cycle, axis=1)).max() < 1 / K
            assert a.margin > 0
        assert att.multiplier < 1 < rep.multiplier

    def test_attracting_unit_circle(self):
        # dr/dt = 2 r (1 - r) in the squared radius r
        F = RadialField(PolynomialProfile((Fraction(1), Fraction(-1))), name="unit-cycle")
        p = phase_portrait(F, K)
        assert [s.marker for s in p.squares] == ["source"]
        assert len(p.attracting) == 1 and not p.repelling
        assert np.allclose(np.linalg.norm(p.attracting[0].cycle, axis=1), 1.0, atol=1e-6)

    def test_focus_has_none(self):
        assert isolate_periodic_orbits(build_field("focus"), K, centres=[(0.0, 0.0)]) == []

    def test_plateau_plateau_is_not_hyperbolic(self, prefix):
        F = planar_field(profile_build(prefix, 4))
        with pytest.raises(CycleCertificationFailed):
            isolate_periodic_orbits(F, K, centres=[(0.0, 0.0)])


class TestStableArc:
    def test_linear_saddle_axis(self):
        F = build_field("saddle")
        (s,) = phase_portrait(F, K).saddles
        arc = stable_manifold_arc(F, s, 2.0)
        assert np.allclose(arc.vertices[:, 0], 0, atol=1e-9)
        # backward flow along the stable axis grows like e^t
        reach = float(s.side) / 2 * np.exp(2.0)
        assert arc.vertices[:, 1].max() == pytest.approx(reach, rel=1e-6)
        assert arc.vertices[:, 1].min() == pytest.approx(-reach, rel=1e-6)
        assert not arc.escaped

    def test_escape(self):
        from noncomp_lab.errors import ManifoldEscape

        F = build_field("saddle")
        (s,) = phase_portrait(F, K).saddles
        with pytest.raises(ManifoldEscape):
            stable_manifold_arc(F, s, 6.0)
        assert stable_manifold_arc(F, s, 6.0, strict=False).escaped

    def test_rotated_saddle_direction(self):
        F = build_field("rotated_saddle")
        (s,) = phase_portrait(F, K).saddles
        arc = stable_manifold_arc(F, s, 1.0)
        J = F.jacobian(np.zeros(2))
        vals, vecs = np.linalg.eig(J)
        v = vecs[:, np.argmin(vals.real)].real
        cross = arc.vertices[:, 0] * v[1] - arc.vertices[:, 1] * v[0]
        assert np.abs(cross).max() < 1e-8

    def test_zero_time_is_local_segment(self):
        F = build_field("saddle")
        (s,) = phase_portrait(F, K).saddles
        arc = stable_manifold_arc(F, s, 0.0)
        assert len(arc.vertices) == 3
        assert np.abs(arc.vertices[:, 1]).max() == pytest.approx(float(s.side) / 2)


class TestBalls:
    def test_sink_centre_ball(self, radial, radial_portrait):
        balls = list(enumerate_basin(radial, radial_portrait, 0, max_level=0, t_max=2))
        assert balls and balls[0].centre == (0, 0) and balls[0].time == 1
        L = radial.lipschitz(17 / 16)
        assert float(balls[0].radius) * np.exp(L) < radial_portrait.sinks[0].radius_eff

    def test_soundness_radial(self, radial, radial_portrait):
        balls = list(enumerate_basin(radial, radial_portrait, 0, max_level=3, t_max=20))
        for b in balls:
            c = np.array([float(v) for v in b.centre])
            assert np.hypot(*c) + float(b.radius) < 0.6
        rep = reverify_balls(radial, radial_portrait, 1, balls, samples=4, t_max=30)
        assert rep["violations"] == 0

    def test_outside_never_emitted(self, radial, radial_portrait):
        for b in enumerate_basin(radial, radial_portrait, 0, max_level=3, t_max=20):
            assert radial_inside(np.array([[float(b.centre[0]), float(b.centre[1])]]))[0]

    def test_soundness_two_well(self, two_well_portrait):
        F = build_field("two_well")
        balls = list(enumerate_basin(F, two_well_portrait, 0, max_level=3, t_max=15))
        assert balls
        for b in balls:
            assert float(b.centre[0]) + float(b.radius) < 0
        assert reverify_balls(F, two_well_portrait, 1, balls, samples=4, t_max=30)["violations"] == 0

    def test_plateau_balls_inside_alpha(self, prefix):
        prof = profile_build(prefix, 6)
        F = planar_field(prof)
        from noncomp_lab.classifier import PhasePortrait, _square_for

        (eq,) = isolate_equilibria(F, K)
        portrait = PhasePortrait([_square_for(F, eq, K)], [], K)
        alpha = float(prof.alpha_M)
        balls = list(enumerate_basin(F, portrait, 0, max_level=2, t_max=120, step=1 / 8))
        assert balls
        for b in balls:
            c = np.array([float(v) for v in b.centre])
            assert (np.hypot(*c) + float(b.radius)) ** 2 < alpha


class TestGridDense:
    def test_unit_ball_level_one(self):
        pts = grid_dense_sequence([((0, 0), 1)], 1)
        assert len(pts) == 9
        assert all(x * x + y * y < 1 for x, y in pts)

    def test_level_zero(self):
        assert grid_dense_sequence([((0, 0), 1), ((1, 1), 1)], 0) == [(0, 0)]

    def test_empty(self):
        assert grid_dense_sequence([], 5) == []

    def test_uses_first_balls_only(self):
        balls = [((Fraction(1, 2), 0), Fraction(1, 8))] * 1 + [((0, 0), Fraction(1, 2))]
        assert grid_dense_sequence(balls, 0) == []
        assert (0, 0) in grid_dense_sequence(balls, 1)


class TestClassifyPoint:
    def test_inside_ball_immediate(self, radial, radial_portrait):
        ball = CertifiedBall((Fraction(1, 4), Fraction(0)), Fraction(1, 16), 3)
        v = classify_point((0.25, 0.01), radial, radial_portrait, basin_enum=[ball])
        assert v.kind == "InW_s" and v.time == 1 and v.flags & FLAG_BALL

    def test_near_attracting_cycle(self, radial, radial_portrait):
        v = classify_point((0.9, 0.0), radial, radial_portrait)
        assert v.kind == "InW_A" and v.region == "annulus:1"

    def test_secondary_sink_centre(self, two_well_portrait):
        v = classify_point((1.0, 0.0), build_field("two_well"), two_well_portrait, sink=1)
        assert v.kind == "InW_A" and v.region == "sink:2" and v.time == 1

    def test_certified_mode(self, radial, radial_portrait):
        v = classify_point((0.3, 0.2), radial, radial_portrait, mode="certified")
        assert v.kind == "InW_s" and v.certified

    def test_timeout(self, radial, radial_portrait):
        v = classify_point((0.6, 0.0), radial, radial_portrait, t_budget=3)
        assert v.kind == "Timeout"

    def test_domain_exit(self):
        F = RadialField(PolynomialProfile((Fraction(-1, 4), Fraction(1))), name="escape")
        p = phase_portrait(F, K)
        with pytest.raises(DomainExit):
            classify_point((0.9, 0.0), F, p, t_budget=20)


class TestComputeBasin:
    def test_radial(self, radial_basin):
        g = radial_basin
        assert g.agreement(radial_inside(g.points)) >= 0.99
        assert g.hausdorff_to(circle(0.6)) <= 1 / 16
        assert g.unresolved_fraction() <= 0.01
        assert np.any(g.verdict == EXCLUDED_B)

    def test_two_well(self, two_well_basin):
        g = two_well_basin
        assert g.agreement(left_well_inside(g.points)) >= 0.99
        assert g.hausdorff_to(left_half_disk_boundary()) <= 1 / 16
        assert g.unresolved_fraction() <= 0.01
        assert np.any(g.verdict == EXCLUDED_GAMMA)
        wrong = (g.verdict == IN_WS) != left_well_inside(g.points)
        # disagreements only near the stable arc on the x2-axis
        assert np.all(np.abs(g.points[wrong, 0]) < 1 / 16)

    def test_exclusivity(self, radial_basin, two_well_basin):
        for g in (radial_basin, two_well_basin):
            audit = g.exclusivity_audit()
            assert audit["classified"] > 0 and audit["violations"] == 0
            decided = (g.verdict == IN_WS) | (g.verdict == IN_WA)
            assert np.all(g.time[decided] >= 1)

    @pytest.mark.parametrize("k", [4, 8, 16, 32])
    def test_hausdorff_accuracy(self, k):
        g = compute_basin(build_field("radial:rho2=1/4,sigma2=4/5"), 1, k)
        assert g.hausdorff_to(circle(0.5)) <= 1 / k
        assert g.unresolved_fraction() <= 0.01

    def test_sink_index_out_of_range(self, radial, radial_portrait):
        for i in (0, 2):
            g = compute_basin(radial, i, K, level=4, portrait=radial_portrait)
            assert len(g.verdict) == 0

    def test_not_structurally_stable(self, prefix):
        with pytest.raises(NotStructurallyStable):
            compute_basin(planar_field(profile_build(prefix, 4)), 1, K, level=4)

    def test_grid_points(self):
        pts, ij = grid_points(1)
        assert len(pts) == 9 and np.all(np.sum(pts**2, axis=1) < 1)

    def test_thread_independence(self, radial, radial_portrait):
        a = compute_basin(radial, 1, K, level=5, portrait=radial_portrait, workers=1)
        b = compute_basin(radial, 1, K, level=5, portrait=radial_portrait, workers=3)
        for name in ("verdict", "region", "time", "flags", "radius"):
            assert np.array_equal(getattr(a, name), getattr(b, name))


def test_equilibrium_radius_small():
    eqs = isolate_equilibria(linear_field(-1, 2, -2, -1), 64)
    assert isinstance(eqs[0], Equilibrium) and eqs[0].radius < Dyadic(1, -10)

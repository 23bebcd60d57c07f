from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from noncomp_lab import machines
from noncomp_lab.constructions import make_rng
from noncomp_lab.embedding import (
    HALT_CODE,
    EncodedConfig,
    ExtendedMap,
    HaltsAndAttracted,
    NotAttractedWithinHorizon,
    PerturbedMap,
    TanhPerturbation,
    basin_vs_halting,
    contraction_check,
    decode,
    encode,
    extended_eval,
    fM_step,
    iterate,
    proposition1_harness,
    random_configuration,
    random_tanh_perturbation,
    sink_locate,
    smooth_step_numpy,
    plateau_bump_numpy,
)
from noncomp_lab.errors import AlreadyHalted, InvalidEncoding, NoContractionCertificate, WidthBlowup
from noncomp_lab.exactnum import Dyadic, Interval
from noncomp_lab.recursion import Configuration, initial_configuration, run, tm_step

MACHINES = ["unary_increment", "increment_and_clear", "looper", "bb2_clear", "ternary_walker"]


class TestCodec:
    def test_halting_code(self):
        m = machines.unary_increment()
        assert encode(m, Configuration((), ("1",), m.halt)) == HALT_CODE

    def test_empty_tape_start(self):
        m = machines.ternary_walker()
        assert encode(m, initial_configuration(m, "")) == EncodedConfig(0, 0, 1)

    def test_positional_digits(self):
        m = machines.ternary_walker()
        assert encode(m, Configuration((), ("2", "1"), "q2")) == EncodedConfig(6, 0, 2)

    def test_invalid(self):
        m = machines.unary_increment()
        with pytest.raises(InvalidEncoding):
            decode(m, (1, 0, 0))
        with pytest.raises(InvalidEncoding):
            decode(m, (0, 0, 7))

    @settings(max_examples=60)
    @given(st.sampled_from(MACHINES), st.integers(0, 2**32))
    def test_roundtrip_and_step(self, name, seed):
        m = machines.get(name)
        rng = make_rng(seed, 0)
        for _ in range(20):
            c = random_configuration(m, rng)
            e = encode(m, c)
            assert decode(m, e) == c
            assert fM_step(m, e) == encode(m, tm_step(m, c))


def test_step_into_halt_gives_zero():
    m = machines.unary_increment()
    c = initial_configuration(m, "1")
    end, steps = run(m, c, 100)
    prev, _ = run(m, c, steps - 1)
    assert fM_step(m, encode(m, prev)) == HALT_CODE
    assert fM_step(m, HALT_CODE) == HALT_CODE
    with pytest.raises(AlreadyHalted):
        tm_step(m, end)


class TestExtension:
    def test_bump_shapes(self):
        t = np.linspace(-1, 2, 301)
        s = smooth_step_numpy(t)
        assert np.all(np.diff(s) >= 0) and s[0] == 0 and s[-1] == 1
        u = np.linspace(-1, 1, 401)
        b = plateau_bump_numpy(u)
        assert np.all(b[np.abs(u) <= 0.25] == 1) and np.all(b[np.abs(u) >= 0.5] == 0)

    @pytest.mark.parametrize("name", MACHINES)
    def test_restriction_identity(self, name):
        m = machines.get(name)
        F = ExtendedMap(m)
        rng = make_rng(1, 1)
        for _ in range(40):
            e = encode(m, random_configuration(m, rng, max_len=4))
            got = extended_eval(F, e.as_tuple())
            assert all(v.is_point() for v in got)
            assert tuple(int(v.lo) for v in got) == fM_step(m, e).as_tuple()

    def test_plateau_constancy(self):
        m = machines.unary_increment()
        F = ExtendedMap(m)
        e = encode(m, initial_configuration(m, "111"))
        x = [Interval(Dyadic(v) + Dyadic(1, -3)) for v in e.as_tuple()]
        assert tuple(int(v.lo) for v in extended_eval(F, x)) == fM_step(m, e).as_tuple()

    def test_between_plateaus_is_sound(self):
        m = machines.unary_increment()
        F = ExtendedMap(m)
        e = encode(m, initial_configuration(m, "11"))
        lo = [Dyadic(v) + Dyadic(5, -4) for v in e.as_tuple()]
        box = tuple(Interval(d, d + Dyadic(1, -5)) for d in lo)
        enc = extended_eval(F, box)
        for t in np.linspace(0, 1 / 32, 7):
            val = F.eval_float([float(d) + t for d in lo])
            for iv, v in zip(enc, val):
                a, b = iv.float_bounds()
                assert a - 1e-12 <= v <= b + 1e-12


class TestIterate:
    def test_zero_perturbation_follows_machine(self):
        m = machines.bb2_clear()
        F = ExtendedMap(m)
        c = initial_configuration(m, "")
        orbit = iterate(PerturbedMap(F), encode(m, c).as_box(), 20)
        for box in orbit:
            assert all(v.is_point() for v in box)
        exact = encode(m, c).as_tuple()
        for box in orbit:
            assert tuple(int(v.lo) for v in box) == exact
            exact = F.fM(exact)

    def test_j_zero(self):
        F = ExtendedMap(machines.looper())
        x0 = (Interval(0), Interval(0), Interval(1))
        assert iterate(F, x0, 0) == [x0]

    def test_width_blowup(self):
        F = ExtendedMap(machines.unary_increment())
        with pytest.raises(WidthBlowup):
            iterate(F, (Interval(0, 3), Interval(0, 3), Interval(0, 3)), 3)


class TestOrbitTracking:
    def test_tracking(self):
        rep = proposition1_harness(Fraction(1, 10), Fraction(1, 5), trials=30, j_max=30, seed=2)
        assert rep["precondition_ok"] and rep["violations"] == 0

    def test_zero_delta_absorbs_offset(self):
        rep = proposition1_harness(0, Fraction(1, 4), trials=10, j_max=10, seed=4)
        assert rep["violations"] == 0
        assert all(r["max_error_after_step0"] == 0 for r in rep["records"])

    def test_broken_precondition_is_flagged(self):
        rep = proposition1_harness(Fraction(2, 5), Fraction(1, 5), trials=30, j_max=10, seed=2)
        assert not rep["precondition_ok"]
        assert rep["violations"] > 0


class TestContraction:
    def test_perturbed_quotient(self):
        rng = make_rng(0, 5)
        q = random_tanh_perturbation(rng, c1_bound=Fraction(1, 5))
        g = PerturbedMap(ExtendedMap(machines.unary_increment()), q)
        rep = contraction_check(g, samples=60, seed=1)
        assert rep["bound"] <= 0.7 and rep["violations"] == 0

    def test_unperturbed_quotient(self):
        rep = contraction_check(PerturbedMap(ExtendedMap(machines.looper())), samples=40, seed=2)
        assert rep["max_quotient"] <= 0.5 and rep["violations"] == 0

    def test_no_certificate(self):
        q = TanhPerturbation(amplitudes=((Dyadic(1),) * 3,) * 3)
        with pytest.raises(NoContractionCertificate):
            contraction_check(PerturbedMap(ExtendedMap(machines.looper()), q), 5, 0)


class TestSink:
    def test_unperturbed(self):
        s = sink_locate(PerturbedMap(ExtendedMap(machines.looper())), k=100)
        assert s.centre == (Dyadic(0),) * 3 and s.radius == 0

    def test_constant_shift(self):
        c = (Dyadic(1, -7), Dyadic(-1, -8), Dyadic(0))
        g = PerturbedMap(ExtendedMap(machines.looper()), TanhPerturbation.constant_shift(c))
        s = sink_locate(g, k=1000)
        for iv, v in zip(s.enclosure(), c):
            assert iv.contains(v)
        assert s.radius < Dyadic(1, -9)

    def test_no_contraction(self):
        q = TanhPerturbation(amplitudes=((Dyadic(1, -1),) * 3,) * 3)
        with pytest.raises(NoContractionCertificate):
            sink_locate(PerturbedMap(ExtendedMap(machines.looper()), q), 10)


class TestBasinVsHalting:
    def test_halting_machine_attracted(self):
        m = machines.bb2_clear()
        c = initial_configuration(m, "")
        _, t_halt = run(m, c, 1000)
        q = random_tanh_perturbation(make_rng(3, 1), c0_bound=Fraction(1, 20), c1_bound=Fraction(1, 20))
        res = basin_vs_halting(PerturbedMap(ExtendedMap(m), q), c, horizon=t_halt + 10, epsilon=Fraction(1, 5))
        assert isinstance(res, HaltsAndAttracted) and res.step <= t_halt + 5

    def test_halting_configuration_itself(self):
        m = machines.bb2_clear()
        res = basin_vs_halting(PerturbedMap(ExtendedMap(m)), Configuration((), (), m.halt), 5, Fraction(1, 5))
        assert res == HaltsAndAttracted(0)

    def test_looper_never_attracted(self):
        m = machines.looper()
        c = initial_configuration(m, "")
        eps = Fraction(1, 5)
        q = random_tanh_perturbation(make_rng(3, 2), c0_bound=eps / 4, c1_bound=eps / 4, saturate=True)
        res = basin_vs_halting(PerturbedMap(ExtendedMap(m), q), c, horizon=300, epsilon=eps)
        assert isinstance(res, NotAttractedWithinHorizon)
        assert res.min_distance >= 0.5 - float(eps)

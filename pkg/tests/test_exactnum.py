from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from noncomp_lab.errors import (
    ConsistencyViolation,
    DivisorContainsZero,
    OverflowBudgetExceeded,
    PrefixTooShort,
)
from noncomp_lab.exactnum import (
    Dyadic,
    Interval,
    LeftRealApprox,
    iv_eval,
    name_from_cauchy,
    partial_sum,
    precision,
)
from noncomp_lab.recursion import synthetic_prefix

mpmath.mp.dps = 100

BUMP = "exp(-(x*x) / (1 - x*x))"


def mp_of(d: Dyadic):
    return mpmath.mpf(d.mantissa) * mpmath.mpf(2) ** d.exponent


def encloses(iv: Interval, value) -> bool:
    return mp_of(iv.lo) <= value <= mp_of(iv.hi)


dyadics = st.builds(Dyadic, st.integers(-(2**40), 2**40), st.integers(-60, 10))


class TestDyadic:
    def test_canonical_form(self):
        d = Dyadic(12, 0)
        assert (d.mantissa, d.exponent) == (3, 2)
        assert Dyadic(0, 7).exponent == 0
        assert Dyadic(6, -1) == Dyadic(3)

    @given(dyadics, dyadics)
    def test_exact_ring_ops(self, a, b):
        fa, fb = a.to_fraction(), b.to_fraction()
        assert (a + b).to_fraction() == fa + fb
        assert (a - b).to_fraction() == fa - fb
        assert (a * b).to_fraction() == fa * fb
        assert (a * b).mantissa % 2 == 1 or (a * b).mantissa == 0

    @given(dyadics)
    def test_string_roundtrip(self, d):
        assert Dyadic.parse(str(d)) == d

    def test_non_dyadic_fraction_rejected(self):
        with pytest.raises(ValueError):
            Dyadic.coerce(Fraction(1, 3))

    def test_mantissa_cap(self):
        with precision(cap=64):
            with pytest.raises(OverflowBudgetExceeded):
                Dyadic(2**70 + 1) * Dyadic(3)


class TestIvEval:
    def test_square_of_symmetric_interval(self):
        r = iv_eval("x*x", {"x": Interval(-1, 1)})
        assert r.lo <= 0 and r.hi >= 1

    def test_exp_zero(self):
        r = iv_eval("exp(0)")
        assert r.contains(1)
        assert r.width() <= Dyadic(1, -50)

    def test_exp_minus_third(self):
        r = iv_eval("exp(-1/3)")
        assert encloses(r, mpmath.exp(mpmath.mpf(-1) / 3))
        assert r.width() <= Dyadic(1, -40)
        assert abs(float(r) - 0.71653131) < 1e-8

    def test_division_by_zero_interval(self):
        with pytest.raises(DivisorContainsZero):
            iv_eval("1 / x", {"x": Interval(-1, 1)})

    def test_unsupported_syntax(self):
        with pytest.raises(ValueError):
            iv_eval("x ** y", {"x": 1, "y": 2})
        with pytest.raises(ValueError):
            iv_eval("sin(x)", {"x": 1})

    @given(st.integers(-(2**20) + 1, 2**20 - 1), st.integers(-6, 6))
    def test_bump_soundness(self, m, j):
        x = Dyadic(m, -20)
        got = iv_eval(BUMP, {"x": x})
        xm = mp_of(x)
        assert encloses(got, mpmath.exp(-xm * xm / (1 - xm * xm)))
        got = iv_eval("exp(y) * y - y / 3", {"y": Dyadic(m, -20 + j)})
        y = mp_of(Dyadic(m, -20 + j))
        assert encloses(got, mpmath.exp(y) * y - y / 3)

    @given(st.integers(-900, 900), st.integers(1, 40))
    def test_width_control(self, c, w):
        centre = Fraction(c, 1024)
        wide = Interval(Dyadic.coerce(centre - Fraction(w, 2**14)), Dyadic.coerce(centre + Fraction(w, 2**14)))
        narrow = Interval(Dyadic.coerce(centre - Fraction(w, 2**15)), Dyadic.coerce(centre + Fraction(w, 2**15)))
        assert iv_eval(BUMP, {"x": narrow}).width() <= iv_eval(BUMP, {"x": wide}).width()

    @given(dyadics, dyadics)
    def test_interval_contains_pointwise_product(self, a, b):
        lo, hi = min(a, b), max(a, b)
        box = Interval(lo, hi)
        got = box * box - box
        for p in (lo, hi, Interval(lo, hi).mid()):
            assert got.contains(p * p - p)


class TestPartialSum:
    @pytest.mark.parametrize(
        "values, M, shift, expected",
        [([1], 0, 0, Fraction(1, 2)), ([0, 1, 2], 2, 0, Fraction(7, 4)), ([3, 1, 4, 0], 3, 2, Fraction(27, 64))],
    )
    def test_examples(self, values, M, shift, expected):
        assert partial_sum(values, M, shift).to_fraction() == expected

    def test_prefix_too_short(self):
        with pytest.raises(PrefixTooShort):
            partial_sum([1, 2], 2)

    @given(st.lists(st.integers(0, 80), min_size=1, max_size=40, unique=True), st.integers(0, 5))
    def test_monotone_and_exact(self, values, shift):
        prefix = synthetic_prefix(values)
        sums = [partial_sum(prefix, M, shift) for M in range(len(values))]
        assert all(a <= b for a, b in zip(sums, sums[1:]))
        assert sums[-1].to_fraction() == sum(Fraction(1, 2 ** (v + shift)) for v in values)
        approx = LeftRealApprox.from_prefix(prefix, shift)
        assert approx.lower(len(values) - 1).contains(sums[-1])


class TestNames:
    def test_constant_zero(self):
        name = name_from_cauchy(lambda k: 0)
        assert name.enclosure(10).contains(0)

    def test_one_third(self):
        name = name_from_cauchy(lambda k: Dyadic((2 ** (k + 2)) // 3, -(k + 2)), check_upto=40)
        for k in (0, 5, 30):
            assert name.enclosure(k).contains(Dyadic.round_fraction(Fraction(1, 3), 200, False))
            assert abs(name(k).to_fraction() - Fraction(1, 3)) <= Fraction(1, 2**k)

    def test_alternating_violates(self):
        with pytest.raises(ConsistencyViolation) as exc:
            name_from_cauchy(lambda k: (-1) ** k)
        assert exc.value.k == 0

    def test_modulus_assertion_required(self):
        with pytest.raises(ValueError):
            name_from_cauchy(lambda k: 0, modulus_ok=False)

"""Bump functions, the series with a robustly non-computable derivative, and
the removably non-computable piecewise-affine map.

``f(x) = sum_{k>=2} psi_k(x - a(k))`` with ``psi_k(y) = psi(k^2 y) / k`` and
``psi(y) = phi(y - 1/2)``.  Distinct integers carry disjoint term supports,
so at most one term is nonzero at any point; that locality is what makes
``f`` evaluable from a finite prefix while ``f'`` at the integers encodes
membership in the enumerated set.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import GapViolation, PrefixTooShort
from .exactnum import Dyadic, Interval, LowerBound, get_precision, partial_sum
from .recursion import EnumerationPrefix

HALF = Dyadic(1, -1)
ONE = Dyadic(1)
ZERO = Dyadic(0)

# phi' is decreasing on [0, 3/4] and increasing on [25/32, 1]; its minimum
# (about -2.1704 at x ~ 0.7598) lies in between.
_PP_LEFT = Dyadic(3, -2)
_PP_RIGHT = Dyadic(25, -5)
# argmin of phi', rounded to a dyadic; used to aim adversarial perturbations
PHI_PRIME_ARGMIN = Dyadic(0x6142, -15)  # 0.759827, true argmin 0.759836


def _phi_point(d: Dyadic) -> Interval:
    d = abs(d)
    if d >= ONE:
        return Interval(0)
    x = Interval(d)
    x2 = x.sqr()
    return (-(x2 / (1 - x2))).exp()


def phi(x) -> Interval:
    """Canonical bump ``exp(-x^2/(1-x^2))`` on ``|x| < 1``, zero outside."""
    a = abs(Interval.coerce(x))
    if a.lo >= ONE:
        return Interval(0)
    lo = _phi_point(a.hi).lo
    hi = _phi_point(a.lo).hi
    return Interval._make(lo, hi)


def _phi_prime_natural(x: Interval) -> Interval:
    x2 = x.sqr()
    one_minus = 1 - x2
    return -2 * x / one_minus.sqr() * (-(x2 / one_minus)).exp()


def _phi_prime_point(d: Dyadic) -> Interval:
    if abs(d) >= ONE:
        return Interval(0)
    return _phi_prime_natural(Interval(d))


def _phi_prime_nonneg(lo: Dyadic, hi: Dyadic) -> Interval:
    parts = []
    a, b = lo, min(hi, _PP_LEFT)
    if a <= b:
        parts.append(Interval._make(_phi_prime_point(b).lo, _phi_prime_point(a).hi))
    a, b = max(lo, _PP_LEFT), min(hi, _PP_RIGHT)
    if a <= b:
        # subdivide the non-monotone piece to tame dependency overestimation
        step = (b - a) * Dyadic(1, -4)
        for i in range(16):
            parts.append(_phi_prime_natural(Interval._make(a + step * i, a + step * (i + 1))))
    a, b = max(lo, _PP_RIGHT), min(hi, ONE)
    if a <= b:
        parts.append(Interval._make(_phi_prime_point(a).lo, _phi_prime_point(b).hi))
    if hi >= ONE:
        parts.append(Interval(0))
    return Interval.hull_of(parts)


def phi_prime(x) -> Interval:
    """Enclosure of ``phi'(x) = -2x/(1-x^2)^2 * phi(x)`` (zero for ``|x| >= 1``)."""
    x = Interval.coerce(x)
    parts = []
    if x.hi.sign() >= 0:
        parts.append(_phi_prime_nonneg(max(x.lo, ZERO), x.hi))
    if x.lo.sign() < 0:
        parts.append(-_phi_prime_nonneg(max(-x.hi, ZERO), -x.lo))
    return Interval.hull_of(parts)


@functools.lru_cache(maxsize=None)
def phi_prime_at_minus_half() -> Interval:
    return phi_prime(-HALF)


@functools.lru_cache(maxsize=None)
def phi_prime_sup() -> Dyadic:
    """Certified upper bound on ``sup |phi'|``."""
    lo, hi = _PP_LEFT, _PP_RIGHT
    n = 32
    step = (hi - lo) * Dyadic(1, -5)
    best = ZERO
    for i in range(n):
        piece = _phi_prime_natural(Interval._make(lo + step * i, lo + step * (i + 1)))
        best = max(best, piece.mag())
    return best


def psi_k(y, k: int) -> Interval:
    """``psi_k(y) = phi(k^2 y - 1/2) / k``."""
    y = Interval.coerce(y)
    return phi(y * (k * k) - HALF) / k


def psi_k_prime(y, k: int) -> Interval:
    y = Interval.coerce(y)
    return phi_prime(y * (k * k) - HALF) * k


def phi_numpy(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1
    xi = x[inside]
    out[inside] = np.exp(-xi * xi / (1 - xi * xi))
    return out


def phi_prime_numpy(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1
    xi = x[inside]
    den = 1 - xi * xi
    out[inside] = -2 * xi / (den * den) * np.exp(-xi * xi / den)
    return out


# ---------------------------------------------------------------------------
# The series f and its derivative at the integers
# ---------------------------------------------------------------------------

DEFAULT_SCAN_CAP = 2**20


def _term_region(n: int) -> Interval:
    # every psi_k(. - n), k >= 2, is supported inside (n - 1/8, n + 3/8)
    return Interval._make(Dyadic(8 * n - 1, -3), Dyadic(8 * n + 3, -3))


def pr_f_eval(x, p: int, prefix: EnumerationPrefix, cap: int = DEFAULT_SCAN_CAP) -> Interval:
    """Enclosure of ``f(x)`` accurate to ``2**-p``.

    Requires ``a(k)`` for ``k < 2**p``; any term with a larger index is at
    most ``1/k <= 2**-p`` in size.  Locality sharpens this: inside the
    region of an integer ``n`` only the term with ``a(k) = n`` can be
    nonzero, so an ``n`` found in the prefix gives an exact enclosure and
    ``n = a(0)`` or ``a(1)`` gives exactly zero.
    """
    if p < 1:
        raise ValueError("precision p must be >= 1")
    scan = 2**p
    if scan > cap or len(prefix) < scan:
        raise PrefixTooShort(
            f"certifying 2^-{p} needs a(k) for k < {scan}; prefix has {len(prefix)} values (cap {cap})"
        )
    X = Interval.coerce(x)
    L = len(prefix)
    tail_hi = Dyadic.round_fraction(Fraction(1, L), 64, up=True)
    parts: list[Interval] = []
    covered = False
    for n in range(X.lo.floor() - 1, X.hi.ceil() + 2):
        region = _term_region(n)
        S = X.intersection(region)
        if S is None:
            continue
        if region.contains(X):
            covered = True
        k = prefix.index_of(n)
        if k is not None:
            if k >= 2:
                parts.append(psi_k(S - n, k))
            else:
                parts.append(Interval(0))
            continue
        # an unknown index k >= L could still map to n; its support is
        # (n - 1/(2k^2), n + 3/(2k^2)) and its size at most 1/k <= 1/L
        y = S - n
        if y.lo >= Dyadic.round_fraction(Fraction(3, 2 * L * L), 64, up=True) or y.hi <= -Dyadic.round_fraction(
            Fraction(1, 2 * L * L), 64, up=True
        ):
            parts.append(Interval(0))
        else:
            parts.append(Interval._make(ZERO, tail_hi))
    if not covered:
        parts.append(Interval(0))
    return Interval.hull_of(parts)


def pr_f_truncated_eval(x: float, prefix: EnumerationPrefix) -> float:
    """Float value of the sum over the known terms only (plotting helper)."""
    n = int(np.floor(x + 1 / 8))
    k = prefix.index_of(n)
    if k is None or k < 2:
        return 0.0
    return float(phi_numpy(np.array([k * k * (x - n) - 0.5]))[0]) / k


@dataclass(frozen=True)
class DerivativeValue:
    k: int
    value: Interval


@dataclass(frozen=True)
class ZeroSoFar:
    """No index ``k >= 2`` in the prefix maps to ``n``.

    This is *not* a certificate that ``f'(n) = 0``: a longer prefix may
    still reveal ``n = a(k)``.  Deciding which case holds in general is
    exactly as hard as membership in the enumerated set.
    """


def pr_f_prime_at_integer(n: int, prefix: EnumerationPrefix) -> DerivativeValue | ZeroSoFar:
    """``f'(n) = k phi'(-1/2)`` when ``n = a(k)``, ``k >= 2``, is visible in the prefix."""
    k = prefix.index_of(n)
    if k is None or k < 2:
        return ZeroSoFar()
    return DerivativeValue(k, phi_prime_at_minus_half() * k)


class Membership(str, Enum):
    IN_A = "InA"
    NOT_IN_A = "NotInA"


MU_HIGH = Fraction(5, 3)
MU_LOW = Fraction(1, 3)


def mu_enclosure(gprime_n) -> Interval:
    return Interval.coerce(gprime_n) / phi_prime_at_minus_half()


def mu_threshold_decide(n: int, gprime_n, prefix: EnumerationPrefix) -> Membership:
    """Decide ``n in A`` from an enclosure of ``g'(n)`` for ``g`` near ``f``.

    ``n = a(0)``, ``n = a(1)`` or ``mu >= 5/3`` means ``InA``; ``mu < 1/3``
    means ``NotInA``.  An enclosure meeting ``[1/3, 5/3)`` raises
    :class:`GapViolation`.
    """
    if n in prefix.values[:2]:
        return Membership.IN_A
    mu = mu_enclosure(gprime_n)
    if mu.lo.to_fraction() >= MU_HIGH:
        return Membership.IN_A
    if mu.hi.to_fraction() < MU_LOW:
        return Membership.NOT_IN_A
    raise GapViolation(n, mu)


@dataclass(frozen=True)
class RobustSeries:
    """The series ``f`` over a prefix, with the neighbourhood radius ``1/alpha``."""

    prefix: EnumerationPrefix
    alpha: Dyadic = Dyadic(5, -1)

    def __post_init__(self):
        if not (phi_prime_at_minus_half() * self.alpha).lo > 3:
            raise ValueError("alpha must satisfy alpha * phi'(-1/2) > 3")

    @property
    def radius(self) -> Fraction:
        return 1 / self.alpha.to_fraction()

    def eval(self, x, p: int) -> Interval:
        return pr_f_eval(x, p, self.prefix)

    def derivative_at(self, n: int) -> Interval:
        d = pr_f_prime_at_integer(n, self.prefix)
        return d.value if isinstance(d, DerivativeValue) else Interval(0)


# ---------------------------------------------------------------------------
# Example (c): the removable piecewise-affine map
# ---------------------------------------------------------------------------

def _rational_enclosure(q: Fraction) -> Interval:
    if q.denominator & (q.denominator - 1) == 0:
        return Interval(Dyadic.coerce(q))
    bits = get_precision().bits
    return Interval._make(Dyadic.round_fraction(q, bits, up=False), Dyadic.round_fraction(q, bits, up=True))


def removable_phi_eval(x, prefix: EnumerationPrefix) -> Interval | LowerBound:
    """Value of the even, piecewise-affine map whose value at 0 is ``sum 2^-a(m)``.

    ``x`` may be any rational (``1/n`` is rarely dyadic).  The value is an
    exact rational; it comes back as a point interval whenever it is dyadic,
    which includes every ``x = +-1/n`` and every ``|x| >= 1``.  At ``x = 0``
    only a lower bound is available: the partial sum over the whole prefix.
    """
    q = abs(Dyadic.coerce(x).to_fraction() if isinstance(x, (Dyadic, str)) else Fraction(x))
    vals = prefix.values
    if q == 0:
        if not vals:
            raise PrefixTooShort("empty prefix gives no lower bound")
        return LowerBound(partial_sum(vals, len(vals) - 1))
    if q >= 1:
        if len(vals) < 2:
            raise PrefixTooShort("x >= 1 needs a(0) and a(1)")
        return Interval(partial_sum(vals, 1))
    n = int(1 / q)  # 1/(n+1) < x <= 1/n
    if q * n == 1:
        if len(vals) < n + 1:
            raise PrefixTooShort(f"x = 1/{n} needs {n + 1} values")
        return Interval(partial_sum(vals, n))
    if len(vals) < n + 2:
        raise PrefixTooShort(f"x in (1/{n + 1}, 1/{n}) needs {n + 2} values")
    s_n = partial_sum(vals, n).to_fraction()
    # linear between (1/(n+1), S_{n+1}) and (1/n, S_n)
    value = s_n + Fraction(1, 2 ** vals[n + 1]) * (1 - n * q) * (n + 1)
    return _rational_enclosure(value)


# ---------------------------------------------------------------------------
# Perturbations and the robustness harness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BumpPerturbation:
    """``q(x) = c0 + sum_j c_j phi((x - p_j) / w_j)`` with closed-form norm bounds."""

    constant: Dyadic = ZERO
    terms: tuple[tuple[Dyadic, Dyadic, Dyadic], ...] = ()  # (coefficient, center, width)

    def value(self, x) -> Interval:
        x = Interval.coerce(x)
        total = Interval(self.constant)
        for c, p, w in self.terms:
            total = total + phi((x - p) / w) * c
        return total

    def derivative(self, x) -> Interval:
        x = Interval.coerce(x)
        total = Interval(0)
        for c, p, w in self.terms:
            total = total + phi_prime((x - p) / w) * c / w
        return total

    def c0_bound(self) -> Fraction:
        return abs(self.constant.to_fraction()) + sum(abs(c.to_fraction()) for c, _, _ in self.terms)

    def c1_bound(self) -> Fraction:
        s = phi_prime_sup().to_fraction()
        return sum(abs(c.to_fraction()) * s / w.to_fraction() for c, _, w in self.terms)

    def norm1_bound(self) -> Fraction:
        """Certified ``max(sup|q|, sup|q'|)``."""
        return max(self.c0_bound(), self.c1_bound())

    def scaled(self, factor: Dyadic) -> "BumpPerturbation":
        return BumpPerturbation(
            self.constant * factor, tuple((c * factor, p, w) for c, p, w in self.terms)
        )


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based generator keyed by ``seed`` and a stream path."""
    return np.random.Generator(np.random.Philox(key=seed, counter=list(stream) + [0] * (4 - len(stream))))


def _dyadic_uniform(rng: np.random.Generator, lo: float, hi: float, bits: int = 20) -> Dyadic:
    return Dyadic.round_fraction(Fraction(float(rng.uniform(lo, hi))), bits, up=False)


def random_perturbation(
    rng: np.random.Generator, scale: Fraction, targets: Sequence[int], adversarial: bool
) -> BumpPerturbation:
    """A random bump combination with certified ``||q||_1 <= scale``.

    Adversarial draws use a single bump aimed so that ``|q'|`` reaches its
    certified bound at one target integer.
    """
    if scale == 0:
        return BumpPerturbation()
    if adversarial:
        n = int(rng.choice(np.asarray(targets)))
        w = _dyadic_uniform(rng, 0.125, 1.0)
        sign = 1 if rng.random() < 0.5 else -1
        centre = Dyadic(n) - w * PHI_PRIME_ARGMIN * sign
        q = BumpPerturbation(ZERO, ((Dyadic(1), centre, w),))
        factor = Fraction(scale) / q.norm1_bound()
    else:
        m = int(rng.integers(1, 5))
        terms = []
        for _ in range(m):
            n = int(rng.choice(np.asarray(targets)))
            c = _dyadic_uniform(rng, -1.0, 1.0)
            p = Dyadic(n) + _dyadic_uniform(rng, -1.0, 1.0)
            w = _dyadic_uniform(rng, 0.125, 2.0)
            terms.append((c, p, w))
        const = _dyadic_uniform(rng, -1.0, 1.0)
        q = BumpPerturbation(const, tuple(terms))
        factor = Fraction(scale) / q.norm1_bound() * Fraction(float(rng.uniform(0.5, 1.0)))
    return q.scaled(Dyadic.round_fraction(factor, 48, up=False))


@dataclass
class HarnessReport:
    trials: int
    perturb_scale: Fraction
    alpha: Dyadic
    prefix_length: int
    records: list[dict] = field(default_factory=list)
    misclassifications: int = 0
    gap_violations: int = 0

    def to_json(self) -> dict:
        return {
            "format_version": 1,
            "kind": "derivative-harness",
            "trials": self.trials,
            "perturb_scale": str(self.perturb_scale),
            "alpha": str(self.alpha),
            "prefix_length": self.prefix_length,
            "misclassifications": self.misclassifications,
            "gap_violations": self.gap_violations,
            "records": self.records,
        }


def sample_nonmembers(prefix: EnumerationPrefix, count: int, rng: np.random.Generator) -> list[int]:
    top = (max(prefix.values) if prefix.values else 0) + 4 * count + 8
    pool = [n for n in range(top) if prefix.index_of(n) is None]
    picks = rng.choice(len(pool), size=min(count, len(pool)), replace=False)
    return sorted(pool[i] for i in picks)


def robust_derivative_harness(
    trials: int,
    perturb_scale,
    prefix: EnumerationPrefix,
    seed: int,
    alpha: Dyadic = Dyadic(5, -1),
    nonmembers: int = 20,
    adversarial_fraction: float = 0.5,
    trial_ids: Sequence[int] | None = None,
) -> HarnessReport:
    """Perturb ``f`` by ``q`` with ``||q||_1 <= perturb_scale`` and test the thresholds.

    For every sampled integer ``n`` the harness encloses
    ``mu = g'(n) / phi'(-1/2) = k + q'(n) / phi'(-1/2)`` (``k`` from the
    prefix, 0 when ``n`` is not listed) and runs :func:`mu_threshold_decide`.
    The ground truth is membership in the prefix, so every statement is
    relative to the visible part of the enumeration.  ``trial_ids`` runs a
    subset of the trials; each trial has its own random stream, so subsets
    can run in parallel and be merged in order.
    """
    scale = Fraction(perturb_scale) if not isinstance(perturb_scale, Dyadic) else perturb_scale.to_fraction()
    series = RobustSeries(prefix, alpha)
    rng0 = make_rng(seed, 0)
    outsiders = sample_nonmembers(prefix, nonmembers, rng0)
    members = list(prefix.values)
    report = HarnessReport(trials, scale, alpha, len(prefix))
    pp = phi_prime_at_minus_half()
    for t in range(trials) if trial_ids is None else trial_ids:
        rng = make_rng(seed, 1, t)
        targets = members[2:] + outsiders
        q = random_perturbation(rng, scale, targets, adversarial=rng.random() < adversarial_fraction)
        for n in members + outsiders:
            k = prefix.index_of(n)
            kk = k if (k is not None and k >= 2) else 0
            dq = q.derivative(n)
            mu = Interval(kk) + dq / pp
            gprime = series.derivative_at(n) + dq
            truth = Membership.IN_A if k is not None else Membership.NOT_IN_A
            rec = {
                "trial": t,
                "n": n,
                "k": k,
                "mu_lo": float(mu.lo),
                "mu_hi": float(mu.hi),
                "truth": truth.value,
            }
            try:
                verdict = mu_threshold_decide(n, gprime, prefix)
                rec["verdict"] = verdict.value
                if verdict != truth:
                    report.misclassifications += 1
                    rec["error"] = "misclassified"
            except GapViolation:
                rec["verdict"] = "GapViolation"
                report.gap_violations += 1
            report.records.append(rec)
    return report

"""A planar sink whose basin is a disk of left-computable squared radius.

The field is ``h(x) = f(|x|^2) x + (-x2, x1)`` for a profile ``f`` of the
squared radius ``w`` (called ``sq_radius`` in interfaces).  At level ``M``
the profile is

    f(w) = -rho_out(w) - sum_{m<=M} 2^{-(a(m)+m)} sigma_m(w)

where ``rho_out`` is positive exactly on ``(2, inf)`` and ``sigma_m`` is a
bump positive exactly on ``(-1/2, alpha_m)``.  So ``f < 0`` below
``alpha_M``, ``f = 0`` on ``[alpha_M, 2]`` and ``f < 0`` past 2; the basin
of the origin is the open disk ``w < alpha_M``, and ``alpha_M`` increases
to a limit that is only approximable from below.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Mapping

import numpy as np
from scipy.integrate import solve_ivp

from .constructions import make_rng, phi, phi_numpy, phi_prime, phi_prime_numpy, phi_prime_sup
from .errors import PrefixTooShort
from .exactnum import Dyadic, Interval, partial_sum
from .fields import PlanarField, Profile, RadialField, dyadic_upper_float
from .integrate import Trajectory, integrate_trajectory, interval_flow
from .recursion import EnumerationPrefix

HALF = Dyadic(1, -1)
TWO = Dyadic(2)
# max of d/du exp(-1/u) over u > 0 is 4 e^{-2}; a dyadic upper bound
RHO_OUT_SLOPE = Dyadic(0x8A96, -16)  # 0.541351 >= 4e^-2 = 0.541341


def _rho_point(w: Dyadic) -> Interval:
    if w <= TWO:
        return Interval(0)
    u = Interval(w - TWO)
    return (-(1 / u)).exp()


def rho_out(W) -> Interval:
    """``exp(-1/(w-2))`` for ``w > 2``, else 0 (increasing)."""
    W = Interval.coerce(W)
    return Interval._make(_rho_point(max(W.lo, TWO)).lo, _rho_point(max(W.hi, TWO)).hi)


def rho_out_prime(W) -> Interval:
    W = Interval.coerce(W)
    if W.hi <= TWO:
        return Interval(0)
    bound = Interval._make(Dyadic(0), RHO_OUT_SLOPE)
    if W.lo <= TWO:
        return bound
    U = W - TWO
    natural = (-(1 / U)).exp() / U.sqr()
    return natural.intersection(bound) or natural


@dataclass(frozen=True, eq=False)
class RadialProfile(Profile):
    """The level-``M`` profile, optionally shifted right by ``shift``."""

    prefix: EnumerationPrefix
    M: int
    shift: Dyadic = Dyadic(0)

    def __post_init__(self):
        if self.M < 0:
            raise ValueError("level M must be non-negative")
        if self.M >= len(self.prefix):
            raise PrefixTooShort(f"level {self.M} needs {self.M + 1} enumeration values, have {len(self.prefix)}")
        vals = self.prefix.values
        alphas = tuple(HALF + partial_sum(vals, m, shift=2) for m in range(self.M + 1))
        weights = tuple(Dyadic(1, -(vals[m] + m)) for m in range(self.M + 1))
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "_scales", tuple(a + HALF for a in alphas))

    # -- exact facts ------------------------------------------------------
    @property
    def alpha_M(self) -> Dyadic:
        return self.alphas[-1]

    @property
    def plateau(self) -> tuple[Dyadic, Dyadic]:
        """``[alpha_M + shift, 2 + shift]``, where the profile vanishes."""
        return (self.alpha_M + self.shift, TWO + self.shift)

    def sign_at(self, w) -> int:
        """Exact sign of ``f(w)``: -1 or 0.

        ``phi`` is positive exactly on ``(-1, 1)`` and ``rho_out`` exactly on
        ``(2, inf)``, so the sign follows from comparing ``w`` with the
        plateau ends; no numerical evaluation is involved.
        """
        u = Dyadic.coerce(w) - self.shift
        if u > TWO:
            return -1
        if u > Dyadic(-1, -1) and u < self.alpha_M:
            return -1
        return 0

    def vanishes_at(self, w) -> bool:
        return self.sign_at(w) == 0

    def lipschitz_bound(self) -> Dyadic:
        """Certified bound on ``|f'|`` over the real line."""
        s = phi_prime_sup()
        bumps = Dyadic(0)
        for wgt, sc in zip(self.weights, self._scales):
            # |sigma_m'| <= sup|phi'| * 2 / (alpha_m + 1/2) <= 2 sup|phi'| since alpha_m + 1/2 >= 1
            bumps = bumps + wgt * s * 2
        return max(bumps, RHO_OUT_SLOPE)

    def tail_bound(self) -> Dyadic:
        """C1 bound for the dropped terms ``m > M``: ``(1 + 2 sup|phi'|) 2^{-M}``."""
        return (1 + 2 * phi_prime_sup()) * Dyadic(1, -self.M)

    # -- evaluation -------------------------------------------------------
    def _args(self, W: Interval):
        U = W - self.shift
        for m in range(self.M + 1):
            yield m, (2 * U + HALF - self.alphas[m]) / self._scales[m]

    def value_iv(self, W) -> Interval:
        W = Interval.coerce(W)
        total = -rho_out(W - self.shift)
        for m, arg in self._args(W):
            total = total - phi(arg) * self.weights[m]
        return total

    def deriv_iv(self, W) -> Interval:
        W = Interval.coerce(W)
        total = -rho_out_prime(W - self.shift)
        for m, arg in self._args(W):
            total = total - phi_prime(arg) * self.weights[m] * 2 / self._scales[m]
        return total

    def value(self, w):
        u = np.asarray(w, dtype=float) - float(self.shift)
        out = np.zeros_like(u)
        outside = u > 2
        with np.errstate(divide="ignore", over="ignore"):
            out[outside] = -np.exp(-1.0 / (u[outside] - 2))
        for a, wgt, sc in zip(self.alphas, self.weights, self._scales):
            out -= float(wgt) * phi_numpy((2 * u + 0.5 - float(a)) / float(sc))
        return out

    def deriv(self, w):
        u = np.asarray(w, dtype=float) - float(self.shift)
        out = np.zeros_like(u)
        outside = u > 2
        v = u[outside] - 2
        with np.errstate(divide="ignore", over="ignore"):
            out[outside] = -np.exp(-1.0 / v) / (v * v)
        for a, wgt, sc in zip(self.alphas, self.weights, self._scales):
            out -= float(wgt) * phi_prime_numpy((2 * u + 0.5 - float(a)) / float(sc)) * 2 / float(sc)
        return out

    def describe(self):
        return {
            "kind": "plateau",
            "M": self.M,
            "alpha_M": str(self.alpha_M),
            "shift": str(self.shift),
            "prefix": list(self.prefix.values[: self.M + 1]),
            "caveat": "finite level M; the limit profile is not computable",
        }


def profile_build(prefix: EnumerationPrefix, M: int) -> RadialProfile:
    return RadialProfile(prefix, M)


def planar_field(profile: RadialProfile) -> RadialField:
    """``h = (x1 f(w) - x2, x2 f(w) + x1)`` on the evaluation disk of radius 4."""
    return RadialField(profile, Fraction(1), name="plateau", domain_radius=4.0)


def field_eval(F: PlanarField, x1, x2) -> tuple[Interval, Interval]:
    return F.eval_iv(x1, x2)


def ceil_log2(x: Fraction) -> int:
    """Smallest ``e`` with ``2^e >= x`` (for ``x > 0``)."""
    x = Fraction(x)
    e = x.numerator.bit_length() - x.denominator.bit_length()
    while Fraction(2) ** e < x:
        e += 1
    while Fraction(2) ** (e - 1) >= x:
        e -= 1
    return e


def theta_for_lipschitz(L, n: int) -> int:
    """``theta(n) = n + 2 + ceil(log2(L + 1))``, at least ``n + 3``."""
    return n + 2 + max(1, ceil_log2(Fraction(L) + 1))


def modulus_theta(profile: RadialProfile, n: int) -> int:
    """``|f(x) - f(y)| < 2^{-(n+2)}`` whenever ``|x - y| < 2^{-theta(n)}``."""
    return theta_for_lipschitz(profile.lipschitz_bound().to_fraction(), n)


def shift_profile(profile: RadialProfile, n: int) -> RadialProfile:
    """``g(w) = f(w - 2^{-theta(n)})``; the zero plateau moves right by the same amount."""
    return replace(profile, shift=profile.shift + Dyadic(1, -modulus_theta(profile, n)))


def field_from_params(params: Mapping[str, str]) -> RadialField:
    """Build the field from ``M``, optional shift level ``n`` and an enumeration source."""
    from .recursion import FAMILIES, dovetail_enumerate, synthetic_prefix

    M = int(params.get("M", 6))
    if "values" in params:
        prefix = synthetic_prefix([int(v) for v in str(params["values"]).split("-")])
    else:
        family = FAMILIES[params.get("family", "standard")]()
        prefix = dovetail_enumerate(family, int(params.get("budget", 128)))
    prof = profile_build(prefix, M)
    if "n" in params:
        prof = shift_profile(prof, int(params["n"]))
    return planar_field(prof)


# ---------------------------------------------------------------------------
# Certificates and estimates
# ---------------------------------------------------------------------------

def _circle_points(radius: Fraction, arcs: int) -> list[tuple[Fraction, Fraction]]:
    # rational parametrisation ((1 - t^2), 2t) / (1 + t^2) per quadrant keeps points exactly on the circle
    per = arcs // 4
    quarter = []
    for i in range(per):
        t = Fraction(i, per)
        d = 1 + t * t
        quarter.append(((1 - t * t) / d, 2 * t / d))
    pts = []
    for q in range(4):
        for c, s in quarter:
            for _ in range(q):
                c, s = -s, c
            pts.append((radius * c, radius * s))
    return pts


def _iv(q: Fraction) -> Interval:
    return Interval(q)


def inward_check(F: PlanarField, radius=3, arcs: int = 256) -> dict:
    """Certify ``x . h(x) < 0`` on the circle of the given radius.

    The circle is cut into ``arcs`` arcs; each arc lies in the box hull of
    its endpoints inflated by the sagitta bound ``chord^2 / (4 R)``, and the
    interval enclosure of ``x . h`` over that box must be negative.  For the
    radial fields ``x . h = w f(w)``, so this certifies ``dw/dt < 0``.
    """
    R = Fraction(radius)
    pts = _circle_points(R, arcs)
    worst = None
    failures = 0
    for i, (p, q) in enumerate(zip(pts, pts[1:] + pts[:1])):
        chord2 = (p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2
        sag = chord2 / (4 * R)
        box = []
        for k in range(2):
            lo, hi = min(p[k], q[k]) - sag, max(p[k], q[k]) + sag
            box.append(Interval._make(Dyadic.round_fraction(lo, 64, False), Dyadic.round_fraction(hi, 64, True)))
        h1, h2 = F.eval_iv(*box)
        dot = box[0] * h1 + box[1] * h2
        up = dot.hi
        worst = up if worst is None else max(worst, up)
        if not up.sign() < 0:
            failures += 1
    return {
        "format_version": 1,
        "kind": "inward-check",
        "radius": str(R),
        "arcs": len(pts),
        "inward": failures == 0,
        "failures": failures,
        "max_upper_x_dot_h": float(worst),
    }


def integrate_flow(F: PlanarField, x0, t_end: float, tol: float = 1e-10, mode: str = "fast", **kw):
    """Trajectory with an error bound (``fast``) or certified boxes (``certified``)."""
    if mode == "fast":
        return integrate_trajectory(F, x0, t_end, tol=tol, **kw)
    if mode == "certified":
        X = tuple(Interval.coerce(Dyadic.coerce(float(v))) if not isinstance(v, Interval) else v for v in x0)
        return interval_flow(F, X, Dyadic.round_fraction(Fraction(t_end), 32, False), **kw)
    raise ValueError("mode must be 'fast' or 'certified'")


def basin_radius_estimate(F: RadialField | RadialProfile, tol=Dyadic(1, -30)) -> Interval:
    """Enclosure of the squared basin radius by sign bisection on ``[1/2, 2]``.

    Keeps ``f(lo) < 0`` and ``f(hi) = 0``; the infimum of the zero
    plateau lies in ``[lo, hi]``.  Stops once the width is at most ``tol``.
    """
    prof = F.profile if isinstance(F, RadialField) else F
    tol = Dyadic.coerce(tol)
    lo, hi = HALF + prof.shift, TWO + prof.shift
    if prof.sign_at(lo) != -1 or prof.sign_at(hi) != 0:
        raise ValueError("profile does not have the expected sign pattern on [1/2, 2]")
    while hi - lo > tol:
        mid = (lo + hi) * HALF
        if prof.sign_at(mid) < 0:
            lo = mid
        else:
            hi = mid
    return Interval._make(lo, hi)


def sup_profile_difference(f: Profile, g: Profile, lo=-1, hi=16, samples: int = 4096) -> float:
    """Sampled upper bound of ``|f - g|`` on ``[lo, hi]`` (interval evaluation at each sample)."""
    best = Dyadic(0)
    for w in np.linspace(lo, hi, samples):
        W = Interval(Dyadic.coerce(float(w)))
        best = max(best, (f.value_iv(W) - g.value_iv(W)).mag())
    return dyadic_upper_float(best)


def field_distance_check(F: RadialField, G: RadialField, samples: int, seed: int, radius: float = 3.0) -> dict:
    """Compare ``||h - g||`` at random points of the disk with ``4 sup|f - g|``."""
    rng = make_rng(seed, 4)
    sup_fg = sup_profile_difference(F.profile, G.profile, 0, 16)
    worst = 0.0
    violations = 0
    for _ in range(samples):
        r = radius * math.sqrt(rng.random())
        a = 2 * math.pi * rng.random()
        x = (Interval(Dyadic.coerce(r * math.cos(a))), Interval(Dyadic.coerce(r * math.sin(a))))
        hf, hg = F.eval_iv(*x), G.eval_iv(*x)
        d = dyadic_upper_float(((hf[0] - hg[0]).sqr() + (hf[1] - hg[1]).sqr()).sqrt().hi)
        worst = max(worst, d)
        if d > 4 * sup_fg:
            violations += 1
    return {"samples": samples, "sup_profile_difference": sup_fg, "max_field_distance": worst,
            "bound": 4 * sup_fg, "violations": violations}


def radial_reference(F: RadialField, w0: float, t_end: float, t_eval=None, rtol=1e-11, atol=1e-13):
    """1-D reference solution of ``dw/dt = 2 w f(w)``."""
    sol = solve_ivp(lambda t, w: F.radial_rate(w), (0.0, t_end), [w0], t_eval=t_eval, rtol=rtol, atol=atol,
                    method="DOP853")
    return sol.t, sol.y[0]


@functools.lru_cache(maxsize=8)
def default_prefix(budget: int = 128) -> EnumerationPrefix:
    from .recursion import StandardFamily, dovetail_enumerate

    return dovetail_enumerate(StandardFamily(), budget)

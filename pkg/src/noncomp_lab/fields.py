"""Planar vector fields with float and interval evaluation.

Every field exposes vectorised numpy evaluation (``rhs``, ``jacobian``)
for fast integration and interval enclosures (``eval_iv``, ``jac_iv``)
for certificates.  Builtins cover polynomial fields, radially symmetric
fields ``h = p(|x|^2) x + omega J x`` and the two-well gradient field.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import SchemaError
from .exactnum import Dyadic, Interval

IvPair = tuple[Interval, Interval]
IvMatrix = tuple[tuple[Interval, Interval], tuple[Interval, Interval]]


def dyadic_upper_float(d: Dyadic) -> float:
    """Smallest float not below ``d``."""
    f = float(d)
    if Fraction(f) < d.to_fraction():
        f = math.nextafter(f, math.inf)
    return f


def dyadic_lower_float(d: Dyadic) -> float:
    f = float(d)
    if Fraction(f) > d.to_fraction():
        f = math.nextafter(f, -math.inf)
    return f


def float_interval(x: float) -> Interval:
    return Interval(Dyadic.coerce(float(x)))


class PlanarField:
    """Base class; subclasses implement the four evaluation hooks."""

    name = "field"
    domain_radius = 2.0

    def rhs(self, x: np.ndarray) -> np.ndarray:
        """Field at points ``x`` of shape ``(..., 2)``."""
        raise NotImplementedError

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        """Jacobians at points ``x`` of shape ``(..., 2)``; result ``(..., 2, 2)``."""
        raise NotImplementedError

    def eval_iv(self, x1, x2) -> IvPair:
        raise NotImplementedError

    def jac_iv(self, x1, x2) -> IvMatrix:
        raise NotImplementedError

    def describe(self) -> dict:
        return {"name": self.name}

    def lipschitz(self, radius: float | None = None, cells: int = 16) -> float:
        """Certified Euclidean Lipschitz constant on the closed disk of the given radius.

        The disk is covered by the cells of a ``cells x cells`` grid that meet
        it; on each cell the Frobenius norm of the interval Jacobian bounds
        the operator norm.
        """
        return _lipschitz_cached(self, radius if radius is not None else self.domain_radius, cells)

    def __hash__(self):
        return id(self)

    def __eq__(self, other):
        return self is other


@functools.lru_cache(maxsize=64)
def _lipschitz_cached(F: PlanarField, radius: float, cells: int) -> float:
    R = Dyadic.round_fraction(Fraction(radius), 30, up=True)
    step = (2 * R).to_fraction() / cells
    best = Dyadic(0)
    for i in range(cells):
        lo1 = Dyadic.round_fraction(-R.to_fraction() + i * step, 40, up=False)
        hi1 = Dyadic.round_fraction(-R.to_fraction() + (i + 1) * step, 40, up=True)
        for j in range(cells):
            lo2 = Dyadic.round_fraction(-R.to_fraction() + j * step, 40, up=False)
            hi2 = Dyadic.round_fraction(-R.to_fraction() + (j + 1) * step, 40, up=True)
            # skip cells that miss the disk
            near1 = min(abs(lo1.to_fraction()), abs(hi1.to_fraction())) if lo1.sign() * hi1.sign() > 0 else 0
            near2 = min(abs(lo2.to_fraction()), abs(hi2.to_fraction())) if lo2.sign() * hi2.sign() > 0 else 0
            if near1 * near1 + near2 * near2 > R.to_fraction() ** 2:
                continue
            J = F.jac_iv(Interval._make(lo1, hi1), Interval._make(lo2, hi2))
            frob = J[0][0].sqr() + J[0][1].sqr() + J[1][0].sqr() + J[1][1].sqr()
            best = max(best, frob.sqrt().hi)
    return dyadic_upper_float(best)


# ---------------------------------------------------------------------------
# Polynomial fields
# ---------------------------------------------------------------------------

Monomials = Mapping[tuple[int, int], Fraction]


def _parse_monomials(data: Mapping) -> dict[tuple[int, int], Fraction]:
    out = {}
    for key, c in data.items():
        if isinstance(key, str):
            try:
                i, j = (int(v) for v in key.split(","))
            except ValueError as exc:
                raise SchemaError(f"monomial key must look like 'i,j', got {key!r}") from exc
        else:
            i, j = key
        if i < 0 or j < 0:
            raise SchemaError("monomial exponents must be non-negative")
        out[(i, j)] = Fraction(c) if not isinstance(c, float) else Fraction(c)
    return out


@dataclass(eq=False)
class PolynomialField(PlanarField):
    """``h_r(x) = sum c_ij x1^i x2^j`` for ``r = 1, 2`` with exact rational coefficients."""

    comp1: Monomials
    comp2: Monomials
    name: str = "polynomial"
    domain_radius: float = 2.0
    _coeffs: list = field(init=False, repr=False)

    def __post_init__(self):
        self.comp1 = _parse_monomials(self.comp1)
        self.comp2 = _parse_monomials(self.comp2)
        self._coeffs = [
            [(i, j, float(c), _coeff_iv(c)) for (i, j), c in sorted(comp.items())] for comp in (self.comp1, self.comp2)
        ]

    def rhs(self, x):
        x = np.asarray(x, dtype=float)
        a, b = x[..., 0], x[..., 1]
        out = np.zeros_like(x)
        for r, terms in enumerate(self._coeffs):
            acc = np.zeros_like(a)
            for i, j, c, _ in terms:
                acc = acc + c * a**i * b**j
            out[..., r] = acc
        return out

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        a, b = x[..., 0], x[..., 1]
        out = np.zeros(x.shape[:-1] + (2, 2))
        for r, terms in enumerate(self._coeffs):
            for i, j, c, _ in terms:
                if i:
                    out[..., r, 0] += c * i * a ** (i - 1) * b**j
                if j:
                    out[..., r, 1] += c * j * a**i * b ** (j - 1)
        return out

    def eval_iv(self, x1, x2):
        x1, x2 = Interval.coerce(x1), Interval.coerce(x2)
        res = []
        for terms in self._coeffs:
            acc = Interval(0)
            for i, j, _, c in terms:
                acc = acc + c * (x1**i) * (x2**j)
            res.append(acc)
        return tuple(res)

    def jac_iv(self, x1, x2):
        x1, x2 = Interval.coerce(x1), Interval.coerce(x2)
        rows = []
        for terms in self._coeffs:
            d1, d2 = Interval(0), Interval(0)
            for i, j, _, c in terms:
                if i:
                    d1 = d1 + c * i * (x1 ** (i - 1)) * (x2**j)
                if j:
                    d2 = d2 + c * j * (x1**i) * (x2 ** (j - 1))
            rows.append((d1, d2))
        return tuple(rows)

    def describe(self):
        enc = lambda comp: {f"{i},{j}": str(c) for (i, j), c in sorted(comp.items())}
        return {"name": self.name, "kind": "polynomial", "h1": enc(self.comp1), "h2": enc(self.comp2)}


def _coeff_iv(c: Fraction) -> Interval:
    c = Fraction(c)
    if c.denominator & (c.denominator - 1) == 0:
        return Interval(Dyadic.coerce(c))
    return Interval._make(Dyadic.round_fraction(c, 96, up=False), Dyadic.round_fraction(c, 96, up=True))


def linear_field(a, b, c, d, name="linear") -> PolynomialField:
    """``h = (a x1 + b x2, c x1 + d x2)``."""
    return PolynomialField({(1, 0): a, (0, 1): b}, {(1, 0): c, (0, 1): d}, name=name)


def rotated_saddle(angle_num: int = 3, angle_den: int = 4) -> PolynomialField:
    """``R diag(1, -1) R^T`` for the rotation with cosine ``a/h`` and sine ``b/h`` (a Pythagorean triple)."""
    # exact rational rotation: (cos, sin) = (a, b) / sqrt(a^2 + b^2) for a Pythagorean pair
    hyp = math.isqrt(angle_num**2 + angle_den**2)
    if hyp * hyp != angle_num**2 + angle_den**2:
        raise ValueError("use a Pythagorean pair so the rotation is rational")
    cs, sn = Fraction(angle_num, hyp), Fraction(angle_den, hyp)
    # R diag(1,-1) R^T = [[c^2 - s^2, 2cs], [2cs, s^2 - c^2]]
    return linear_field(cs * cs - sn * sn, 2 * cs * sn, 2 * cs * sn, sn * sn - cs * cs, name="rotated_saddle")


def two_well_field() -> PolynomialField:
    """Gradient flow of ``x1^4/4 - x1^2/2 + x2^2/2``: sinks at ``(+-1, 0)``, saddle at the origin."""
    return PolynomialField({(1, 0): 1, (3, 0): -1}, {(0, 1): -1}, name="two_well")


# ---------------------------------------------------------------------------
# Radially symmetric fields
# ---------------------------------------------------------------------------

class Profile:
    """A scalar profile ``p(w)`` of the squared radius with interval enclosures."""

    def value(self, w: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def deriv(self, w: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def value_iv(self, w: Interval) -> Interval:
        raise NotImplementedError

    def deriv_iv(self, w: Interval) -> Interval:
        raise NotImplementedError

    def describe(self) -> dict:
        return {}


@dataclass(eq=False)
class PolynomialProfile(Profile):
    """``p(w) = sum_i c_i w^i``."""

    coeffs: tuple[Fraction, ...]

    def __post_init__(self):
        self.coeffs = tuple(Fraction(c) for c in self.coeffs)
        self._fl = np.array([float(c) for c in self.coeffs])
        self._iv = [_coeff_iv(c) for c in self.coeffs]

    def value(self, w):
        return np.polynomial.polynomial.polyval(w, self._fl)

    def deriv(self, w):
        return np.polynomial.polynomial.polyval(w, np.polynomial.polynomial.polyder(self._fl))

    def value_iv(self, w):
        w = Interval.coerce(w)
        acc = Interval(0)
        for c in reversed(self._iv):
            acc = acc * w + c
        return acc

    def deriv_iv(self, w):
        w = Interval.coerce(w)
        acc = Interval(0)
        for i in range(len(self._iv) - 1, 0, -1):
            acc = acc * w + self._iv[i] * i
        return acc

    def describe(self):
        return {"kind": "polynomial", "coeffs": [str(c) for c in self.coeffs]}


def radial_oracle_profile(rho2=Fraction(9, 25), sigma2=Fraction(81, 100), gain=4) -> PolynomialProfile:
    """``p(w) = gain (w - rho2)(sigma2 - w)``, or ``gain (w - rho2)`` when ``sigma2`` is None.

    The origin is a sink, ``|x|^2 = rho2`` a repelling cycle and
    ``|x|^2 = sigma2`` an attracting one, so the basin of the origin is the
    open disk of squared radius ``rho2``.
    """
    rho2, gain = Fraction(rho2), Fraction(gain)
    if sigma2 is None:
        return PolynomialProfile((-gain * rho2, gain))
    sigma2 = Fraction(sigma2)
    if not 0 < rho2 < sigma2:
        raise ValueError("need 0 < rho2 < sigma2")
    # gain * (-(w^2) + (rho2 + sigma2) w - rho2 sigma2)
    return PolynomialProfile((-gain * rho2 * sigma2, gain * (rho2 + sigma2), -gain))


@dataclass(eq=False)
class RadialField(PlanarField):
    """``h(x) = p(|x|^2) x + omega (-x2, x1)``; ``d|x|^2/dt = 2 |x|^2 p(|x|^2)``."""

    profile: Profile
    omega: Fraction = Fraction(1)
    name: str = "radial"
    domain_radius: float = 2.0

    def __post_init__(self):
        self.omega = Fraction(self.omega)
        self._om = float(self.omega)
        self._om_iv = _coeff_iv(self.omega)

    def rhs(self, x):
        x = np.asarray(x, dtype=float)
        a, b = x[..., 0], x[..., 1]
        p = self.profile.value(a * a + b * b)
        return np.stack([a * p - self._om * b, b * p + self._om * a], axis=-1)

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        a, b = x[..., 0], x[..., 1]
        w = a * a + b * b
        p, dp = self.profile.value(w), self.profile.deriv(w)
        out = np.empty(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = p + 2 * dp * a * a
        out[..., 0, 1] = 2 * dp * a * b - self._om
        out[..., 1, 0] = 2 * dp * a * b + self._om
        out[..., 1, 1] = p + 2 * dp * b * b
        return out

    def eval_iv(self, x1, x2):
        x1, x2 = Interval.coerce(x1), Interval.coerce(x2)
        p = self.profile.value_iv(x1.sqr() + x2.sqr())
        return (x1 * p - self._om_iv * x2, x2 * p + self._om_iv * x1)

    def jac_iv(self, x1, x2):
        x1, x2 = Interval.coerce(x1), Interval.coerce(x2)
        w = x1.sqr() + x2.sqr()
        p, dp = self.profile.value_iv(w), self.profile.deriv_iv(w)
        cross = 2 * dp * x1 * x2
        return (
            (p + 2 * dp * x1.sqr(), cross - self._om_iv),
            (cross + self._om_iv, p + 2 * dp * x2.sqr()),
        )

    def radial_rate(self, w: np.ndarray) -> np.ndarray:
        """``dw/dt`` as a function of the squared radius ``w``."""
        return 2 * w * self.profile.value(w)

    def describe(self):
        return {"name": self.name, "kind": "radial", "omega": str(self.omega), "profile": self.profile.describe()}


# ---------------------------------------------------------------------------
# Builtin registry and field-spec parsing
# ---------------------------------------------------------------------------

def _radial(params):
    rho2 = Fraction(params.get("rho2", "9/25"))
    default_sigma = Fraction(81, 100) if rho2 < Fraction(81, 100) else None
    sigma2 = params.get("sigma2", default_sigma)
    if sigma2 in ("none", "None"):
        sigma2 = None
    prof = radial_oracle_profile(rho2, None if sigma2 is None else Fraction(sigma2), Fraction(params.get("gain", 4)))
    F = RadialField(prof, Fraction(params.get("omega", 1)), name="radial")
    F.oracle = {"rho2": rho2, "sigma2": None if sigma2 is None else Fraction(sigma2)}
    return F


def _linear(params):
    return linear_field(*(Fraction(params.get(k, d)) for k, d in (("a", 1), ("b", 0), ("c", 0), ("d", 1))))


def _focus(params):
    s = Fraction(params.get("s", -1))
    return linear_field(s, -1, 1, s, name="focus")


BUILTIN_FIELDS: dict[str, Callable[[Mapping[str, str]], PlanarField]] = {
    "radial": _radial,
    "two_well": lambda p: two_well_field(),
    "linear": _linear,
    "source": lambda p: linear_field(1, 0, 0, 1, name="source"),
    "saddle": lambda p: linear_field(1, 0, 0, -1, name="saddle"),
    "rotated_saddle": lambda p: rotated_saddle(int(p.get("a", 3)), int(p.get("b", 4))),
    "focus": _focus,
}


def parse_field_spec(text: str) -> tuple[str, dict[str, str]]:
    """``'radial:rho2=1,gain=2'`` -> ``('radial', {'rho2': '1', 'gain': '2'})``."""
    name, _, rest = text.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, eq, value = item.partition("=")
        if not eq:
            raise SchemaError(f"field parameter {item!r} must be key=value")
        params[key.strip()] = value.strip()
    return name.strip(), params


def build_field(spec: str | Mapping) -> PlanarField:
    """Field from ``'name:key=value,...'`` or a JSON mapping.

    Mappings either name a builtin (``{"builtin": "radial", "params": {...}}``)
    or give polynomial components (``{"h1": {"1,0": 1}, "h2": {...}}``).
    Profiles built by :mod:`noncomp_lab.planarflow` use the name ``plateau``.
    """
    if isinstance(spec, str):
        name, params = parse_field_spec(spec)
    else:
        if "h1" in spec and "h2" in spec:
            return PolynomialField(spec["h1"], spec["h2"], name=spec.get("name", "polynomial"))
        if "builtin" not in spec:
            raise SchemaError("field spec needs 'builtin' or 'h1'/'h2'")
        name, params = spec["builtin"], {k: str(v) for k, v in spec.get("params", {}).items()}
    if name == "plateau":
        from .planarflow import field_from_params

        return field_from_params(params)
    if name not in BUILTIN_FIELDS:
        raise SchemaError(f"unknown field {name!r}; choose from {sorted(BUILTIN_FIELDS) + ['plateau']}")
    return BUILTIN_FIELDS[name](params)

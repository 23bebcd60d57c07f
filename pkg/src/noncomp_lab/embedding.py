"""A Turing machine as a discrete-time dynamical system on R^3.

Configurations are coded as integer triples, the one-step map ``f_M`` acts
on those triples, and a smooth extension ``f`` is built by gluing constant
plateaus with a compactly supported partition of bumps.  All distances use
the sup-norm, so balls are axis-aligned cubes and the plateau around a
configuration ``c`` is ``{x : ||x - c|| <= 1/4}``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .constructions import make_rng
from .errors import InvalidEncoding, NoContractionCertificate, WidthBlowup
from .exactnum import Dyadic, Interval, get_precision
from .recursion import Configuration, MachineSpec, tm_step

Box = tuple[Interval, Interval, Interval]

QUARTER = Dyadic(1, -2)
HALF = Dyadic(1, -1)
ZERO = Dyadic(0)


# ---------------------------------------------------------------------------
# Codec
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EncodedConfig:
    y1: int
    y2: int
    y3: int

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.y1, self.y2, self.y3)

    def as_box(self) -> Box:
        return (Interval(self.y1), Interval(self.y2), Interval(self.y3))


HALT_CODE = EncodedConfig(0, 0, 0)


class Codec:
    """Base-``b`` positional coding with ``b = |alphabet| + 1`` and blank as digit 0.

    ``y1`` holds the right word with the head cell as least significant
    digit, ``y2`` the left word read outward from the head, ``y3`` the state
    index.  Every halted configuration codes to ``(0, 0, 0)``.
    """

    def __init__(self, machine: MachineSpec):
        self.machine = machine
        self.base = len(machine.alphabet) + 1
        self._digit = {s: i for i, s in enumerate(machine.symbols)}

    def _word_to_int(self, word: Sequence[str]) -> int:
        value = 0
        for s in reversed(word):
            value = value * self.base + self._digit[s]
        return value

    def _int_to_word(self, value: int) -> tuple[str, ...]:
        out = []
        while value:
            value, d = divmod(value, self.base)
            out.append(self.machine.symbols[d])
        return tuple(out)

    def encode(self, c: Configuration) -> EncodedConfig:
        if c.state == self.machine.halt:
            return HALT_CODE
        return EncodedConfig(
            self._word_to_int(c.right), self._word_to_int(c.left), self.machine.state_index(c.state)
        )

    def is_valid(self, y: Sequence[int]) -> bool:
        y1, y2, y3 = y
        if min(y1, y2, y3) < 0 or y3 > self.machine.n_states:
            return False
        return y3 != 0 or (y1 == 0 and y2 == 0)

    def decode(self, e: EncodedConfig | Sequence[int]) -> Configuration:
        y = e.as_tuple() if isinstance(e, EncodedConfig) else tuple(int(v) for v in e)
        if not self.is_valid(y):
            raise InvalidEncoding(f"{y} is not a configuration code for {self.machine.name}")
        y1, y2, y3 = y
        state = self.machine.state_of(y3)
        return Configuration(self._int_to_word(y2), self._int_to_word(y1), state)


def encode(machine: MachineSpec, c: Configuration) -> EncodedConfig:
    return Codec(machine).encode(c)


def decode(machine: MachineSpec, e) -> Configuration:
    return Codec(machine).decode(e)


def fM_step(machine: MachineSpec, e: EncodedConfig | Sequence[int]) -> EncodedConfig:
    """Exact one-step map on codes; the halting code is fixed."""
    codec = Codec(machine)
    c = codec.decode(e)
    if c.state == machine.halt:
        return HALT_CODE
    return codec.encode(tm_step(machine, c))


def random_configuration(machine: MachineSpec, rng: np.random.Generator, max_len: int = 6) -> Configuration:
    """Uniformly drawn canonical non-halted configuration with short tape words."""
    syms = machine.symbols
    left = tuple(syms[i] for i in rng.integers(0, len(syms), size=int(rng.integers(0, max_len + 1))))
    right = tuple(syms[i] for i in rng.integers(0, len(syms), size=int(rng.integers(0, max_len + 1))))
    state = machine.state_of(int(rng.integers(1, machine.n_states + 1)))
    return Configuration.canonical(left, right, state, machine.blank)


# ---------------------------------------------------------------------------
# Smooth bumps with interval enclosures
# ---------------------------------------------------------------------------

_EXP_CLAMP = 512


def _smooth_step_point(t: Dyadic) -> Interval:
    if t <= 0:
        return Interval(0)
    if t >= 1:
        return Interval(1)
    T = Interval(t)
    z = 1 / T - 1 / (1 - T)
    if z.lo >= _EXP_CLAMP:
        return Interval._make(ZERO, Interval(-_EXP_CLAMP).exp().hi)
    if z.hi <= -_EXP_CLAMP:
        return Interval._make(1 - Interval(-_EXP_CLAMP).exp().hi, Dyadic(1))
    return 1 / (1 + z.exp())


def smooth_step(t) -> Interval:
    """Enclosure of the C-infinity step ``S`` (0 for ``t <= 0``, 1 for ``t >= 1``), increasing."""
    t = Interval.coerce(t)
    return Interval._make(_smooth_step_point(t.lo).lo, _smooth_step_point(t.hi).hi)


def plateau_bump(u) -> Interval:
    """1-D bump: 1 on ``|u| <= 1/4``, 0 on ``|u| >= 1/2``, ``S(2 - 4|u|)`` in between."""
    a = abs(Interval.coerce(u))
    return smooth_step(2 - 4 * a)


def smooth_step_numpy(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.where(t >= 1, 1.0, 0.0)
    inside = (t > 0) & (t < 1)
    ti = t[inside]
    with np.errstate(over="ignore"):
        out[inside] = 1.0 / (1.0 + np.exp(1.0 / ti - 1.0 / (1.0 - ti)))
    return out


def plateau_bump_numpy(u: np.ndarray) -> np.ndarray:
    return smooth_step_numpy(2 - 4 * np.abs(np.asarray(u, dtype=float)))


# the 1-D bump has slope at most 4 * max S' = 8
BUMP_SLOPE = 8


# ---------------------------------------------------------------------------
# The extended map
# ---------------------------------------------------------------------------

def _plateau_centre(box: Box) -> tuple[int, int, int] | None:
    centre = []
    for iv in box:
        n = (iv.lo + HALF).floor()
        if iv.lo < n - QUARTER or iv.hi > n + QUARTER:
            return None
        centre.append(n)
    return tuple(centre)


def _candidates(iv: Interval) -> range:
    # lattice points whose bump support (n - 1/2, n + 1/2) meets iv
    return range((iv.lo - HALF).floor(), (iv.hi + HALF).ceil() + 1)


@dataclass(frozen=True)
class ExtendedMap:
    """``f(x) = sum_c f_M(c) B(x - c)`` over codes ``c``, with ``B`` a product of plateau bumps.

    ``f`` equals ``f_M(c)`` on the whole plateau around every code, so the
    contraction inequality holds there with any ``lam > 0``; ``lam`` is the
    nominal constant reported to harnesses.  Lattice points that are not
    codes contribute nothing.
    """

    machine: MachineSpec
    lam: Dyadic = HALF
    codec: Codec = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "codec", Codec(self.machine))
        object.__setattr__(self, "_fm", functools.lru_cache(maxsize=65536)(self._fm_uncached))

    def _fm_uncached(self, y: tuple[int, int, int]) -> tuple[int, int, int] | None:
        if not self.codec.is_valid(y):
            return None
        return fM_step(self.machine, y).as_tuple()

    def fM(self, y: Sequence[int]) -> tuple[int, int, int] | None:
        return self._fm(tuple(int(v) for v in y))

    def eval_iv(self, box: Box) -> Box:
        box = tuple(Interval.coerce(v) for v in box)
        centre = _plateau_centre(box)
        if centre is not None:
            image = self.fM(centre) or (0, 0, 0)
            return tuple(Interval(v) for v in image)
        total = [Interval(0)] * 3
        for n1 in _candidates(box[0]):
            w1 = plateau_bump(box[0] - n1)
            if w1.is_zero():
                continue
            for n2 in _candidates(box[1]):
                w2 = plateau_bump(box[1] - n2)
                if w2.is_zero():
                    continue
                for n3 in _candidates(box[2]):
                    image = self.fM((n1, n2, n3))
                    if image is None or image == (0, 0, 0):
                        continue
                    w = w1 * w2 * plateau_bump(box[2] - n3)
                    total = [t + w * v for t, v in zip(total, image)]
        return tuple(total)

    def eval_float(self, x: Sequence[float]) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(3)
        ranges = [range(int(np.floor(v - 0.5)), int(np.ceil(v + 0.5)) + 1) for v in x]
        for n1 in ranges[0]:
            for n2 in ranges[1]:
                for n3 in ranges[2]:
                    image = self.fM((n1, n2, n3))
                    if image is None:
                        continue
                    w = np.prod(plateau_bump_numpy(x - np.array([n1, n2, n3])))
                    out += w * np.array(image, dtype=float)
        return out


# ---------------------------------------------------------------------------
# Perturbations
# ---------------------------------------------------------------------------

def _tanh_point(z: Dyadic) -> Interval:
    if z.sign() < 0:
        return -_tanh_point(-z)
    if z >= 256:
        return Interval._make(1 - Interval(-512).exp().hi, Dyadic(1))
    e = (2 * Interval(z)).exp()
    return 1 - 2 / (1 + e)


def iv_tanh(z) -> Interval:
    z = Interval.coerce(z)
    return Interval._make(_tanh_point(z.lo).lo, _tanh_point(z.hi).hi)


@dataclass(frozen=True)
class TanhPerturbation:
    """``q_i(x) = c_i + sum_k A_ik tanh(w_k (x_k - p_k))`` with certified sup-norm bounds."""

    constant: tuple[Dyadic, Dyadic, Dyadic] = (ZERO, ZERO, ZERO)
    amplitudes: tuple[tuple[Dyadic, ...], ...] = ((ZERO,) * 3,) * 3
    omegas: tuple[Dyadic, Dyadic, Dyadic] = (Dyadic(1),) * 3
    centres: tuple[Dyadic, Dyadic, Dyadic] = (ZERO, ZERO, ZERO)

    def eval_iv(self, box: Box) -> Box:
        t = [iv_tanh((Interval.coerce(box[k]) - self.centres[k]) * self.omegas[k]) for k in range(3)]
        out = []
        for i in range(3):
            acc = Interval(self.constant[i])
            for k in range(3):
                if self.amplitudes[i][k].mantissa:
                    acc = acc + t[k] * self.amplitudes[i][k]
            out.append(acc)
        return tuple(out)

    def eval_float(self, x: Sequence[float]) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        A = np.array([[float(a) for a in row] for row in self.amplitudes])
        w = np.array([float(v) for v in self.omegas])
        p = np.array([float(v) for v in self.centres])
        return np.array([float(c) for c in self.constant]) + A @ np.tanh(w * (x - p))

    def c0_norm(self) -> Fraction:
        """Upper bound on ``sup ||q||``."""
        return max(
            abs(self.constant[i].to_fraction()) + sum(abs(a.to_fraction()) for a in self.amplitudes[i])
            for i in range(3)
        )

    def lipschitz(self) -> Fraction:
        """Upper bound on ``sup ||Dq||`` (max row sum, as ``|tanh'| <= 1``)."""
        return max(
            sum(abs(self.amplitudes[i][k].to_fraction()) * abs(self.omegas[k].to_fraction()) for k in range(3))
            for i in range(3)
        )

    def c1_norm(self) -> Fraction:
        return max(self.c0_norm(), self.lipschitz())

    def scaled(self, factor: Dyadic) -> "TanhPerturbation":
        return TanhPerturbation(
            tuple(c * factor for c in self.constant),
            tuple(tuple(a * factor for a in row) for row in self.amplitudes),
            self.omegas,
            self.centres,
        )

    @classmethod
    def constant_shift(cls, c: Sequence) -> "TanhPerturbation":
        return cls(constant=tuple(Dyadic.coerce(v) for v in c))


def _dy(rng: np.random.Generator, lo: float, hi: float) -> Dyadic:
    return Dyadic.round_fraction(Fraction(float(rng.uniform(lo, hi))), 20, up=False)


def random_tanh_perturbation(
    rng: np.random.Generator,
    c0_bound: Fraction | None = None,
    c1_bound: Fraction | None = None,
    centre_scale: float = 8.0,
    saturate: bool = False,
) -> TanhPerturbation:
    """Random perturbation scaled so the requested certified norms hold.

    With ``saturate`` the constant term dominates and the C0 bound is met
    with equality, which is the worst case for orbit tracking.
    """
    if saturate:
        q = TanhPerturbation(constant=tuple(Dyadic(int(rng.choice([-1, 1]))) for _ in range(3)))
    else:
        q = TanhPerturbation(
            tuple(_dy(rng, -1, 1) for _ in range(3)),
            tuple(tuple(_dy(rng, -1, 1) for _ in range(3)) for _ in range(3)),
            tuple(_dy(rng, 0.25, 4) for _ in range(3)),
            tuple(_dy(rng, -1, centre_scale) for _ in range(3)),
        )
    factors = []
    if c0_bound is not None:
        factors.append(Fraction(c0_bound) / q.c0_norm())
    if c1_bound is not None and q.lipschitz() > 0:
        factors.append(Fraction(c1_bound) / q.c1_norm())
    if not factors:
        return q
    factor = min(factors)
    if not saturate:
        factor *= Fraction(float(rng.uniform(0.5, 1.0)))
    return q.scaled(Dyadic.round_fraction(factor, 48, up=False))


@dataclass(frozen=True)
class PerturbedMap:
    """``g = f + q``."""

    base: ExtendedMap
    perturbation: TanhPerturbation = TanhPerturbation()

    @property
    def c0_norm(self) -> Fraction:
        return self.perturbation.c0_norm()

    @property
    def c1_norm(self) -> Fraction:
        return self.perturbation.c1_norm()

    def eval_iv(self, box: Box) -> Box:
        fx = self.base.eval_iv(box)
        qx = self.perturbation.eval_iv(box)
        return tuple(a + b for a, b in zip(fx, qx))

    def eval_float(self, x) -> np.ndarray:
        return self.base.eval_float(x) + self.perturbation.eval_float(x)


def extended_eval(F: ExtendedMap | PerturbedMap, x) -> Box:
    return F.eval_iv(tuple(Interval.coerce(v) for v in x))


def _box_width(box: Box) -> Dyadic:
    return max(iv.width() for iv in box)


def _tighten(box: Box) -> Box:
    # drop excess mantissa bits so long orbits stay cheap
    bits = get_precision().bits
    out = []
    for iv in box:
        out.append(Interval._make(_round(iv.lo, bits, False), _round(iv.hi, bits, True)))
    return tuple(out)


def _round(d: Dyadic, bits: int, up: bool) -> Dyadic:
    if d.mantissa.bit_length() <= bits:
        return d
    return Dyadic.round_fraction(d.to_fraction(), bits, up=up)


def iterate(g: PerturbedMap | ExtendedMap, x0, j: int) -> list[Box]:
    """Enclosures of ``x0, g(x0), ..., g^j(x0)``; raises :class:`WidthBlowup` past width 1."""
    if j < 0:
        raise ValueError("j must be non-negative")
    x = tuple(Interval.coerce(v) for v in x0)
    orbit = [x]
    for step in range(j):
        x = _tighten(g.eval_iv(x))
        if _box_width(x) > 1:
            raise WidthBlowup(f"enclosure width exceeds 1 at step {step + 1}")
        orbit.append(x)
    return orbit


def sup_distance_upper(box: Box, point: Sequence) -> Dyadic:
    """Upper bound on ``sup_{x in box} ||x - point||``."""
    return max((iv - Interval.coerce(p)).mag() for iv, p in zip(box, point))


def box_distance_upper(a: Box, b: Box) -> Dyadic:
    return max((x - y).mag() for x, y in zip(a, b))


def box_distance_lower(a: Box, b: Box) -> Dyadic:
    return max((x - y).mig() for x, y in zip(a, b))


# ---------------------------------------------------------------------------
# Harnesses
# ---------------------------------------------------------------------------

def _harness_machines() -> list[MachineSpec]:
    from . import machines

    return [machines.unary_increment(), machines.increment_and_clear(), machines.looper(), machines.bb2_clear()]


def _offset_start(code: EncodedConfig, rng: np.random.Generator, radius: Fraction) -> Box:
    out = []
    for v in code.as_tuple():
        off = Dyadic.round_fraction(radius * Fraction(float(rng.uniform(-1, 1))), 24, up=False)
        out.append(Interval(Dyadic(v) + off))
    return tuple(out)


def proposition1_harness(
    delta, epsilon, trials: int, j_max: int, seed: int, machines: Sequence[MachineSpec] | None = None
) -> dict:
    """Orbit tracking under perturbations with ``||q|| <= delta`` from starts within ``epsilon``.

    Each trial draws a machine, a random configuration ``x0``, a start
    ``x0bar`` with ``||x0bar - x0|| <= epsilon`` and a perturbation, then
    checks ``||g^j(x0bar) - f_M^j(x0)|| <= epsilon`` for ``j <= j_max`` with
    interval enclosures (the check uses the upper end of the distance).
    """
    delta, epsilon = Fraction(delta), Fraction(epsilon)
    pool = list(machines) if machines is not None else _harness_machines()
    eps_d = Dyadic.round_fraction(epsilon, 64, up=False)
    records = []
    violations = 0
    for t in range(trials):
        rng = make_rng(seed, 2, t)
        M = pool[int(rng.integers(len(pool)))]
        F = ExtendedMap(M)
        saturate = bool(rng.random() < 0.5)
        q = random_tanh_perturbation(rng, c0_bound=delta, saturate=saturate) if delta > 0 else TanhPerturbation()
        g = PerturbedMap(F, q)
        c = random_configuration(M, rng, max_len=4)
        code = F.codec.encode(c)
        x = _offset_start(code, rng, epsilon)
        exact = code.as_tuple()
        errors = []
        bad_steps = []
        for j in range(j_max + 1):
            err = sup_distance_upper(x, exact)
            errors.append(float(err))
            if err > eps_d:
                bad_steps.append(j)
            x = _tighten(g.eval_iv(x))
            exact = F.fM(exact)
        if bad_steps:
            violations += 1
        records.append(
            {
                "trial": t,
                "machine": M.name,
                "start": list(code.as_tuple()),
                "c0_norm": float(q.c0_norm()),
                "max_error": max(errors),
                "max_error_after_step0": max(errors[1:]) if len(errors) > 1 else 0.0,
                "violating_steps": bad_steps[:10],
            }
        )
    return {
        "format_version": 1,
        "kind": "proposition1",
        "delta": str(delta),
        "epsilon": str(epsilon),
        "precondition_ok": bool(0 < delta < epsilon < Fraction(1, 2) and epsilon <= Fraction(1, 4))
        or (delta == 0 and epsilon <= Fraction(1, 4)),
        "trials": trials,
        "j_max": j_max,
        "violations": violations,
        "records": records,
    }


def contraction_check(g: PerturbedMap, samples: int, seed: int, radius=Fraction(1, 4)) -> dict:
    """Sample ``x`` in ``B(x0, radius)`` around random codes ``x0`` and bound the quotient.

    The certified quotient ``||g(x) - g(x0)|| / ||x - x0||`` is compared with
    ``theta + lam`` where ``theta`` is the certified C1 norm of ``q``.
    """
    theta = g.c1_norm
    lam = g.base.lam.to_fraction()
    bound = theta + lam
    if bound >= 1:
        raise NoContractionCertificate(f"theta + lambda = {float(bound)} >= 1")
    rng = make_rng(seed, 3)
    M = g.base.machine
    worst = Fraction(0)
    violations = 0
    zero_cases = 0
    for _ in range(samples):
        c = random_configuration(M, rng, max_len=4)
        code = g.base.codec.encode(c)
        x0 = code.as_box()
        x = _offset_start(code, rng, Fraction(radius))
        dist = box_distance_lower(x, x0)
        diff = box_distance_upper(g.eval_iv(x), g.eval_iv(x0))
        if dist.sign() == 0:
            zero_cases += 1
            if diff.sign() != 0:
                violations += 1
            continue
        quot = diff.to_fraction() / dist.to_fraction()
        worst = max(worst, quot)
        if quot > bound:
            violations += 1
    return {
        "format_version": 1,
        "kind": "contraction",
        "theta": float(theta),
        "lambda": float(lam),
        "bound": float(bound),
        "max_quotient": float(worst),
        "samples": samples,
        "coincident_samples": zero_cases,
        "violations": violations,
    }


@dataclass(frozen=True)
class SinkLocation:
    centre: tuple[Dyadic, Dyadic, Dyadic]
    radius: Dyadic  # certified sup-norm distance bound to the true fixed point
    iterations: int

    def enclosure(self) -> Box:
        return tuple(Interval._make(c - self.radius, c + self.radius) for c in self.centre)


def sink_locate(g: PerturbedMap, k: int, max_iter: int = 200) -> SinkLocation:
    """Fixed point of ``g`` near the halting code, within ``1/k`` in sup-norm.

    On ``B(0, 1/4)`` the base map is constant, so ``g`` is Lipschitz with
    constant at most ``theta <= theta + lam =: L``.  Banach iteration from
    the origin is stopped once the a-posteriori bound
    ``||x_n - s_g|| <= ||g(x_n) - x_n|| / (1 - L)`` falls below ``1/k``;
    the self-map condition ``||g(0)|| <= (1 - L)/4`` certifies uniqueness in
    the plateau.
    """
    L = g.c1_norm + g.base.lam.to_fraction()
    if L >= 1:
        raise NoContractionCertificate(f"theta + lambda = {float(L)} >= 1")
    origin = (Interval(0),) * 3
    g0 = g.eval_iv(origin)
    if sup_distance_upper(g0, (0, 0, 0)).to_fraction() > (1 - L) / 4:
        raise NoContractionCertificate("g does not map the plateau around the halting code into itself")
    target = Fraction(1, k)
    bits = get_precision().bits
    x = (ZERO, ZERO, ZERO)
    for it in range(max_iter + 1):
        gx = g.eval_iv(tuple(Interval(v) for v in x))
        step = sup_distance_upper(gx, x).to_fraction()
        bound = step / (1 - L)
        if bound < target:
            r = Dyadic.round_fraction(bound, 64, up=True) if bound else ZERO
            if max(abs(v.to_fraction()) for v in x) + bound > Fraction(1, 4):
                raise NoContractionCertificate("iterate left the plateau")
            return SinkLocation(x, r, it)
        x = tuple(_round(iv.mid(), bits, False) for iv in gx)
    raise NoContractionCertificate(f"no certificate within {max_iter} iterations")


@dataclass(frozen=True)
class HaltsAndAttracted:
    step: int


@dataclass(frozen=True)
class NotAttractedWithinHorizon:
    """The orbit stayed outside ``B(s_g, epsilon/5)`` up to the horizon.

    Budget-relative: this is not a certificate of non-halting.
    """

    horizon: int
    min_distance: float


def basin_vs_halting(
    g: PerturbedMap, c: Configuration, horizon: int, epsilon, start: Box | None = None
) -> HaltsAndAttracted | NotAttractedWithinHorizon:
    """Iterate from the code of ``c`` and report entry into ``B(s_g, epsilon/5)``."""
    eps = Fraction(epsilon)
    radius = eps / 5
    sink = sink_locate(g, k=max(int(100 / eps), 1))
    s_box = sink.enclosure()
    x = start if start is not None else g.base.codec.encode(c).as_box()
    best = None
    for j in range(horizon + 1):
        if box_distance_upper(x, s_box).to_fraction() < radius:
            return HaltsAndAttracted(j)
        d = float(box_distance_lower(x, s_box))
        best = d if best is None else min(best, d)
        if j < horizon:
            x = _tighten(g.eval_iv(x))
    return NotAttractedWithinHorizon(horizon, best)


def halting_basin_harness(
    epsilon=Fraction(1, 5),
    maps: int = 20,
    seed: int = 0,
    settle: int = 5,
    looper_horizon: int = 10_000,
    looper_maps: int = 2,
) -> dict:
    """Halting vs. attraction for perturbed maps ``g`` with ``||q||_C1 <= epsilon / 4``.

    For the halting machine (``bb2_clear`` on a blank tape) the orbit of its
    code must enter ``B(s_g, epsilon/5)`` within ``t_halt + settle`` steps
    for every map.  For ``looper`` the orbit must stay at distance at least
    ``1/2 - epsilon`` from ``s_g`` over ``looper_horizon`` steps.
    """
    from . import machines
    from .recursion import halts_within, initial_configuration

    eps = Fraction(epsilon)
    halter, loop = machines.bb2_clear(), machines.looper()
    c_halt = initial_configuration(halter)
    t_halt = halts_within(halter, c_halt, 10_000).steps
    records, failures = [], 0
    for m in range(maps):
        rng = make_rng(seed, 4, m)
        q = random_tanh_perturbation(rng, c0_bound=eps / 4, c1_bound=eps / 4, saturate=bool(m % 2))
        g = PerturbedMap(ExtendedMap(halter), q)
        res = basin_vs_halting(g, c_halt, t_halt + settle, eps)
        ok = isinstance(res, HaltsAndAttracted)
        failures += not ok
        records.append({"machine": halter.name, "map": m, "attracted_at": res.step if ok else None, "ok": ok})
    floor = Fraction(1, 2) - eps
    for m in range(looper_maps):
        rng = make_rng(seed, 5, m)
        q = random_tanh_perturbation(rng, c0_bound=eps / 4, c1_bound=eps / 4, saturate=bool(m % 2))
        g = PerturbedMap(ExtendedMap(loop), q)
        res = basin_vs_halting(g, initial_configuration(loop), looper_horizon, eps)
        ok = isinstance(res, NotAttractedWithinHorizon) and Fraction(res.min_distance) >= floor
        failures += not ok
        records.append(
            {"machine": loop.name, "map": m, "min_distance": getattr(res, "min_distance", 0.0), "ok": ok}
        )
    return {
        "format_version": 1,
        "kind": "halting-basin",
        "epsilon": str(eps),
        "t_halt": t_halt,
        "settle": settle,
        "looper_horizon": looper_horizon,
        "failures": failures,
        "records": records,
    }

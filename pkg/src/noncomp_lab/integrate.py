"""Trajectory integration for planar fields.

Three integrators share the Dormand-Prince 5(4) tableau from scipy:

* :func:`integrate_trajectory` adapts the step for one start and keeps an
  error budget ``E <- E * growth + local`` where ``growth`` is ``e^{L h}``
  (the Lipschitz amplification) or, optionally, the exponential of the
  logarithmic norm along the step.
* :func:`batch_flow` advances many starts with a fixed step, vectorised,
  with the same budget per start.
* :func:`interval_flow` is the slow certified mode: first-order interval
  Taylor steps with a Picard a-priori enclosure and mean-value form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import RK45

from .errors import DomainExit, ToleranceUnachievable
from .exactnum import Dyadic, Interval
from .fields import PlanarField, dyadic_upper_float

_C, _A, _B, _E = RK45.C, RK45.A, RK45.B, RK45.E


def log_norm2(J: np.ndarray) -> np.ndarray:
    """Largest eigenvalue of the symmetric part of 2x2 matrices (the Euclidean log-norm)."""
    a = J[..., 0, 0]
    d = J[..., 1, 1]
    b = 0.5 * (J[..., 0, 1] + J[..., 1, 0])
    return 0.5 * (a + d) + np.sqrt(0.25 * (a - d) ** 2 + b * b)


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray  # shape (n, 2)
    error_bound: np.ndarray  # accumulated bound at each t
    lipschitz: float

    @property
    def sq_radius(self) -> np.ndarray:
        return np.sum(self.x**2, axis=1)

    def rows(self):
        for t, x, w, e in zip(self.t, self.x, self.sq_radius, self.error_bound):
            yield float(t), float(x[0]), float(x[1]), float(w), float(e)


def _dp_step(F: PlanarField, y: np.ndarray, h) -> tuple[np.ndarray, np.ndarray]:
    """One Dormand-Prince step for arrays of states; returns (y_new, local error estimate)."""
    K = np.empty((7,) + y.shape)
    K[0] = F.rhs(y)
    for s in range(1, 6):
        dy = np.tensordot(_A[s, :s], K[:s], axes=(0, 0))
        K[s] = F.rhs(y + h[..., None] * dy if np.ndim(h) else y + h * dy)
    incr = np.tensordot(_B, K[:6], axes=(0, 0))
    y_new = y + (h[..., None] * incr if np.ndim(h) else h * incr)
    K[6] = F.rhs(y_new)
    err = np.tensordot(_E, K, axes=(0, 0))
    err = h[..., None] * err if np.ndim(h) else h * err
    return y_new, np.linalg.norm(err, axis=-1)


def integrate_trajectory(
    F: PlanarField,
    x0,
    t_end: float,
    tol: float = 1e-10,
    amplification: str = "lipschitz",
    lipschitz: float | None = None,
    max_steps: int = 1_000_000,
    sample_dt: float | None = None,
) -> Trajectory:
    """Adaptive DP45 from ``x0`` to ``t_end`` with an accumulated error budget.

    ``tol`` is the local error target per unit time.  With
    ``amplification='lipschitz'`` the budget grows by ``e^{L h}`` per step
    (``L`` the certified Lipschitz constant of ``F``); ``'lognorm'`` uses
    the sampled logarithmic norm instead, which is far tighter near sinks
    but is a practical estimate rather than a bound.
    """
    if amplification not in ("lipschitz", "lognorm"):
        raise ValueError("amplification must be 'lipschitz' or 'lognorm'")
    L = F.lipschitz() if lipschitz is None else lipschitz
    y = np.asarray(x0, dtype=float).copy()
    t = 0.0
    E = 0.0
    ts, xs, es = [0.0], [y.copy()], [0.0]
    h = min(0.1, t_end) if t_end > 0 else 0.0
    next_sample = sample_dt if sample_dt else None
    steps = 0
    while t < t_end:
        if steps >= max_steps:
            raise ToleranceUnachievable(f"step budget exhausted at t={t}")
        h = min(h, t_end - t)
        y_new, err = _dp_step(F, y, h)
        if err > tol * h and h > 1e-12:
            h *= max(0.2, 0.9 * (tol * h / err) ** 0.2)
            continue
        if h <= 1e-12 and err > tol * 1e-12:
            raise ToleranceUnachievable(f"step size underflow at t={t}")
        if E > 0:  # skipping E = 0 avoids 0 * inf on long exact steps
            if amplification == "lipschitz":
                rate = L
            else:
                rate = max(log_norm2(F.jacobian(y)), log_norm2(F.jacobian(y_new)))
            E = E * np.exp(rate * h) + err
        else:
            E = err
        t += h
        y = y_new
        steps += 1
        if np.hypot(*y) > F.domain_radius:
            raise DomainExit(f"trajectory left the evaluation domain at t={t:.6g}")
        if next_sample is None or t >= next_sample - 1e-12 or t >= t_end:
            ts.append(t)
            xs.append(y.copy())
            es.append(E)
            if next_sample is not None:
                while next_sample <= t + 1e-12:
                    next_sample += sample_dt
        h *= min(5.0, 0.9 * (tol * h / max(err, 1e-300)) ** 0.2)
    return Trajectory(np.array(ts), np.array(xs), np.array(es), L)


def batch_flow(
    F: PlanarField,
    y: np.ndarray,
    E: np.ndarray,
    duration: float,
    h: float,
    lognorm: bool = True,
    L: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Advance states ``y`` (shape ``(n, 2)``) by ``duration`` with fixed steps ``h``.

    Returns the new states and error budgets.  Budget growth per step is
    ``exp(h * max(mu(J(y)), mu(J(y_new))))`` with a small safety floor, or
    ``e^{L h}`` when ``lognorm`` is false.
    """
    nsteps = max(1, int(round(duration / h)))
    h = duration / nsteps
    for _ in range(nsteps):
        y_new, err = _dp_step(F, y, h)
        if lognorm:
            mu = np.maximum(log_norm2(F.jacobian(y)), log_norm2(F.jacobian(y_new)))
            E = E * np.exp(h * (mu + 1e-3)) + err
        else:
            E = E * np.exp(h * L) + err
        y = y_new
    return y, E


# ---------------------------------------------------------------------------
# Interval mode
# ---------------------------------------------------------------------------

Box2 = tuple[Interval, Interval]
IMat = list[list[Interval]]


def _apriori(F: PlanarField, X: Box2, h: Dyadic) -> Box2:
    """Box ``B`` with ``X + [0, h] F(B) subset B`` (Picard enclosure of the step)."""
    H = Interval._make(Dyadic(0), h)
    B = X
    for _ in range(30):
        f = F.eval_iv(*B)
        cand = tuple(x + H * fi for x, fi in zip(X, f))
        if all(B_i.contains(c) for B_i, c in zip(B, cand)):
            return cand
        B = tuple(c.inflate(c.width() * Dyadic(1, -3) + Dyadic(1, -60)) for c in cand)
    raise ToleranceUnachievable("no a-priori enclosure; reduce the step")


def _matmul(P: IMat, Q: IMat) -> IMat:
    return [[P[i][0] * Q[0][j] + P[i][1] * Q[1][j] for j in range(2)] for i in range(2)]


def _matvec(P: IMat, v) -> list[Interval]:
    return [P[i][0] * v[0] + P[i][1] * v[1] for i in range(2)]


def _point_mat(M: np.ndarray) -> IMat:
    return [[Interval(Dyadic.coerce(float(M[i, j]))) for j in range(2)] for i in range(2)]


def _inverse(P: IMat) -> IMat:
    det = P[0][0] * P[1][1] - P[0][1] * P[1][0]
    return [[P[1][1] / det, -P[0][1] / det], [-P[1][0] / det, P[0][0] / det]]


def _mag_norm(P: IMat) -> Dyadic:
    return max(P[i][0].mag() + P[i][1].mag() for i in range(2))


@dataclass
class Parallelogram:
    """The set ``c + A r`` with a point ``c``, float-valued matrix ``A`` and interval vector ``r``."""

    c: tuple[Dyadic, Dyadic]
    A: np.ndarray
    r: list[Interval]

    @classmethod
    def from_box(cls, X: Box2) -> "Parallelogram":
        c = tuple(v.mid() for v in X)
        return cls(c, np.eye(2), [v - m for v, m in zip(X, c)])

    def hull(self) -> Box2:
        Ar = _matvec(_point_mat(self.A), self.r)
        return tuple(Interval(ci) + a for ci, a in zip(self.c, Ar))


def _flow_derivative(F: PlanarField, B: Box2, h: Dyadic) -> IMat:
    """Enclosure of the flow Jacobian over a step whose path stays in ``B``.

    ``V' = J V`` with ``V(0) = I`` gives ``V(s) in I + [-e, e]`` for
    ``e = exp(h ||J||) - 1`` and then ``V(h) in I + h J(B) W``.
    """
    J = [list(row) for row in F.jac_iv(*B)]
    nrm = _mag_norm(J)
    e = (Interval(nrm) * h).exp() - 1
    spread = Interval._make(-e.hi, e.hi)
    W = [[Interval(1) + spread, spread], [spread, Interval(1) + spread]]
    JW = _matmul(J, W)
    return [[(Interval(1) if i == j else Interval(0)) + JW[i][j] * h for j in range(2)] for i in range(2)]


def _point_step(F: PlanarField, c: tuple[Dyadic, Dyadic], h: Dyadic) -> Box2:
    """Second-order Taylor enclosure of the flow from a single point."""
    X = tuple(Interval(v) for v in c)
    B = _apriori(F, X, h)
    f0 = F.eval_iv(*X)
    JB = F.jac_iv(*B)
    fB = F.eval_iv(*B)
    h2 = h * h * Dyadic(1, -1)
    return tuple(X[i] + h * f0[i] + h2 * (JB[i][0] * fB[0] + JB[i][1] * fB[1]) for i in range(2))


def interval_step(F: PlanarField, P: Parallelogram, h: Dyadic) -> Parallelogram:
    """One certified step of the parallelogram representation."""
    B = _apriori(F, P.hull(), h)
    V = _flow_derivative(F, B, h)
    Pc = _point_step(F, P.c, h)
    c_new = tuple(v.mid() for v in Pc)
    VA = _matmul(V, _point_mat(P.A))
    A_new = np.array([[float(VA[i][j].mid()) for j in range(2)] for i in range(2)])
    Ainv = _inverse(_point_mat(A_new))
    r_new = _matvec(_matmul(Ainv, VA), P.r)
    shift = _matvec(Ainv, [v - m for v, m in zip(Pc, c_new)])
    r_new = [Interval._make(*_trim(a + b)) for a, b in zip(r_new, shift)]
    return Parallelogram(tuple(_trim(Interval(v))[0] for v in c_new), A_new, r_new)


def interval_flow(F: PlanarField, X: Box2, t_end, h=Dyadic(1, -6), max_width: float = 1.0) -> list[Box2]:
    """Certified box enclosures at ``t = 0, h, 2h, ...`` up to ``t_end``.

    The set is carried as a parallelogram ``c + A r`` so rotation does not
    wrap the enclosure; each step encloses the flow from ``c`` by a
    second-order Taylor form and the rest by the mean-value form with an
    enclosure of the flow Jacobian.
    """
    X = tuple(Interval.coerce(v) for v in X)
    h = Dyadic.coerce(h)
    steps = int(Dyadic.coerce(t_end).to_fraction() / h.to_fraction())
    P = Parallelogram.from_box(X)
    out = [X]
    for _ in range(steps):
        P = interval_step(F, P, h)
        box = P.hull()
        if max(dyadic_upper_float(v.width()) for v in box) > max_width:
            raise ToleranceUnachievable("interval enclosure grew past the width limit")
        out.append(box)
    return out


def _trim(v: Interval, bits: int = 96) -> tuple[Dyadic, Dyadic]:
    lo, hi = v.lo, v.hi
    if lo.mantissa.bit_length() > bits:
        lo = Dyadic.round_fraction(lo.to_fraction(), bits, up=False)
    if hi.mantissa.bit_length() > bits:
        hi = Dyadic.round_fraction(hi.to_fraction(), bits, up=True)
    return lo, hi

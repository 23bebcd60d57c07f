"""Basins of attraction for structurally stable planar fields on the unit disk.

The pipeline extracts a phase portrait (isolated equilibria with markers,
isolating annuli around hyperbolic limit cycles, saddle stable arcs), then
classifies grid points of the disk by racing three halting tests at integer
times:

(i)   the point lies in a certified ball of the target sink's basin;
(ii)  the trajectory enters the disk of another sink;
(iii) the trajectory enters an attracting annulus.

Equilibria are certified by the Krawczyk operator.  Cycles are located by
bisection on a Poincare return map and are certified only up to the
integration tolerance.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq
from scipy.spatial import cKDTree
from scipy.spatial.distance import directed_hausdorff

from .errors import (
    CycleCertificationFailed,
    DomainExit,
    ManifoldEscape,
    NotStructurallyStable,
    ResolutionExceeded,
    ToleranceUnachievable,
)
from .exactnum import Dyadic, Interval
from .fields import PlanarField, dyadic_upper_float
from .integrate import batch_flow, interval_flow

# radius of the closed disk on which portraits are extracted; slightly larger
# than the unit disk so equilibria and cycles on the boundary circle are seen
PORTRAIT_RADIUS = Fraction(17, 16)


def resolution_exponent(k: int) -> int:
    """``ceil(log2 k)`` for ``k >= 1``."""
    if k < 1:
        raise ValueError("resolution k must be positive")
    return (k - 1).bit_length()


def square_side(k: int) -> Dyadic:
    """Side of isolating squares at resolution ``k``: ``2^-(ceil(log2 k) + 1) <= 1/(2k)``."""
    return Dyadic(1, -(resolution_exponent(k) + 1))


# ---------------------------------------------------------------------------
# Equilibria
# ---------------------------------------------------------------------------

Box = tuple[Interval, Interval]


def _box(c1: Fraction, c2: Fraction, r: Fraction) -> Box:
    return tuple(
        Interval._make(Dyadic.round_fraction(c - r, 64, False), Dyadic.round_fraction(c + r, 64, True)) for c in (c1, c2)
    )


def _point_matrix(M) -> list[list[Interval]]:
    return [[Interval(Dyadic.coerce(float(M[i][j]))) for j in range(2)] for i in range(2)]


def krawczyk(F: PlanarField, X: Box) -> Box | None:
    """Krawczyk image ``K(X)``; ``None`` when it misses ``X`` (no zero in ``X``).

    ``K(X) = m - Y F(m) + (I - Y J(X)) (X - m)`` with ``Y`` a float inverse
    of the Jacobian at the midpoint.  ``K(X)`` inside the interior of ``X``
    proves a unique zero in ``X``.
    """
    m = tuple(v.mid() for v in X)
    Jm = F.jacobian(np.array([float(m[0]), float(m[1])]))
    try:
        Yf = np.linalg.inv(Jm)
    except np.linalg.LinAlgError:
        return X
    if not np.all(np.isfinite(Yf)):
        return X
    Y = _point_matrix(Yf)
    fm = F.eval_iv(Interval(m[0]), Interval(m[1]))
    JX = F.jac_iv(*X)
    d = [X[0] - m[0], X[1] - m[1]]
    K = []
    for i in range(2):
        acc = Interval(m[i]) - (Y[i][0] * fm[0] + Y[i][1] * fm[1])
        for j in range(2):
            Mij = (Interval(1) if i == j else Interval(0)) - (Y[i][0] * JX[0][j] + Y[i][1] * JX[1][j])
            acc = acc + Mij * d[j]
        K.append(acc)
    if not (K[0].intersects(X[0]) and K[1].intersects(X[1])):
        return None
    return (K[0], K[1])


def _inside(K: Box, X: Box) -> bool:
    return X[0].interior_contains(K[0]) and X[1].interior_contains(K[1])


def _may_vanish(F: PlanarField, X: Box) -> bool:
    f1, f2 = F.eval_iv(*X)
    return f1.contains(0) and f2.contains(0)


def _newton(F: PlanarField, z: np.ndarray, iters: int = 30) -> np.ndarray:
    for _ in range(iters):
        J = F.jacobian(z)
        try:
            step = np.linalg.solve(J, F.rhs(z))
        except np.linalg.LinAlgError:
            break
        z = z - step
        if np.linalg.norm(step) < 1e-15:
            break
    return z


@dataclass(frozen=True)
class Equilibrium:
    """A certified zero of the field: it is the unique zero in ``box``."""

    box: Box
    marker: str  # sink | source | saddle

    @property
    def centre(self) -> tuple[Dyadic, Dyadic]:
        return (self.box[0].mid(), self.box[1].mid())

    @property
    def radius(self) -> Dyadic:
        """Upper bound on the distance from ``centre`` to the zero."""
        return max(self.box[0].width(), self.box[1].width())


def _classify_jacobian(F: PlanarField, X: Box) -> str | None:
    J = F.jac_iv(*X)
    tr = J[0][0] + J[1][1]
    det = J[0][0] * J[1][1] - J[0][1] * J[1][0]
    if det.hi.sign() < 0:
        return "saddle"
    if det.lo.sign() > 0:
        if tr.hi.sign() < 0:
            return "sink"
        if tr.lo.sign() > 0:
            return "source"
    return None


def _certify_cluster(F: PlanarField, hull: Box, tol: Fraction) -> tuple[Equilibrium, Box] | None:
    """Certify a zero near a cluster of candidate cells, by epsilon-inflation around a Newton point.

    Returns the contracted box and the larger box on which uniqueness was
    proved, or ``None`` when no attempt succeeds.
    """
    c = np.array([float(hull[0].mid()), float(hull[1].mid())])
    z = _newton(F, c)
    if not np.all(np.isfinite(z)) or np.any(np.abs(z - c) > 2 * float(hull[0].width() + hull[1].width())):
        return None
    zf = tuple(Fraction(float(v)) for v in z)
    r = Fraction(max(float(hull[0].width()), float(hull[1].width())))
    region = None
    for _ in range(6):
        X = _box(zf[0], zf[1], r)
        limit = 4 * r
        for _ in range(20):
            K = krawczyk(F, X)
            if K is None:
                break
            if _inside(K, X):
                region = X
                break
            X = tuple(Interval.hull(K[i], X[i]).inflate(X[i].width() * Dyadic(1, -4)) for i in range(2))
            if max(Fraction(X[i].width().to_fraction()) for i in range(2)) > limit:
                break
        if region is not None:
            break
        r /= 8
    if region is None:
        return None
    X = region
    for _ in range(200):
        if max(Fraction(X[0].width().to_fraction()), Fraction(X[1].width().to_fraction())) <= tol:
            break
        K = krawczyk(F, X)
        if K is None:
            return None
        Xn = tuple(K[i].intersection(X[i]) for i in range(2))
        if Xn[0] is None or Xn[1] is None:
            return None
        if Xn == X:
            break
        X = Xn
    marker = _classify_jacobian(F, X)
    if marker is None:
        raise ResolutionExceeded("equilibrium is not hyperbolic at the available resolution")
    return Equilibrium(X, marker), region


def _clusters(cells: list[tuple[int, int]]) -> list[list[tuple[int, int]]]:
    """Connected components (8-neighbourhood) of grid cells."""
    todo = set(cells)
    out = []
    while todo:
        seed = min(todo)
        todo.remove(seed)
        comp, stack = [seed], [seed]
        while stack:
            i, j = stack.pop()
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    nb = (i + di, j + dj)
                    if nb in todo:
                        todo.remove(nb)
                        comp.append(nb)
                        stack.append(nb)
        out.append(sorted(comp))
    return out


def isolate_equilibria(
    F: PlanarField, k: int, radius: Fraction = PORTRAIT_RADIUS, max_depth: int = 12, min_depth: int = 4
) -> list[Equilibrium]:
    """All zeros of ``F`` in the closed disk of ``radius``, each certified unique in its box.

    The square ``[-R, R]^2`` is subdivided; cells whose interval image
    excludes zero are dropped.  Remaining cells are grouped into clusters,
    and each cluster is certified by Krawczyk on an inflated box around a
    Newton point.  Clusters that fail are refined until ``max_depth``.
    The returned boxes have width at most ``tol = 2^-(ceil(log2 k) + 8)``.
    """
    R = Fraction(radius)
    tol = Fraction(1, 2 ** (resolution_exponent(k) + 8))
    found: list[Equilibrium] = []
    regions: list[Box] = []
    # candidate cells at the current depth as integer coordinates
    level = 0
    cells = [(0, 0)]
    while True:
        side = 2 * R / 2**level
        keep = []
        for i, j in cells:
            lo1, lo2 = -R + i * side, -R + j * side
            # drop cells disjoint from the disk
            n1 = 0 if lo1 <= 0 <= lo1 + side else min(abs(lo1), abs(lo1 + side))
            n2 = 0 if lo2 <= 0 <= lo2 + side else min(abs(lo2), abs(lo2 + side))
            if n1 * n1 + n2 * n2 > R * R:
                continue
            X = _box(lo1 + side / 2, lo2 + side / 2, side / 2)
            if any(_box_in(X, reg) for reg in regions):
                continue
            if _may_vanish(F, X):
                keep.append((i, j))
        if level >= min_depth:
            pending = []
            for comp in _clusters(keep):
                lo1 = -R + min(i for i, _ in comp) * side
                hi1 = -R + (max(i for i, _ in comp) + 1) * side
                lo2 = -R + min(j for _, j in comp) * side
                hi2 = -R + (max(j for _, j in comp) + 1) * side
                hull = _box((lo1 + hi1) / 2, (lo2 + hi2) / 2, max(hi1 - lo1, hi2 - lo2) / 2)
                got = _certify_cluster(F, hull, tol) if len(comp) <= 16 else None
                if got is not None:
                    eq, region = got
                    # distinct zeros have disjoint uniqueness boxes
                    if not any(_boxes_meet(eq.box, reg) for reg in regions):
                        found.append(eq)
                        regions.append(region)
                # cells outside every uniqueness box are refined further
                pending.extend(c for c in comp if not _covered(R, side, c, regions))
            keep = pending
        if not keep:
            break
        if level >= max_depth:
            raise ResolutionExceeded(f"{len(keep)} candidate cells left uncertified at depth {level}")
        cells = [(2 * i + a, 2 * j + b) for i, j in keep for a in (0, 1) for b in (0, 1)]
        level += 1
    inside = []
    for e in found:
        c = (e.centre[0].to_fraction(), e.centre[1].to_fraction())
        if c[0] ** 2 + c[1] ** 2 <= R * R:
            inside.append(e)
    return sorted(inside, key=lambda e: (e.centre[0], e.centre[1]))


def _boxes_meet(A: Box, B: Box) -> bool:
    return A[0].intersects(B[0]) and A[1].intersects(B[1])


def _box_in(X: Box, Y: Box) -> bool:
    return Y[0].contains(X[0]) and Y[1].contains(X[1])


def _covered(R, side, cell, regions) -> bool:
    i, j = cell
    X = _box(-R + (i + Fraction(1, 2)) * side, -R + (j + Fraction(1, 2)) * side, side / 2)
    return any(_box_in(X, reg) for reg in regions)


def lognorm_upper(F: PlanarField, X: Box) -> Dyadic:
    """Upper bound on the Euclidean logarithmic norm of ``J`` over ``X``."""
    J = F.jac_iv(*X)
    a, d = J[0][0], J[1][1]
    b = (J[0][1] + J[1][0]) * Dyadic(1, -1)
    half_tr = (a + d) * Dyadic(1, -1)
    disc = ((a - d) * Dyadic(1, -1)).sqr() + b.sqr()
    return (half_tr + disc.sqrt()).hi


@dataclass(frozen=True)
class IsolatingSquare:
    """A closed square ``centre +- side/2`` holding exactly one equilibrium.

    For sinks, ``radius_eff`` is the radius of a disk about the equilibrium
    inside the inscribed disk on which the log-norm is negative; that disk
    is forward invariant and lies in the sink's basin.
    """

    centre: tuple[Dyadic, Dyadic]
    side: Dyadic
    marker: str
    equilibrium: Equilibrium
    lognorm: float | None = None

    @property
    def radius_eff(self) -> float:
        return float(self.side) / 2 - float(self.equilibrium.radius)

    def contains_points(self, pts: np.ndarray) -> np.ndarray:
        c = np.array([float(self.centre[0]), float(self.centre[1])])
        return np.max(np.abs(pts - c), axis=-1) <= float(self.side) / 2

    def to_json(self) -> dict:
        return {
            "centre": [str(self.centre[0]), str(self.centre[1])],
            "side": str(self.side),
            "marker": self.marker,
            "lognorm": self.lognorm,
        }


def _square_for(F: PlanarField, e: Equilibrium, k: int) -> IsolatingSquare:
    side = square_side(k)
    c = e.centre
    for _ in range(12):
        mu = None
        if e.marker == "sink":
            h = side.to_fraction() / 2
            X = _box(c[0].to_fraction(), c[1].to_fraction(), h)
            mu = lognorm_upper(F, X)
            if not mu.sign() < 0:
                side = side.scale2(-1)
                continue
            mu = dyadic_upper_float(mu)
        if float(e.radius) * 4 >= float(side):
            break
        return IsolatingSquare(c, side, e.marker, e, mu)
    raise ResolutionExceeded(f"no forward-invariant disk certified around the {e.marker} at {c}")


# ---------------------------------------------------------------------------
# Periodic orbits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Annulus:
    """Strip between polygonal boundaries ``inner`` and ``outer`` around one cycle."""

    cycle: np.ndarray  # (N, 2) closed polyline, first vertex not repeated
    inner: np.ndarray
    outer: np.ndarray
    margin: float
    marker: str  # attracting | repelling
    half_width: float
    period: float
    multiplier: float  # derivative of the return map

    def to_json(self) -> dict:
        return {
            "marker": self.marker,
            "margin": self.margin,
            "half_width": self.half_width,
            "period": self.period,
            "multiplier": self.multiplier,
            "vertices": int(len(self.cycle)),
        }


def _angle_system(F: PlanarField, centre: np.ndarray, sign: float):
    def rhs(t, s):
        x = s[:2]
        v = sign * F.rhs(x)
        d = x - centre
        r2 = d @ d
        return np.array([v[0], v[1], (d[0] * v[1] - d[1] * v[0]) / max(r2, 1e-300)])

    return rhs


def _return_radius(F, centre, r, direction, sign, t_max, rtol):
    """Distance from ``centre`` on the ray where the trajectory from ``centre + r u`` next crosses it."""
    x0 = centre + r * direction
    rhs = _angle_system(F, centre, sign)
    w = rhs(0.0, np.array([x0[0], x0[1], 0.0]))[2]
    if abs(w) < 1e-12:
        return math.nan, math.nan
    turn = 2 * math.pi * np.sign(w)

    def full_turn(t, s):
        return s[2] - turn

    full_turn.terminal = True

    def escaped(t, s):
        return F.domain_radius - math.hypot(s[0], s[1])

    escaped.terminal = True
    sol = solve_ivp(
        rhs, (0.0, t_max), [x0[0], x0[1], 0.0], method="DOP853", rtol=rtol, atol=rtol * 1e-2,
        events=(full_turn, escaped),
    )
    if len(sol.t_events[0]) == 0:
        return math.nan, math.nan
    y = sol.y_events[0][0][:2]
    return float(np.dot(y - centre, direction)), float(sol.t_events[0][0])


def _cycle_polyline(F, x0, period, n, rtol, backward=False):
    """Vertices at equal time steps along one period; repelling cycles are traced in backward time."""
    ts = np.linspace(0.0, period, n, endpoint=False)
    s = -1.0 if backward else 1.0
    sol = solve_ivp(lambda t, x: s * F.rhs(x), (0.0, period), x0, method="DOP853", rtol=rtol, atol=rtol * 1e-2, t_eval=ts)
    y = sol.y.T
    return np.concatenate([y[:1], y[:0:-1]]) if backward else y


def _outward_normals(F: PlanarField, poly: np.ndarray) -> np.ndarray:
    v = F.rhs(poly)
    v = v / np.linalg.norm(v, axis=1)[:, None]
    n = np.stack([v[:, 1], -v[:, 0]], axis=1)
    if np.mean(np.sum(n * (poly - poly.mean(axis=0)), axis=1)) < 0:
        n = -n
    return n


def isolate_periodic_orbits(
    F: PlanarField,
    k: int,
    centres: Iterable[tuple[float, float]] | None = None,
    radius: Fraction = PORTRAIT_RADIUS,
    samples: int = 64,
    vertices: int = 512,
    repelling_half_width: float | None = None,
    rtol: float = 1e-11,
    t_max: float = 60.0,
) -> list[Annulus]:
    """Locate hyperbolic cycles by bisection on a Poincare return map.

    Rays start at each non-saddle equilibrium (``centres``) in the
    direction ``+x1``.  The return map ``P`` is sampled on the ray; sign
    changes of ``P(r) - r`` are refined with Brent's method.  ``P'`` at the
    root decides the marker: below 1 attracting, above 1 repelling.  A run
    of samples with ``P(r) = r`` (a band of cycles) or ``P'`` close to 1
    raises :class:`CycleCertificationFailed`.

    Attracting annuli are the strip from ``-h`` to ``+2h`` along the outer
    normal with margin ``3h``; repelling ones span ``-h`` to ``+h``.  Here
    ``h = 1/(4k)`` for attracting cycles and ``repelling_half_width``
    (default ``h/8``) for repelling ones.
    """
    if centres is None:
        centres = [(float(e.centre[0]), float(e.centre[1])) for e in isolate_equilibria(F, k, radius) if e.marker != "saddle"]
    R = float(radius)
    h_att = 1.0 / (4 * k)
    h_rep = h_att / 8 if repelling_half_width is None else repelling_half_width
    direction = np.array([1.0, 0.0])
    out: list[Annulus] = []
    for c in centres:
        c = np.asarray(c, dtype=float)
        r_max = R - c[0]  # the ray leaves the portrait disk at x1 = R for centres on the axis; generic bound
        if c[1] != 0:
            r_max = -c[0] + math.sqrt(max(R * R - c[1] ** 2, 0.0))
        if r_max <= 0:
            continue
        rs = np.linspace(r_max / samples, r_max, samples)
        roots = []
        # forward sampling finds cycles whose neighbours return; backward
        # sampling finds repelling ones whose outer neighbours escape forward
        for sign in (1.0, -1.0):
            def gap(r, sign=sign):
                return _return_radius(F, c, r, direction, sign, t_max, rtol)[0] - r

            g = np.array([gap(r) for r in rs])
            flat = np.abs(g) < 1e-9
            run = 0
            for f_ in flat:
                run = run + 1 if f_ else 0
                if run >= 3:
                    raise CycleCertificationFailed("the return map is the identity on an interval: a band of non-hyperbolic cycles")
            for a, b, ga, gb in zip(rs[:-1], rs[1:], g[:-1], g[1:]):
                if not (np.isfinite(ga) and np.isfinite(gb)) or ga * gb >= 0:
                    continue
                root = brentq(gap, a, b, xtol=1e-13)
                if any(abs(root - r0) < 1e-6 for r0, _ in roots):
                    continue
                eps = 1e-5
                p_hi = _return_radius(F, c, root + eps, direction, sign, t_max, rtol)[0]
                p_lo = _return_radius(F, c, root - eps, direction, sign, t_max, rtol)[0]
                slope = (p_hi - p_lo) / (2 * eps)
                if not np.isfinite(slope) or abs(slope - 1) < 1e-3:
                    raise CycleCertificationFailed(f"return map slope {slope:.6g} at r={root:.6g} is not hyperbolic")
                roots.append((root, slope if sign > 0 else 1 / slope))
        for root, slope in sorted(roots):
            _, period = _return_radius(F, c, root, direction, 1.0, t_max, rtol)
            if not np.isfinite(period):
                _, period = _return_radius(F, c, root, direction, -1.0, t_max, rtol)
            x0 = c + root * direction
            poly = _cycle_polyline(F, x0, period, vertices, rtol, backward=slope > 1)
            if any(_polyline_distance(a_.cycle, poly[:1])[0] < 1e-6 for a_ in out):
                continue
            n = _outward_normals(F, poly)
            if slope < 1:
                marker, inner, outer, margin, hw = "attracting", poly - h_att * n, poly + 2 * h_att * n, 3 * h_att, h_att
                _check_inflow(F, inner, outer, n)
            else:
                marker, inner, outer, margin, hw = "repelling", poly - h_rep * n, poly + h_rep * n, 2 * h_rep, h_rep
            out.append(Annulus(poly, inner, outer, margin, marker, hw, period, float(slope)))
    return out


def _check_inflow(F, inner, outer, n):
    if np.any(np.sum(F.rhs(outer) * n, axis=1) >= 0) or np.any(np.sum(F.rhs(inner) * n, axis=1) <= 0):
        raise CycleCertificationFailed("the attracting annulus is not entered transversally on its boundary")


def _densify(poly: np.ndarray, spacing: float, closed: bool = True) -> np.ndarray:
    nxt = np.roll(poly, -1, axis=0) if closed else poly[1:]
    base = poly if closed else poly[:-1]
    seg = np.linalg.norm(nxt - base, axis=1)
    parts = []
    for p, q, s in zip(base, nxt, seg):
        m = max(1, int(math.ceil(s / spacing)))
        t = np.arange(m)[:, None] / m
        parts.append(p + t * (q - p))
    if not closed:
        parts.append(poly[-1:])
    return np.concatenate(parts)


class PolylineDistance:
    """Distance bounds from points to a polyline via a k-d tree of a densified copy."""

    def __init__(self, poly: np.ndarray, spacing: float, closed: bool = True):
        self.points = _densify(np.asarray(poly, dtype=float), spacing, closed)
        seg = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
        self.slack = float(seg.max()) / 2 if len(seg) else 0.0
        self.tree = cKDTree(self.points)

    def bounds(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``(lower, upper)`` bounds on the distance to the polyline."""
        d, _ = self.tree.query(pts)
        return np.maximum(d - self.slack, 0.0), d


def _polyline_distance(poly, pts):
    d, _ = cKDTree(poly).query(pts)
    return d


# ---------------------------------------------------------------------------
# Saddle arcs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StableArc:
    """Polygonal approximation of a saddle's local stable manifold plus its backward extensions.

    ``vertices`` runs from one end through the saddle to the other;
    ``errors`` are per-vertex integration error bounds.  This is an
    approximation: the local segment is the linear stable direction.
    """

    vertices: np.ndarray
    errors: np.ndarray
    saddle: tuple[float, float]
    escaped: bool

    def to_json(self) -> dict:
        return {"saddle": list(self.saddle), "vertices": int(len(self.vertices)), "escaped": self.escaped,
                "max_error": float(self.errors.max()) if len(self.errors) else 0.0}


def stable_manifold_arc(
    F: PlanarField,
    saddle: IsolatingSquare,
    T: float,
    strict: bool = True,
    step: float = 1 / 64,
    radius: float = 1.0,
) -> StableArc:
    """Stable arc of a saddle: local segment along the stable eigenvector, extended by backward flow.

    The local segment joins ``z1, z2 = e +- (side/2) v_s``.  Each end is
    integrated backward for time ``T``; leaving the disk of ``radius``
    before ``T`` raises :class:`ManifoldEscape` unless ``strict`` is false,
    in which case the arc is cut at the exit.
    """
    e = np.array([float(saddle.centre[0]), float(saddle.centre[1])])
    J = F.jacobian(e)
    vals, vecs = np.linalg.eig(J)
    if np.iscomplexobj(vals) and np.any(np.abs(vals.imag) > 0):
        raise ManifoldEscape("the equilibrium is not a saddle")
    vals = vals.real
    vs = vecs[:, int(np.argmin(vals))].real
    vs = vs / np.linalg.norm(vs)
    delta = float(saddle.side) / 2
    L = F.lipschitz(max(radius, 1.0) + 1 / 16)
    branches = []
    escaped = False
    for sgn in (1.0, -1.0):
        z = e + sgn * delta * vs
        pts, errs = [z], [0.0]
        if T > 0:
            n = max(1, int(math.ceil(T / step)))
            y = z[None, :]
            E = np.zeros(1)
            neg = _Reversed(F)
            for _ in range(n):
                y, E = batch_flow(neg, y, E, T / n, T / n, lognorm=False, L=L)
                if np.hypot(*y[0]) > radius:
                    if strict:
                        raise ManifoldEscape(f"backward stable branch left the disk before T={T}")
                    escaped = True
                    break
                pts.append(y[0].copy())
                errs.append(float(E[0]))
        branches.append((np.array(pts), np.array(errs)))
    (p1, e1), (p2, e2) = branches
    verts = np.concatenate([p1[::-1], e[None, :], p2])
    errs = np.concatenate([e1[::-1], [0.0], e2])
    return StableArc(verts, errs, (float(e[0]), float(e[1])), escaped)


class _Reversed(PlanarField):
    """The field ``-F`` (backward time)."""

    def __init__(self, F: PlanarField):
        self.F = F
        self.name = f"-{F.name}"
        self.domain_radius = F.domain_radius

    def rhs(self, x):
        return -self.F.rhs(x)

    def jacobian(self, x):
        return -self.F.jacobian(x)

    def eval_iv(self, x1, x2):
        a, b = self.F.eval_iv(x1, x2)
        return (-a, -b)

    def jac_iv(self, x1, x2):
        J = self.F.jac_iv(x1, x2)
        return tuple(tuple(-v for v in row) for row in J)

    def lipschitz(self, radius=None, cells=16):
        return self.F.lipschitz(radius, cells)


# ---------------------------------------------------------------------------
# Phase portrait
# ---------------------------------------------------------------------------


@dataclass
class PhasePortrait:
    """Isolating squares for equilibria and annuli for cycles at resolution ``k``."""

    squares: list[IsolatingSquare]
    annuli: list[Annulus]
    k: int

    @property
    def sinks(self) -> list[IsolatingSquare]:
        """Sink squares in lexicographic order of their centres (sink ``i`` is ``sinks[i - 1]``)."""
        return sorted((s for s in self.squares if s.marker == "sink"), key=lambda s: (s.centre[0], s.centre[1]))

    @property
    def sources(self) -> list[IsolatingSquare]:
        return [s for s in self.squares if s.marker == "source"]

    @property
    def saddles(self) -> list[IsolatingSquare]:
        return [s for s in self.squares if s.marker == "saddle"]

    @property
    def attracting(self) -> list[Annulus]:
        return [a for a in self.annuli if a.marker == "attracting"]

    @property
    def repelling(self) -> list[Annulus]:
        return [a for a in self.annuli if a.marker == "repelling"]

    def check_disjoint(self) -> None:
        """Raise :class:`ResolutionExceeded` if two regions of the portrait meet."""
        sq = self.squares
        for a in range(len(sq)):
            for b in range(a + 1, len(sq)):
                gap = max(abs(float(sq[a].centre[i]) - float(sq[b].centre[i])) for i in range(2))
                if gap <= (float(sq[a].side) + float(sq[b].side)) / 2:
                    raise ResolutionExceeded("isolating squares overlap")
        for an in self.annuli:
            d = PolylineDistance(an.cycle, an.half_width / 4)
            for s in sq:
                c = np.array([[float(s.centre[0]), float(s.centre[1])]])
                lo, _ = d.bounds(c)
                if lo[0] <= float(s.side) / math.sqrt(2) + 2 * an.half_width:
                    raise ResolutionExceeded("an annulus meets an isolating square")
        for a in range(len(self.annuli)):
            for b in range(a + 1, len(self.annuli)):
                A, B = self.annuli[a], self.annuli[b]
                lo, _ = PolylineDistance(A.cycle, A.half_width / 4).bounds(B.cycle)
                if lo.min() <= 2 * (A.half_width + B.half_width):
                    raise ResolutionExceeded("two annuli meet")

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "squares": [s.to_json() for s in sorted(self.squares, key=lambda s: (s.centre[0], s.centre[1]))],
            "annuli": [a.to_json() for a in self.annuli],
        }


def phase_portrait(F: PlanarField, k: int, radius: Fraction = PORTRAIT_RADIUS, **cycle_kw) -> PhasePortrait:
    """Equilibria, their isolating squares and the cycle annuli of ``F`` on the portrait disk."""
    eqs = isolate_equilibria(F, k, radius)
    squares = [_square_for(F, e, k) for e in eqs]
    centres = [(float(s.centre[0]), float(s.centre[1])) for s in squares if s.marker != "saddle"]
    annuli = isolate_periodic_orbits(F, k, centres=centres, radius=radius, **cycle_kw)
    portrait = PhasePortrait(squares, annuli, k)
    portrait.check_disjoint()
    return portrait


# ---------------------------------------------------------------------------
# Certified balls and the halting race
# ---------------------------------------------------------------------------

# radius of the disk on which the Lipschitz constant for ball radii is certified
LIPSCHITZ_RADIUS = 17 / 16
LOG2E = 1 / math.log(2)


@dataclass(frozen=True)
class CertifiedBall:
    """Ball ``B(centre, radius)`` inside the target basin.

    The trajectory from ``centre`` was within distance ``radius_eff - alpha``
    of the sink at time ``time`` (error bound included), and
    ``radius * e^{L time} < alpha``.
    """

    centre: tuple[Fraction, Fraction]
    radius: Fraction
    time: int

    def contains(self, x) -> bool:
        d2 = sum((Fraction(v) - c) ** 2 for v, c in zip(x, self.centre))
        return d2 < self.radius**2


def ball_radius(alpha: np.ndarray, L: float, t: int) -> np.ndarray:
    """``alpha 2^-(ceil(L t log2 e) + 1)``, so that ``radius e^{L t} <= alpha / 2``."""
    return np.ldexp(alpha, -(int(math.ceil(L * t * LOG2E)) + 1))


class _Targets:
    """Vectorised halting tests for a portrait and a target sink."""

    def __init__(self, portrait: PhasePortrait, target: int | None):
        sinks = portrait.sinks
        self.centres = np.array([[float(s.centre[0]), float(s.centre[1])] for s in sinks]).reshape(-1, 2)
        self.radii = np.array([s.radius_eff for s in sinks])
        self.target = target
        self.annuli = portrait.attracting
        self.inner = [PolylineDistance(a.inner, a.margin / 16) for a in self.annuli]
        self.outer = [PolylineDistance(a.outer, a.margin / 16) for a in self.annuli]

    def sink_margin(self, j: int, y: np.ndarray, E: np.ndarray) -> np.ndarray:
        return self.radii[j] - np.linalg.norm(y - self.centres[j], axis=1) - E

    def annulus_hit(self, i: int, y: np.ndarray, E: np.ndarray) -> np.ndarray:
        m = self.annuli[i].margin
        _, d_in = self.inner[i].bounds(y)
        _, d_out = self.outer[i].bounds(y)
        return (d_in + E < m / 2) & (d_out + E < m)


FLAG_BALL, FLAG_SINK, FLAG_ANNULUS, FLAG_DOMAIN = 1, 2, 4, 8

UNRESOLVED, IN_WS, IN_WA, EXCLUDED_B, EXCLUDED_GAMMA = 0, 1, 2, 3, 4
VERDICT_NAMES = {UNRESOLVED: "Unresolved", IN_WS: "InW_s", IN_WA: "InW_A", EXCLUDED_B: "Excluded(B)", EXCLUDED_GAMMA: "Excluded(Gamma)"}


@dataclass
class RaceResult:
    verdict: np.ndarray  # int8 codes
    region: np.ndarray  # int: 0 none, j+1 for sink j (0-based), -(i+1) for attracting annulus i
    time: np.ndarray  # halting round, 0 if none
    flags: np.ndarray  # bitmask of tests that fired at the halting round
    radius: np.ndarray  # certified ball radius for (i)


def _race_chunk(F, targets: _Targets, pts, schedule, t_budget, h, L, lip_radius, own_balls=True):
    n = len(pts)
    verdict = np.zeros(n, np.int8)
    region = np.zeros(n, np.int64)
    time = np.zeros(n, np.int64)
    flags = np.zeros(n, np.uint8)
    radius = np.zeros(n)
    idx = np.arange(n)
    y = pts.copy()
    E = np.zeros(n)
    tree = cKDTree(pts) if n else None
    for t in range(1, t_budget + 1):
        if len(idx) == 0:
            break
        with np.errstate(over="ignore", invalid="ignore"):
            y, E = batch_flow(F, y, E, 1.0, h)
        fl = np.zeros(len(idx), np.uint8)
        reg = np.zeros(len(idx), np.int64)
        rad = np.zeros(len(idx))
        # (i) certified balls scheduled for this round, tested against the start points
        for ball_c, ball_r in schedule.get(t, ()):
            hits = np.array(tree.query_ball_point(ball_c, ball_r), dtype=np.int64)
            if len(hits):
                d = np.linalg.norm(pts[hits] - ball_c, axis=1)
                hits = hits[d < ball_r]
                pos = np.searchsorted(idx, hits)
                ok = (pos < len(idx))
                pos = pos[ok]
                pos = pos[idx[pos] == hits[ok]]
                fl[pos] |= FLAG_BALL
        if targets.target is not None and own_balls:
            alpha = targets.sink_margin(targets.target, y, E)
            got = alpha > 0
            fl[got] |= FLAG_BALL
            rad[got] = ball_radius(alpha[got], L, t)
        # (ii) other sinks
        for j in range(len(targets.radii)):
            if j == targets.target:
                continue
            got = targets.sink_margin(j, y, E) > 0
            reg[got & ((fl & FLAG_SINK) == 0)] = j + 1
            fl[got] |= FLAG_SINK
        # (iii) attracting annuli
        for i in range(len(targets.annuli)):
            got = targets.annulus_hit(i, y, E)
            reg[got & (reg == 0)] = -(i + 1)
            fl[got] |= FLAG_ANNULUS
        out = ~(np.linalg.norm(y, axis=1) + E <= lip_radius)  # NaN from a blow-up counts as out
        fl[out & (fl == 0)] |= FLAG_DOMAIN
        done = fl != 0
        if np.any(done):
            d_idx = idx[done]
            f = fl[done]
            flags[d_idx] = f
            time[d_idx] = t
            v = np.where(f & FLAG_BALL, IN_WS, np.where(f & (FLAG_SINK | FLAG_ANNULUS), IN_WA, UNRESOLVED))
            verdict[d_idx] = v
            region[d_idx] = np.where(f & FLAG_BALL, 0, reg[done])
            radius[d_idx] = rad[done]
            keep = ~done
            idx, y, E = idx[keep], y[keep], E[keep]
    return RaceResult(verdict, region, time, flags, radius)


def _ball_schedule(balls: Iterable[CertifiedBall] | None, per_round: int | None) -> dict[int, list]:
    """Rounds at which balls are tested: by their emission time, or ``per_round`` at a time from a stream."""
    sched: dict[int, list] = {}
    if balls is None:
        return sched
    for n, b in enumerate(balls):
        rnd = max(1, b.time) if per_round is None else n // per_round + 1
        sched.setdefault(rnd, []).append((np.array([float(b.centre[0]), float(b.centre[1])]), float(b.radius)))
    return sched


def thread_count(workers: int | None = None) -> int:
    if workers is not None:
        return max(1, int(workers))
    return max(1, int(os.environ.get("NONCOMP_LAB_THREADS", "1")))


def race(
    F: PlanarField,
    portrait: PhasePortrait,
    pts: np.ndarray,
    target: int | None,
    balls: Iterable[CertifiedBall] | None = None,
    t_budget: int = 40,
    step: float = 1 / 16,
    balls_per_round: int | None = None,
    workers: int | None = None,
    chunk: int = 16384,
) -> RaceResult:
    """Race tests (i), (ii), (iii) at ``t = 1, 2, ...`` for every start point.

    ``target`` is the 0-based index of the sink whose basin is wanted.
    Each start also emits its own certified ball once its trajectory is
    inside the target disk with positive margin.  Chunks of points run in
    a thread pool; results are assembled in input order.
    """
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    targets = _Targets(portrait, target)
    L = F.lipschitz(LIPSCHITZ_RADIUS)
    schedule = _ball_schedule(balls, balls_per_round)
    parts = [pts[i : i + chunk] for i in range(0, len(pts), chunk)] or [pts]

    def run(p):
        return _race_chunk(F, targets, p, schedule, t_budget, step, L, LIPSCHITZ_RADIUS)

    nthreads = thread_count(workers)
    if nthreads > 1 and len(parts) > 1:
        with ThreadPoolExecutor(nthreads) as ex:
            results = list(ex.map(run, parts))
    else:
        results = [run(p) for p in parts]
    return RaceResult(*(np.concatenate([getattr(r, f) for r in results]) for f in RaceResult.__dataclass_fields__))


def grid_points(level: int, radius: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Points of the ``2^-level`` grid with norm below ``radius`` and their integer coordinates."""
    n = int(math.floor(radius * 2**level))
    ij = np.stack(np.meshgrid(np.arange(-n, n + 1), np.arange(-n, n + 1), indexing="ij"), axis=-1).reshape(-1, 2)
    keep = ij[:, 0].astype(np.int64) ** 2 + ij[:, 1].astype(np.int64) ** 2 < (radius * 2**level) ** 2
    ij = ij[keep]
    return ij / 2.0**level, ij


def enumerate_basin(
    F: PlanarField,
    portrait: PhasePortrait,
    sink: int,
    max_level: int = 4,
    t_max: int = 40,
    step: float = 1 / 16,
    radius: float = 1.0,
) -> Iterator[CertifiedBall]:
    """Stream of certified balls covering the basin of sink ``sink`` (0-based).

    Grid points of levels ``0..max_level`` in the disk are integrated
    together; a point is emitted at the first integer time its trajectory
    is inside the sink's invariant disk with margin ``alpha > 0`` after the
    error bound, with radius ``alpha 2^-(ceil(L t log2 e) + 1)``.  Balls
    come out in order of time, then level, then grid position.
    """
    targets = _Targets(portrait, sink)
    L = F.lipschitz(LIPSCHITZ_RADIUS)
    seen: set[tuple[int, int]] = set()
    pts, lev = [], []
    for level in range(max_level + 1):
        p, ij = grid_points(level, radius)
        for q, (i, j) in zip(p, ij):
            key = (int(i) << (max_level - level), int(j) << (max_level - level))
            if key not in seen:
                seen.add(key)
                pts.append(q)
                lev.append(level)
    y = np.array(pts).reshape(-1, 2)
    start = y.copy()
    E = np.zeros(len(y))
    idx = np.arange(len(y))
    for t in range(1, t_max + 1):
        if len(idx) == 0:
            return
        with np.errstate(over="ignore", invalid="ignore"):
            y, E = batch_flow(F, y, E, 1.0, step)
        alpha = targets.sink_margin(sink, y, E)
        got = alpha > 0
        r = ball_radius(alpha[got], L, t)
        for n, rr in zip(idx[got], r):
            yield CertifiedBall((Fraction(start[n, 0]), Fraction(start[n, 1])), Fraction(float(rr)), t)
        alive = (~got) & (np.linalg.norm(y, axis=1) + E <= LIPSCHITZ_RADIUS)
        idx, y, E = idx[alive], y[alive], E[alive]


def grid_dense_sequence(balls: Iterable[tuple], level: int) -> list[tuple[Fraction, Fraction]]:
    """Grid points ``x`` of spacing ``2^-level`` with ``|x - z_i| < theta_i`` for some ``i <= level``.

    ``balls`` is the enumeration ``(z_i, theta_i)`` of an open region,
    indexed from 0, so the first ``level + 1`` balls are used.  Arithmetic
    is exact.  Output is sorted and free of duplicates.
    """
    out = set()
    q = 2**level
    for i, (z, theta) in enumerate(balls):
        if i > level:
            break
        z = (Fraction(z[0]), Fraction(z[1]))
        theta = Fraction(theta)
        lo = [math.floor((c - theta) * q) for c in z]
        hi = [math.ceil((c + theta) * q) for c in z]
        for a in range(lo[0], hi[0] + 1):
            for b in range(lo[1], hi[1] + 1):
                x = (Fraction(a, q), Fraction(b, q))
                if (x[0] - z[0]) ** 2 + (x[1] - z[1]) ** 2 < theta**2:
                    out.add(x)
    return sorted(out)


# ---------------------------------------------------------------------------
# Single-point classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    kind: str  # InW_s | InW_A | Timeout
    region: str | None
    time: int
    flags: int
    certified: bool = False

    def to_json(self) -> dict:
        return {"kind": self.kind, "region": self.region, "time": self.time, "flags": self.flags, "certified": self.certified}


def _region_name(code: int) -> str | None:
    if code > 0:
        return f"sink:{code}"
    if code < 0:
        return f"annulus:{-code}"
    return None


def classify_point(
    x,
    F: PlanarField,
    portrait: PhasePortrait,
    basin_enum: Iterable[CertifiedBall] | None = None,
    t_budget: int = 40,
    sink: int = 1,
    balls_per_round: int = 64,
    mode: str = "fast",
    step: float = 1 / 16,
) -> Verdict:
    """Classify one point of the disk against the basin of sink ``sink`` (1-based).

    The stream ``basin_enum`` is consumed ``balls_per_round`` balls per
    round alongside the trajectory tests.  ``mode='certified'`` re-runs a
    sink verdict with interval integration and sets ``certified`` when the
    enclosure at the halting time lies inside the sink disk.
    """
    sinks = portrait.sinks
    if not 1 <= sink <= len(sinks):
        raise ValueError(f"sink index {sink} out of range 1..{len(sinks)}")
    x = np.asarray([float(v) for v in x]).reshape(1, 2)
    res = race(F, portrait, x, sink - 1, basin_enum, t_budget, step, balls_per_round=balls_per_round, workers=1)
    f, t = int(res.flags[0]), int(res.time[0])
    if f & FLAG_DOMAIN and not f & ~FLAG_DOMAIN:
        raise DomainExit(f"trajectory from {x[0].tolist()} left the certified region at t={t}")
    if res.verdict[0] == UNRESOLVED:
        return Verdict("Timeout", None, t_budget, 0)
    if res.verdict[0] == IN_WS:
        kind, reg, j = "InW_s", f"sink:{sink}", sink - 1
    else:
        kind, reg = "InW_A", _region_name(int(res.region[0]))
        j = int(res.region[0]) - 1 if res.region[0] > 0 else None
    certified = False
    if mode == "certified" and j is not None:
        certified = _certify_sink_entry(F, x[0], t, sinks[j], step)
    elif mode not in ("fast", "certified"):
        raise ValueError("mode must be 'fast' or 'certified'")
    return Verdict(kind, reg, t, f, certified)


def _certify_sink_entry(F, x, t, square: IsolatingSquare, step) -> bool:
    X = tuple(Interval(Dyadic.coerce(float(v))) for v in x)
    try:
        boxes = interval_flow(F, X, t, h=Dyadic(1, -6))
    except (ToleranceUnachievable, DomainExit):
        return False
    B = boxes[-1]
    c = square.centre
    d2 = (B[0] - c[0]).sqr() + (B[1] - c[1]).sqr()
    r = Dyadic.coerce(square.radius_eff)
    return d2.hi < r * r


# ---------------------------------------------------------------------------
# Basin grids
# ---------------------------------------------------------------------------


@dataclass
class BasinGrid:
    """Verdicts on the ``2^-level`` grid points of the open unit disk."""

    level: int
    k: int
    sink: int
    ij: np.ndarray
    verdict: np.ndarray
    region: np.ndarray
    time: np.ndarray
    flags: np.ndarray
    radius: np.ndarray
    portrait: PhasePortrait | None
    t_budget: int
    arcs: list[StableArc] = field(default_factory=list)

    @property
    def points(self) -> np.ndarray:
        return self.ij / 2.0**self.level

    @property
    def hausdorff_claim(self) -> float:
        return 1.0 / self.k

    def counts(self) -> dict[str, int]:
        return {VERDICT_NAMES[c]: int(np.sum(self.verdict == c)) for c in sorted(VERDICT_NAMES)}

    def unresolved_fraction(self) -> float:
        return float(np.mean(self.verdict == UNRESOLVED)) if len(self.verdict) else 0.0

    def in_target(self) -> np.ndarray:
        return self.verdict == IN_WS

    def exclusivity_audit(self) -> dict:
        """Tests that fired at the halting round: exactly one for every classified point."""
        decided = (self.verdict == IN_WS) | (self.verdict == IN_WA)
        fired = np.array([bin(int(f) & 7).count("1") for f in self.flags[decided]], dtype=int)
        return {"classified": int(decided.sum()), "violations": int(np.sum(fired != 1))}

    def agreement(self, oracle_in: np.ndarray) -> float:
        """Fraction of cells where ``verdict == InW_s`` agrees with an oracle membership mask."""
        if len(self.verdict) == 0:
            return 1.0
        return float(np.mean(self.in_target() == np.asarray(oracle_in, dtype=bool)))

    def boundary_points(self) -> np.ndarray:
        """Midpoints between 4-adjacent grid points that disagree on ``InW_s``; points off the disk count as outside."""
        n = 2**self.level + 1
        img = np.zeros((2 * n + 1, 2 * n + 1), dtype=bool)
        img[self.ij[:, 0] + n, self.ij[:, 1] + n] = self.in_target()
        mids = []
        dx = img[1:, :] != img[:-1, :]
        a, b = np.nonzero(dx)
        mids.append(np.stack([a + 0.5 - n, b - n], axis=1))
        dy = img[:, 1:] != img[:, :-1]
        a, b = np.nonzero(dy)
        mids.append(np.stack([a - n, b + 0.5 - n], axis=1))
        return np.concatenate(mids) / 2.0**self.level

    def hausdorff_to(self, reference: np.ndarray) -> float:
        """Hausdorff distance between the computed boundary and densely sampled ``reference`` points."""
        B = self.boundary_points()
        R = np.asarray(reference, dtype=float)
        if len(B) == 0 or len(R) == 0:
            return 0.0 if len(B) == len(R) == 0 else math.inf
        return max(directed_hausdorff(B, R)[0], directed_hausdorff(R, B)[0])

    def to_json(self) -> dict:
        return {
            "format_version": 1,
            "kind": "basin-grid",
            "level": self.level,
            "k": self.k,
            "sink": self.sink,
            "t_budget": self.t_budget,
            "cells": int(len(self.verdict)),
            "counts": self.counts(),
            "unresolved_fraction": self.unresolved_fraction(),
            "hausdorff_claim": self.hausdorff_claim,
            "exclusivity": self.exclusivity_audit(),
            "portrait": self.portrait.to_json() if self.portrait is not None else None,
            "arcs": [a.to_json() for a in self.arcs],
        }

    def csv_rows(self) -> Iterator[tuple]:
        yield ("x1", "x2", "verdict", "region", "time", "flags", "ball_radius")
        for (a, b), v, r, t, f, rad in zip(self.ij, self.verdict, self.region, self.time, self.flags, self.radius):
            q = 2**self.level
            yield (
                str(Fraction(int(a), q)), str(Fraction(int(b), q)), VERDICT_NAMES[int(v)],
                _region_name(int(r)) or "", int(t), int(f), repr(float(rad)),
            )


def _empty_grid(level, k, sink, portrait, t_budget) -> BasinGrid:
    z = np.zeros(0)
    return BasinGrid(level, k, sink, np.zeros((0, 2), np.int64), z.astype(np.int8), z.astype(np.int64),
                     z.astype(np.int64), z.astype(np.uint8), z, portrait, t_budget)


def default_level(k: int) -> int:
    return resolution_exponent(k) + 2


def compute_basin(
    F: PlanarField,
    sink: int,
    k: int,
    level: int | None = None,
    t_budget: int = 40,
    step: float = 1 / 16,
    ball_level: int = 4,
    workers: int | None = None,
    portrait: PhasePortrait | None = None,
) -> BasinGrid:
    """Grid approximation of the basin of the ``sink``-th sink (1-based, lexicographic order).

    Cells in source squares or repelling annuli are ``Excluded(B)``; cells
    within a cell of a saddle square or a stable arc are
    ``Excluded(Gamma)``.  The rest race the three halting tests.  ``sink``
    of 0 or above the number of sinks gives an empty grid.
    """
    level = default_level(k) if level is None else level
    if portrait is None:
        try:
            portrait = phase_portrait(F, k)
        except (CycleCertificationFailed, ManifoldEscape) as ex:
            raise NotStructurallyStable(str(ex)) from ex
    sinks = portrait.sinks
    if sink < 1 or sink > len(sinks):
        return _empty_grid(level, k, sink, portrait, t_budget)
    pts, ij = grid_points(level)
    verdict = np.zeros(len(pts), np.int8)
    for s in portrait.sources:
        verdict[s.contains_points(pts)] = EXCLUDED_B
    for a in portrait.repelling:
        lo, _ = PolylineDistance(a.cycle, a.half_width / 4).bounds(pts)
        verdict[(lo <= a.half_width) & (verdict == 0)] = EXCLUDED_B
    arcs = []
    cell = 2.0**-level
    for s in portrait.saddles:
        verdict[s.contains_points(pts) & (verdict == 0)] = EXCLUDED_GAMMA
        arc = stable_manifold_arc(F, s, float(t_budget), strict=False)
        arcs.append(arc)
        tube = cell / 2 * math.sqrt(2) + float(arc.errors.max())
        lo, _ = PolylineDistance(arc.vertices, cell / 8, closed=False).bounds(pts)
        verdict[(lo <= tube) & (verdict == 0)] = EXCLUDED_GAMMA
    todo = np.nonzero(verdict == 0)[0]
    balls = list(enumerate_basin(F, portrait, sink - 1, max_level=ball_level, t_max=t_budget, step=step))
    res = race(F, portrait, pts[todo], sink - 1, balls, t_budget, step, workers=workers)
    region = np.zeros(len(pts), np.int64)
    time = np.zeros(len(pts), np.int64)
    flags = np.zeros(len(pts), np.uint8)
    radius = np.zeros(len(pts))
    verdict[todo] = res.verdict
    region[todo], time[todo], flags[todo], radius[todo] = res.region, res.time, res.flags, res.radius
    return BasinGrid(level, k, sink, ij, verdict, region, time, flags, radius, portrait, t_budget, arcs)


def reverify_balls(
    F: PlanarField,
    portrait: PhasePortrait,
    sink: int,
    balls: Iterable[CertifiedBall],
    samples: int = 8,
    seed: int = 0,
    t_max: int = 60,
    step: float = 1 / 32,
) -> dict:
    """Sample points in each ball and integrate them; count those that do not reach the sink disk."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    balls = list(balls)
    if not balls:
        return {"balls": 0, "samples": 0, "violations": 0}
    c = np.array([[float(b.centre[0]), float(b.centre[1])] for b in balls])
    r = np.array([float(b.radius) for b in balls])
    ang = rng.uniform(0, 2 * np.pi, (len(balls), samples))
    rad = r[:, None] * np.sqrt(rng.uniform(0, 1, (len(balls), samples)))
    pts = (c[:, None, :] + np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=-1)).reshape(-1, 2)
    y, E = batch_flow(F, pts, np.zeros(len(pts)), float(t_max), step)
    s = portrait.sinks[sink - 1]
    d = np.linalg.norm(y - np.array([float(s.centre[0]), float(s.centre[1])]), axis=1)
    bad = int(np.sum(d >= s.radius_eff))
    return {"balls": len(balls), "samples": int(len(pts)), "violations": bad}

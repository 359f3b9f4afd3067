"""Stratifications of K^n, directional triviality on balls, critical values.

A stratification is given by a finite point set S_0 and, for d >= 1,
polynomial equations whose zero set (minus the lower strata) is S_d.  The
top stratum is the complement of everything else.

Triviality of a ball along a residue line L is tested on samples: fibers
of the coordinate projection exhibiting L are intersected with the lower
strata, and fibers are matched by risometries whose displacements point
along L.  A failed match is an explicit witness of non-triviality; passing
all matches is only evidence.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Optional, Sequence

import numpy as np

from .config import Config
from .errors import (
    DomainError,
    NoConvergence,
    PrecisionExhausted,
    ResourceError,
    SingularSeed,
    SizeCapExceeded,
    UnfitSamples,
    UnsupportedFamily,
)
from .gamma import Gamma
from .puiseux import PSeries, RVClass, newton_solve, ps_rv, ps_val
from .riso import find_risometry
from .vla import KVector, ResSubspace, dir_of

TEST_WINDOW = 6
SOLVER_ERRORS = (PrecisionExhausted, NoConvergence, SingularSeed, ResourceError)

def _val(x) -> Gamma:
    """Value of x, reading an unresolvable difference as Zero (closer than the precision)."""
    if isinstance(x, (PSeries, KVector)) and x.is_zero_to_prec:
        return Gamma.zero()
    return ps_val(x)


# -- polynomials ---------------------------------------------------------------

Poly = dict  # exponent tuple -> complex coefficient


def poly_eval_point(poly: Poly, x: Sequence[PSeries]) -> tuple[PSeries, list[PSeries]]:
    """Value of the polynomial and the list of its monomial values."""
    total = PSeries.zero()
    monos = []
    for exps, c in poly.items():
        m = PSeries.const(c)
        for xi, k in zip(x, exps):
            if k:
                m = m * (xi ** k)
        monos.append(m)
        total = total + m
    return total, monos


def poly_partial(poly: Poly, k: int) -> Poly:
    out = {}
    for exps, c in poly.items():
        if exps[k]:
            e = list(exps)
            e[k] -= 1
            out[tuple(e)] = out.get(tuple(e), 0) + c * exps[k]
    return out


def univariate_in(poly: Poly, x: Sequence[PSeries], k: int) -> list[PSeries]:
    """Coefficients of the polynomial as a polynomial in coordinate k."""
    deg = max((e[k] for e in poly), default=0)
    coeffs = [PSeries.zero() for _ in range(deg + 1)]
    for exps, c in poly.items():
        m = PSeries.const(c)
        for i, (xi, a) in enumerate(zip(x, exps)):
            if i != k and a:
                m = m * (xi ** a)
        coeffs[exps[k]] = coeffs[exps[k]] + m
    return coeffs


def univariate_roots(coeffs: Sequence[PSeries], relprec=None) -> tuple[list[PSeries], bool]:
    """All simple roots via the Newton polygon and Newton lifting.

    Returns (roots, complete); ``complete`` is False when some root could not
    be lifted (multiple root of an edge polynomial or solver failure).
    """
    coeffs = list(coeffs)
    while coeffs and coeffs[-1].is_exact_zero:
        coeffs.pop()
    if len(coeffs) <= 1:
        return [], True
    roots: list[PSeries] = []
    complete = True
    low = 0
    while coeffs[low].is_exact_zero:
        low += 1
    if low:
        roots.append(PSeries.zero())
        if low > 1:
            complete = False
    pts = []
    for k in range(low, len(coeffs)):
        c = coeffs[k]
        if c.is_zero_to_prec:
            if not c.is_exact_zero:
                complete = False
            continue
        pts.append((k, c.lead_exp))
    # lower convex hull
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (y2 - y1) * (p[0] - x1) >= (p[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(p)
    for (k0, v0), (k1, v1) in zip(hull, hull[1:]):
        e = -(v1 - v0) / (k1 - k0)
        on_edge = [(k, c) for k, c in ((k, coeffs[k]) for k in range(k0, k1 + 1))
                   if not c.is_zero_to_prec and c.lead_exp + k * e == v0 + k0 * e]
        poly = np.zeros(k1 - k0 + 1, dtype=complex)
        for k, c in on_edge:
            poly[k - k0] = c.lead_coeff
        rs = np.roots(poly[::-1])
        for i, r in enumerate(rs):
            if abs(r) < 1e-12:
                continue
            if any(abs(r - s) <= 1e-6 * max(1.0, abs(r)) for j, s in enumerate(rs) if j != i):
                complete = False
                continue
            try:
                roots.append(newton_solve(coeffs, RVClass(Gamma.of(e), [r]), relprec))
            except SOLVER_ERRORS:
                complete = False
    return roots, complete


# -- stratifications -------------------------------------------------------------

@dataclass
class Membership:
    member: Optional[bool]
    numeric: bool = False

    def __bool__(self):
        return bool(self.member)


class StratSpec:
    """Stratification of K^n by a point set and polynomial strata."""

    def __init__(self, n: int, points: Sequence[KVector], strata: dict[int, list[Poly]],
                 family: str = "custom", params: tuple = ()):
        if not 1 <= n <= 3:
            raise DomainError("ambient dimension must be 1, 2 or 3")
        self.n = n
        self.points = [p if isinstance(p, KVector) else KVector(p) for p in points]
        self.strata = {int(d): list(ps) for d, ps in strata.items() if ps}
        self.family = family
        self.params = tuple(params)

    # built-in families
    @classmethod
    def cusp(cls, a: int, b: int) -> "StratSpec":
        if math.gcd(a, b) != 1 or a <= b or b < 1:
            raise DomainError("cusp(a,b) needs coprime a > b >= 1")
        poly = {(a, 0): 1, (0, b): -1}
        return cls(2, [KVector([0, 0])], {1: [poly]}, "cusp", (a, b))

    @classmethod
    def trumpet(cls) -> "StratSpec":
        poly = {(0, 2, 0): 1, (0, 0, 2): 1, (3, 0, 0): -1}
        return cls(3, [KVector([0, 0, 0])], {2: [poly]}, "trumpet")

    @classmethod
    def parabola(cls) -> "StratSpec":
        return cls(2, [], {1: [{(2, 0): 1, (0, 1): -1}]}, "parabola")

    @classmethod
    def from_name(cls, name: str) -> "StratSpec":
        name = name.strip()
        if name.startswith("cusp:"):
            a, b = (int(v) for v in name[5:].split(","))
            return cls.cusp(a, b)
        if name == "trumpet":
            return cls.trumpet()
        if name == "parabola":
            return cls.parabola()
        raise UnsupportedFamily(f"unknown family {name!r}")

    @classmethod
    def from_json(cls, obj: dict) -> "StratSpec":
        n = int(obj["n"])
        points = [KVector.from_json(p) for p in obj.get("points", [])]
        strata = {}
        for d, polys in obj.get("strata", {}).items():
            strata[int(d)] = [
                {tuple(int(k) for k in exps): complex(Fraction(str(c)) if isinstance(c, str) else c)
                 for c, exps in poly}
                for poly in polys
            ]
        return cls(n, points, strata, "custom")

    def name(self) -> str:
        if self.family == "cusp":
            return f"cusp:{self.params[0]},{self.params[1]}"
        return self.family

    @property
    def lower_dims(self) -> list[int]:
        return sorted(self.strata)

    def denominator_base(self) -> int:
        if self.family == "cusp":
            a, b = self.params
            return math.lcm(a, b, 6)
        return 6

    # membership
    def is_point(self, x: KVector) -> bool:
        for p in self.points:
            d = x - p
            if d.is_zero_to_prec:
                return True
        return False

    def on_variety(self, d: int, x: KVector) -> Membership:
        numeric = False
        for poly in self.strata.get(d, []):
            val, monos = poly_eval_point(poly, x.coords)
            if val.is_exact_zero:
                continue
            if val.is_zero_to_prec:
                if all(m.is_zero_to_prec or (m.items and m.lead_exp < val.prec) for m in monos):
                    numeric = True
                    continue
                return Membership(None)
            return Membership(False)
        return Membership(True, numeric)

    def stratum_of(self, x: KVector) -> int:
        if self.is_point(x):
            return 0
        for d in self.lower_dims:
            if self.on_variety(d, x):
                return d
        return self.n

    # fiber solving
    def solve_coordinate(self, d: int, x: Sequence[PSeries], k: int) -> tuple[list[PSeries], bool]:
        """Values of coordinate k putting x on the variety of S_d."""
        x = list(x)
        if self.family == "cusp":
            a, b = self.params
            if k == 1:
                return _branches(x[0], Fraction(a, b), b), True
            return _branches(x[1], Fraction(b, a), a), True
        if self.family == "parabola":
            if k == 1:
                return [x[0] * x[0]], True
            return _branches(x[1], Fraction(1, 2), 2), True
        if self.family == "trumpet":
            X, Y, Z = x
            if k == 0:
                return _branches(Y * Y + Z * Z, Fraction(1, 3), 3), True
            if k == 1:
                return _branches(X ** 3 - Z * Z, Fraction(1, 2), 2), True
            return _branches(X ** 3 - Y * Y, Fraction(1, 2), 2), True
        polys = self.strata.get(d, [])
        if not polys:
            return [], True
        roots, complete = univariate_roots(univariate_in(polys[0], x, k))
        out = []
        for r in roots:
            y = list(x)
            y[k] = r
            m = self.on_variety(d, KVector(y))
            if m.member:
                out.append(r)
            elif m.member is None:
                complete = False
        return out, complete

    def same_fiber_points(self, d: int, c: KVector) -> tuple[list[KVector], bool]:
        """Points of the variety of S_d differing from c in one coordinate."""
        pts = []
        complete = True
        for k in range(self.n):
            try:
                vals, ok = self.solve_coordinate(d, c.coords, k)
            except SOLVER_ERRORS:
                complete = False
                continue
            complete &= ok
            for v in vals:
                y = list(c.coords)
                y[k] = v
                pts.append(KVector(y))
        return pts, complete

    def curve_point(self, s: PSeries) -> KVector:
        """Parametrization of the one-dimensional stratum (cusp, parabola)."""
        if self.family == "cusp":
            a, b = self.params
            return KVector([s ** b, s ** a])
        if self.family == "parabola":
            return KVector([s, s * s])
        raise UnsupportedFamily(f"{self.family} has no curve parametrization")

    def surface_point(self, s: PSeries, w: PSeries) -> KVector:
        """Parametrization of the trumpet surface."""
        if self.family != "trumpet":
            raise UnsupportedFamily("surface parametrization is only built in for the trumpet")
        winv = w.inverse()
        s3 = s ** 3
        return KVector([s * s, s3 * (w + winv) * 0.5, s3 * (w - winv) * (-0.5j)])


def _trim(x: PSeries, lim: Fraction) -> PSeries:
    if x.is_exact and (not x.items or x.terms[-1][0] < lim):
        return x
    return x.truncate(lim)


def _branches(radicand: PSeries, alpha: Fraction, count: int) -> list[PSeries]:
    if radicand.is_exact_zero:
        return [PSeries.zero()]
    if radicand.is_zero_to_prec:
        return [PSeries.zero(radicand.prec * alpha)]
    return [radicand.power(alpha, br) for br in range(count)]


def stratum_membership(S: StratSpec, d: int, x: KVector) -> Membership:
    if d == 0:
        return Membership(S.is_point(x))
    if S.is_point(x):
        return Membership(False)
    for lower in S.lower_dims:
        if lower >= d:
            break
        m = S.on_variety(lower, x)
        if m.member is None:
            return Membership(None)
        if m.member:
            return Membership(False)
    if d >= S.n:
        return Membership(True)
    if d not in S.strata:
        return Membership(False)
    return S.on_variety(d, x)


# -- balls and distances ---------------------------------------------------------------

@dataclass
class Ball:
    center: KVector
    radius: Gamma
    open: bool = True

    def __post_init__(self):
        if self.radius.is_inf and not self.open:
            raise DomainError("a ball of radius Inf must be open")

    def contains(self, x: KVector) -> bool:
        d = x - self.center
        if d.is_zero_to_prec:
            return True
        v = _val(d)
        return v < self.radius if self.open else v <= self.radius

    def to_json(self) -> dict:
        return {"center": self.center.to_json(), "radius": self.radius.to_json(), "open": self.open}

    @classmethod
    def from_json(cls, obj) -> "Ball":
        return cls(KVector.from_json(obj["center"]), Gamma.from_json(obj["radius"]), bool(obj.get("open", True)))


@dataclass
class DistResult:
    value: Gamma
    exact: bool
    nearest: Optional[KVector] = None


def dist_to_stratum(S: StratSpec, d_max: int, c: KVector, rng: random.Random | None = None,
                    samples: int = 16) -> DistResult:
    """v(c - S_{<=d_max}), by same-fiber solving plus a local sample."""
    best: Optional[Gamma] = None
    nearest = None
    exact = True
    if d_max < 0:
        return DistResult(Gamma.inf(), True, None)
    if d_max >= S.n:
        return DistResult(Gamma.zero(), True, c)
    for p in S.points:
        v = _val(c - p)
        if best is None or v < best:
            best, nearest = v, p
    for d in S.lower_dims:
        if d > d_max:
            break
        m = S.on_variety(d, c)
        if m.member:
            return DistResult(Gamma.zero(), not m.numeric, c)
        pts, complete = S.same_fiber_points(d, c)
        exact &= complete
        for p in pts:
            try:
                v = _val(c - p)
            except PrecisionExhausted:
                exact = False
                continue
            if best is None or v < best:
                best, nearest = v, p
    if best is None:
        return DistResult(Gamma.inf(), True, None)
    if best.is_zero:
        return DistResult(best, exact, nearest)
    # local sample around the nearest variety point
    if rng is not None and nearest is not None and not S.is_point(nearest):
        d_near = S.stratum_of(nearest)
        if d_near in S.strata:
            for _ in range(samples):
                k = rng.randrange(S.n)
                off = PSeries.monomial(_unit(rng), best.exp + Fraction(rng.randint(0, 6), 2))
                y = list(nearest.coords)
                y[k] = y[k] + off
                free = rng.choice([i for i in range(S.n) if i != k])
                try:
                    vals, _ = S.solve_coordinate(d_near, y, free)
                except SOLVER_ERRORS:
                    continue
                for v_ in vals:
                    z = list(y)
                    z[free] = v_
                    try:
                        v = _val(c - KVector(z))
                    except PrecisionExhausted:
                        continue
                    if v < best:
                        best, nearest, exact = v, KVector(z), False
    return DistResult(best, exact, nearest)


def _unit(rng: random.Random) -> complex:
    r = rng.uniform(0.5, 2.0)
    th = rng.uniform(0, 2 * math.pi)
    return complex(round(r * math.cos(th), 6), round(r * math.sin(th), 6))


# -- fibers and triviality -----------------------------------------------------------

@dataclass
class FiberSample:
    points: list
    labels: list
    complete: bool = True
    error: str = ""


def sample_fiber_points(S: StratSpec, proj: Sequence[int], fiber_base: Sequence, ball: Ball) -> FiberSample:
    """Finite intersection of a coordinate fiber with the lower strata, inside the ball."""
    proj = list(proj)
    base = [PSeries.coerce(v) for v in fiber_base]
    free = [k for k in range(S.n) if k not in proj]
    out = FiberSample([], [])

    def add(p: KVector, label: int):
        for q in out.points:
            if (q - p).is_zero_to_prec:
                return
        out.points.append(p)
        out.labels.append(label)

    for p in S.points:
        if all(not (p[k] - v).items for k, v in zip(proj, base)) and ball.contains(p):
            add(p, 0)
    if len(free) != 1:
        raise DomainError("fiber intersections are finite only for one free coordinate")
    k = free[0]
    x = [PSeries.zero()] * S.n
    for i, v in zip(proj, base):
        x[i] = v
    for d in S.lower_dims:
        try:
            vals, ok = S.solve_coordinate(d, x, k)
        except SOLVER_ERRORS as exc:
            out.complete = False
            out.error = repr(exc)
            continue
        out.complete &= ok
        for v in vals:
            y = list(x)
            y[k] = v
            p = KVector(y)
            try:
                if not ball.contains(p):
                    continue
            except PrecisionExhausted as exc:
                out.complete = False
                out.error = repr(exc)
                continue
            if S.is_point(p):
                continue
            add(p, d)
    return out


@dataclass
class TrivialityVerdict:
    status: str          # trivial_on_sample | non_trivial | inconclusive
    witness: Optional[tuple] = None
    note: str = ""

    @property
    def non_trivial(self) -> bool:
        return self.status == "non_trivial"


def _exhibit_line(L: ResSubspace) -> tuple[int, np.ndarray]:
    if L.dim != 1:
        raise DomainError("direction must be a residue line")
    row = L.rows[0]
    p = int(np.argmax(np.abs(row)))
    return p, row / row[p]


def _fiber_offsets(ball: Ball, n: int, rng: random.Random) -> list[PSeries]:
    if ball.radius.is_inf:
        lo, strict = Fraction(-3), False
    elif ball.radius.is_zero:
        return []
    else:
        lo, strict = ball.radius.exp, ball.open
    steps = [Fraction(1, 6), Fraction(1, 3), Fraction(1, 2), Fraction(2, 3), Fraction(1),
             Fraction(3, 2), Fraction(2), Fraction(3)]
    if not strict:
        steps = [Fraction(0)] + steps
    out = []
    for i in range(n):
        e = lo + steps[i % len(steps)]
        out.append(PSeries.monomial(_unit(rng), e))
    return out


def _lower_strata_meet(S: StratSpec, ball: Ball, rng) -> bool:
    if ball.radius.is_inf:
        return bool(S.points or S.strata)
    d = dist_to_stratum(S, S.n - 1, ball.center, rng, samples=4).value
    if d.is_inf:
        return False
    return d < ball.radius if ball.open else d <= ball.radius


def is_dir_trivial_on_ball(S: StratSpec, ball: Ball, L: ResSubspace, n_fibers: int = 32,
                           rng: random.Random | None = None) -> TrivialityVerdict:
    rng = rng or random.Random(0)
    if ball.radius.is_finite:
        # only differences up to a few steps below the radius matter
        # roots of coordinates with negative leads lose absolute precision
        leads = [x.lead_exp for x in ball.center if x.items]
        lim = ball.radius.exp + TEST_WINDOW + 3 * max([Fraction(0)] + [-e for e in leads])
        ball = Ball(KVector([_trim(x, lim) for x in ball.center]), ball.radius, ball.open)
    if not _lower_strata_meet(S, ball, rng):
        return TrivialityVerdict("trivial_on_sample", note="ball misses the lower strata")
    p, ell = _exhibit_line(L)
    ellv = KVector.constant(ell)
    if S.n == 2:
        return _matching_test(S, ball, p, ellv, n_fibers, rng)
    return _arc_test(S, ball, p, ellv, n_fibers, rng)


def _along(delta: PSeries, ellv: KVector) -> KVector:
    return ellv.scale(delta)


def _matching_test(S, ball, p, ellv, n_fibers, rng) -> TrivialityVerdict:
    c = ball.center
    offsets = [PSeries.zero()]
    for z in S.points:
        if ball.contains(z):
            offsets.append(z[p] - c[p])
    offsets += _fiber_offsets(ball, max(0, n_fibers - len(offsets)), rng)
    fibers = []
    for off in offsets:
        q = c[p] + off
        fs = sample_fiber_points(S, [p], [q], ball)
        if not fs.complete:
            return TrivialityVerdict("inconclusive", note=f"solver failure on a fiber: {fs.error}")
        fibers.append((q, fs))
    pairs = [(0, j) for j in range(1, len(fibers))] + [(j, j + 1) for j in range(1, len(fibers) - 1)]
    for i, j in pairs:
        qi, fi = fibers[i]
        qj, fj = fibers[j]
        if sorted(fi.labels) != sorted(fj.labels):
            return TrivialityVerdict("non_trivial", (qi, qj), "stratum counts differ between fibers")
        if not fi.points:
            continue
        dq = qj - qi
        if dq.is_zero_to_prec:
            continue
        vdq = _val(dq)
        shift = _along(dq, ellv)

        def pair_ok(a, b, fi=fi, fj=fj, shift=shift, vdq=vdq):
            return _val(fj.points[b] - fi.points[a] - shift) < vdq

        try:
            m = find_risometry(fi.points, fj.points, labels_x=fi.labels, labels_y=fj.labels, pair_ok=pair_ok)
        except SizeCapExceeded:
            return TrivialityVerdict("inconclusive", note="fiber too large for the matcher")
        except PrecisionExhausted:
            return TrivialityVerdict("inconclusive", note="precision exhausted while matching")
        if m is None:
            return TrivialityVerdict("non_trivial", (qi, qj), "no matching along the direction")
    return TrivialityVerdict("trivial_on_sample", note=f"{len(fibers)} fibers matched")


def _ball_points(S: StratSpec, ball: Ball, rng, count: int = 6) -> list[tuple[KVector, int]]:
    """Sample points of the lower strata inside the ball."""
    pts = []
    for z in S.points:
        if ball.contains(z):
            pts.append((z, 0))
    c = ball.center
    seeds = [c]
    if not ball.radius.is_inf:
        for off in _fiber_offsets(ball, count, rng):
            k = rng.randrange(S.n)
            y = list(c.coords)
            y[k] = y[k] + off
            seeds.append(KVector(y))
    for d in S.lower_dims:
        for s in seeds:
            cand, _ = S.same_fiber_points(d, s)
            for z in cand:
                try:
                    if ball.contains(z) and not S.is_point(z):
                        if not any((z - w).is_zero_to_prec for w, _ in pts):
                            pts.append((z, d))
                except PrecisionExhausted:
                    continue
    return pts


def _arc_test(S, ball, p, ellv, n_fibers, rng) -> TrivialityVerdict:
    pts = _ball_points(S, ball, rng)
    offsets = _fiber_offsets(ball, n_fibers, rng)
    for z, d in pts:
        for off in offsets:
            target = z + _along(off, ellv)
            vd = _val(off)
            if d == 0:
                return TrivialityVerdict("non_trivial", (z, target), "isolated point has no partner")
            found = False
            for k in range(S.n):
                if k == p:
                    continue
                try:
                    vals, _ = S.solve_coordinate(d, target.coords, k)
                except SOLVER_ERRORS:
                    continue
                for v in vals:
                    y = list(target.coords)
                    y[k] = v
                    cand = KVector(y)
                    if S.is_point(cand):
                        continue
                    try:
                        if _val(cand - target) < vd:
                            found = True
                            break
                    except PrecisionExhausted:
                        continue
                if found:
                    break
            if not found:
                return TrivialityVerdict("non_trivial", (z, target), "no stratum point follows the direction")
    return TrivialityVerdict("trivial_on_sample", note=f"{len(pts)} points followed")


# -- critical values -----------------------------------------------------------------

@dataclass
class CritResult:
    values: set
    witnesses: dict = field(default_factory=dict)
    inconclusive: set = field(default_factory=set)
    tested: int = 0


def candidate_grid(S: StratSpec, lam: Sequence[Gamma] = ()) -> set:
    q = S.denominator_base()
    dens = [d for d in range(1, q + 1) if q % d == 0]
    base = {Fraction(p, d) for p in range(-12, 13) for d in dens}
    out = set(base)
    small = {Fraction(p, d) for p in range(-6, 7) for d in dens}
    fin = [l.exp for l in lam if l.is_finite and l.exp != 0]
    for e in fin:
        out |= {e * r for r in base}
    for i, e in enumerate(fin):
        for f in fin[i + 1:]:
            out |= {e * r + f * s for r in small for s in small}
    return {Gamma.of(e) for e in out}


def _witness_pool(S: StratSpec, c: KVector, exps: list[Fraction], rng: random.Random) -> list[KVector]:
    pool: list[KVector] = []
    pool += list(S.points)
    branch = []
    for d in S.lower_dims:
        pts, _ = S.same_fiber_points(d, c)
        branch += pts
    pool += branch
    bases = list(branch)
    if S.stratum_of(c) < S.n and not S.is_point(c):
        bases.append(c)
    # moves along the strata starting from the branch points
    for b in bases:
        d = S.stratum_of(b)
        if d == 0 or d not in S.strata:
            continue
        for e in exps:
            k = rng.randrange(S.n)
            y = list(b.coords)
            y[k] = y[k] + PSeries.monomial(_unit(rng), e)
            others = [i for i in range(S.n) if i != k]
            free = rng.choice(others)
            try:
                vals, _ = S.solve_coordinate(d, y, free)
            except SOLVER_ERRORS:
                continue
            best = None
            for v in vals:
                z = list(y)
                z[free] = v
                zv = KVector(z)
                try:
                    dv = _val(zv - b)
                except PrecisionExhausted:
                    continue
                if best is None or dv < best[0]:
                    best = (dv, zv)
            if best:
                pool.append(best[1])
    # points spread over the one-dimensional stratum
    if S.family in ("cusp", "parabola"):
        for e in exps:
            for _ in range(2):
                pool.append(S.curve_point(PSeries.monomial(_unit(rng), e)))
    return pool


def crit_values_at_point(S: StratSpec, c: KVector, candidates: Sequence[Gamma],
                         config: Config | None = None, rng: random.Random | None = None) -> CritResult:
    if not candidates:
        raise DomainError("candidate list is empty")
    config = config or Config()
    rng = rng or config.rng("crit", repr(c))
    cand = set(candidates)
    lead = _val(c).exp if not _val(c).is_zero else Fraction(0)
    s_exps = sorted({e for e in (Fraction(k, 6) for k in range(-30, 61))
                     if lead - 4 <= e <= lead + 8} | {Fraction(0)})
    pool = _witness_pool(S, c, s_exps, rng)
    groups: dict[Gamma, list[KVector]] = {}
    for x in pool:
        d = x - c
        if d.is_zero_to_prec:
            continue
        try:
            g = _val(d)
        except PrecisionExhausted:
            continue
        if g in cand:
            groups.setdefault(g, [])
            if not any((x - y).is_zero_to_prec for y in groups[g]):
                groups[g].append(x)
    res = CritResult(set())
    for g in sorted(groups):
        witnesses = groups[g][: config.witnesses_per_value]
        statuses = []
        for x in witnesses:
            res.tested += 1
            L = dir_of(x - c)
            verdict = is_dir_trivial_on_ball(S, Ball(x, g, True), L, config.n_fibers,
                                             config.rng("fiber", repr(x), str(g)))
            statuses.append(verdict.status)
            if verdict.non_trivial:
                res.values.add(g)
                res.witnesses[g] = x
                break
        else:
            if statuses and all(s == "inconclusive" for s in statuses):
                res.inconclusive.add(g)
    return res


# -- critical value function ------------------------------------------------------------

def in_simplex(lam: Sequence[Gamma]) -> bool:
    return all(lam[i] >= lam[i + 1] for i in range(len(lam) - 1))


@dataclass
class CritEval:
    values: set
    placements: list = field(default_factory=list)
    unrealized: bool = False
    inconclusive: set = field(default_factory=set)


def _verify_placement(S: StratSpec, c: KVector, lam: Sequence[Gamma], rng) -> bool:
    for i, target in enumerate(lam):
        d = dist_to_stratum(S, i, c, rng, samples=4)
        if d.value != target:
            return False
    return True


def place_point(S: StratSpec, lam: Sequence[Gamma], rng: random.Random, attempts: int = 2000) -> Optional[KVector]:
    """A point c with v(c - S_{<=i}) = lam[i] for every i, or None."""
    n = S.n
    if len(lam) != n:
        raise DomainError(f"lambda must have {n} components")
    if not in_simplex(lam):
        raise DomainError("lambda must be weakly decreasing")
    first_nonzero = next((i for i, l in enumerate(lam) if not l.is_zero), n)
    if first_nonzero == n:
        # c lies in S_0
        return S.points[0] if S.points else None
    if any(l.is_inf for l in lam) and S.points:
        return None
    if S.family not in ("cusp", "parabola"):
        return _random_placement(S, lam, rng, attempts)
    if lam[0].is_zero:
        return None
    e0 = lam[0].exp
    for attempt in range(min(attempts, 200)):
        p = _curve_point_at(S, e0, rng)
        if p is None:
            return None
        if lam[1].is_zero:
            cand = p
        else:
            cand = _transverse_offset(S, p, lam[1].exp, rng)
        if _verify_placement(S, cand, lam, rng):
            return cand
    return _random_placement(S, lam, rng, attempts)


def _curve_point_at(S: StratSpec, e0: Fraction, rng) -> Optional[KVector]:
    if S.family == "cusp":
        a, b = S.params
        e = e0 / b if e0 >= 0 else e0 / a
    else:
        e = e0 if e0 >= 0 else e0 / 2
    return S.curve_point(PSeries.monomial(_unit(rng), e))


def _transverse_offset(S: StratSpec, p: KVector, e: Fraction, rng) -> KVector:
    if S.family == "cusp":
        a, b = S.params
        # tangent direction of s -> (s^b, s^a) is (b s^(b-1), a s^(a-1))
        tx = p[0] * b
        ty = p[1] * a
    else:
        tx, ty = PSeries.const(1), p[0] * 2
    tangent = np.array(ps_rv(KVector([tx, ty])).slice)
    k = 1 if abs(tangent[0]) >= abs(tangent[1]) else 0
    y = list(p.coords)
    y[k] = y[k] + PSeries.monomial(_unit(rng), e)
    return KVector(y)


def _random_placement(S: StratSpec, lam, rng, attempts) -> Optional[KVector]:
    exps = [l.exp for l in lam if l.is_finite]
    if not exps:
        return None
    for _ in range(attempts):
        e = rng.choice(exps)
        y = [PSeries.monomial(_unit(rng), e + Fraction(rng.randint(0, 4), 2)) for _ in range(S.n)]
        if S.points:
            y = [a + b for a, b in zip(y, S.points[0].coords)]
        c = KVector(y)
        if _verify_placement(S, c, lam, rng):
            return c
    return None


def crit_function_eval(S: StratSpec, lam: Sequence[Gamma], config: Config | None = None) -> CritEval:
    config = config or Config()
    lam = list(lam)
    if len(lam) != S.n or not in_simplex(lam):
        raise DomainError("lambda must be a weakly decreasing vector of length n")
    rng = config.rng("place", *map(repr, lam))
    grid = candidate_grid(S, lam)
    out = CritEval(set())
    for _ in range(config.n_points):
        c = place_point(S, lam, rng, config.placement_attempts)
        if c is None:
            out.unrealized = True
            return CritEval(set(), [], True)
        out.placements.append(c)
        r = crit_values_at_point(S, c, sorted(grid), config)
        out.values |= r.values
        out.inconclusive |= r.inconclusive
    return out


# -- piecewise monomial fit ------------------------------------------------------------

def _kind(g: Gamma) -> str:
    return "zero" if g.is_zero else "inf" if g.is_inf else "finite"


@dataclass(frozen=True)
class Monomial:
    mu: Fraction
    exps: tuple  # one rational per coordinate (zero for non-finite coordinates)

    def __call__(self, lam: Sequence[Gamma]) -> Gamma:
        e = self.mu
        for r, l in zip(self.exps, lam):
            if r:
                e += r * l.exp
        return Gamma.of(e)

    def to_json(self) -> dict:
        return {"mu": Gamma.of(self.mu).to_json(), "exps": [[r.numerator, r.denominator] for r in self.exps]}

    @classmethod
    def from_json(cls, obj) -> "Monomial":
        return cls(Gamma.from_json(obj["mu"]).exp, tuple(Fraction(a, b) for a, b in obj["exps"]))


@dataclass(frozen=True)
class Constraint:
    """<c0> * prod lam_i^{r_i} <= 1 (or < 1 when strict)."""

    mu: Fraction
    exps: tuple
    strict: bool = False

    def holds(self, lam: Sequence[Gamma]) -> bool:
        e = self.mu + sum((r * l.exp for r, l in zip(self.exps, lam) if r), Fraction(0))
        return e > 0 if self.strict else e >= 0

    def to_json(self) -> dict:
        return {"mu": Gamma.of(self.mu).to_json(), "exps": [[r.numerator, r.denominator] for r in self.exps],
                "strict": self.strict}

    @classmethod
    def from_json(cls, obj) -> "Constraint":
        return cls(Gamma.from_json(obj["mu"]).exp, tuple(Fraction(a, b) for a, b in obj["exps"]),
                   bool(obj.get("strict", False)))


@dataclass
class Piece:
    pattern: tuple
    region: list
    values: list

    def contains(self, lam: Sequence[Gamma]) -> bool:
        return tuple(_kind(l) for l in lam) == self.pattern and all(c.holds(lam) for c in self.region)


@dataclass
class CritFunction:
    pieces: list

    def evaluate(self, lam: Sequence[Gamma]) -> set:
        out = set()
        for p in self.pieces:
            if p.contains(lam):
                out |= {m(lam) for m in p.values}
        return out

    def to_json(self) -> dict:
        return {"pieces": [{"pattern": list(p.pattern), "region": [c.to_json() for c in p.region],
                            "values": [m.to_json() for m in p.values]} for p in self.pieces]}

    @classmethod
    def from_json(cls, obj) -> "CritFunction":
        return cls([Piece(tuple(p["pattern"]), [Constraint.from_json(c) for c in p["region"]],
                          [Monomial.from_json(m) for m in p["values"]]) for p in obj["pieces"]])


def _solve_exact(rows: list[list[Fraction]], rhs: list[Fraction]) -> Optional[list[Fraction]]:
    n = len(rows[0])
    a = [list(r) + [b] for r, b in zip(rows, rhs)]
    for col in range(n):
        piv = next((i for i in range(col, len(a)) if a[i][col] != 0), None)
        if piv is None:
            return None
        a[col], a[piv] = a[piv], a[col]
        f = a[col][col]
        a[col] = [x / f for x in a[col]]
        for i in range(len(a)):
            if i != col and a[i][col] != 0:
                g = a[i][col]
                a[i] = [x - g * y for x, y in zip(a[i], a[col])]
    return [a[i][n] for i in range(n)]


def fit_monomial_pieces(samples: Sequence[tuple]) -> CritFunction:
    """Group sampled critical values into monomials in lambda.

    Samples are (lambda, crit set).  Within each zero/finite/inf pattern,
    candidate monomials are solved exactly from tuples of samples; a
    monomial's region is a maximal run of consecutive samples (ordered
    coordinatewise) on which it reproduces a sampled value.
    """
    by_pattern: dict[tuple, list] = {}
    for lam, vals in samples:
        lam = list(lam)
        by_pattern.setdefault(tuple(_kind(l) for l in lam), []).append((lam, set(vals)))
    pieces = []
    for pattern, group in sorted(by_pattern.items()):
        pieces += _fit_pattern(pattern, group)
    return CritFunction(pieces)


def _fit_pattern(pattern, group) -> list:
    n = len(pattern)
    idx = [i for i, k in enumerate(pattern) if k == "finite"]
    for lam, vals in group:
        if any(not v.is_finite for v in vals):
            raise UnfitSamples("critical values must be finite", [(lam, vals)])
    if not idx:
        vals = set().union(*(v for _, v in group))
        if any(v != vals for _, v in group):
            raise UnfitSamples("conflicting samples at the same lambda", group)
        mons = [Monomial(v.exp, (Fraction(0),) * n) for v in sorted(vals)]
        return [Piece(pattern, [], mons)]
    group = sorted(group, key=lambda s: tuple(s[0][i].exp for i in idx), reverse=False)
    points = [tuple(lam[i].exp for i in idx) for lam, _ in group]
    if len(set(points)) < len(idx) + 1:
        raise UnfitSamples("need more samples with distinct lambda", group)
    k = len(idx)
    # candidate monomials through k+1 samples
    cands: set[Monomial] = set()
    for combo in combinations(range(len(group)), k + 1):
        rows = [[Fraction(1)] + list(points[s]) for s in combo]
        if len({points[s] for s in combo}) < k + 1:
            continue
        for choice in product(*(sorted(group[s][1]) for s in combo)):
            sol = _solve_exact(rows, [g.exp for g in choice])
            if sol is None:
                continue
            exps = [Fraction(0)] * n
            for i, r in zip(idx, sol[1:]):
                exps[i] = r
            cands.add(Monomial(sol[0], tuple(exps)))
    if k >= 2:
        return _fit_cones(pattern, group, points, cands, idx)
    # runs of support along the sample order
    runs = []
    for m in cands:
        hits = [m(group[s][0]) in group[s][1] for s in range(len(group))]
        s = 0
        while s < len(hits):
            if hits[s]:
                t = s
                while t + 1 < len(hits) and hits[t + 1]:
                    t += 1
                if len({points[u] for u in range(s, t + 1)}) >= k + 1:
                    runs.append((m, s, t))
                s = t + 1
            else:
                s += 1
    runs.sort(key=lambda r: (-(r[2] - r[1]), r[1], r[0].mu, r[0].exps))
    needed = {(s, g) for s in range(len(group)) for g in group[s][1]}
    chosen = []
    for m, s, t in runs:
        covers = {(u, m(group[u][0])) for u in range(s, t + 1)} & needed
        if covers:
            chosen.append((m, s, t))
            needed -= covers
    if needed:
        bad = sorted({(tuple(group[s][0]), g) for s, g in needed}, key=repr)
        raise UnfitSamples("no consistent exact monomial fit", bad)
    # drop monomials made redundant by later, shorter choices
    for c in range(len(chosen) - 1, -1, -1):
        m, s, t = chosen[c]
        rest = chosen[:c] + chosen[c + 1:]
        if all(any(s2 <= u <= t2 and m2(group[u][0]) == m(group[u][0]) for m2, s2, t2 in rest)
               for u in range(s, t + 1)):
            chosen = rest
    # a monomial must explain values at k+1 samples that no other one explains
    for c, (m, s, t) in enumerate(chosen):
        own = set()
        for u in range(s, t + 1):
            v = m(group[u][0])
            if not any(c2 != c and s2 <= u <= t2 and m2(group[u][0]) == v
                       for c2, (m2, s2, t2) in enumerate(chosen)):
                own.add(points[u])
        if len(own) < k + 1:
            bad = [(m, tuple(group[u][0]), sorted(group[u][1])) for u in range(s, t + 1)]
            raise UnfitSamples("a monomial is supported by too few samples", bad)
    active = [frozenset(c for c, (m, s, t) in enumerate(chosen) if s <= u <= t) for u in range(len(group))]
    if k == 1:
        members = []
        for u in range(len(group)):
            if members and active[u] == active[members[-1][0]]:
                members[-1].append(u)
            else:
                members.append([u])
    else:
        by_set: dict[frozenset, list] = {}
        for u in range(len(group)):
            by_set.setdefault(active[u], []).append(u)
        members = list(by_set.values())
    out = []
    for mem in members:
        ms = sorted({chosen[c][0] for c in active[mem[0]]}, key=lambda m: (m.mu, m.exps))
        out.append(Piece(pattern, _region(group, idx, n, mem), ms))
    for lam, vals in group:
        got = set()
        for p in out:
            if p.contains(lam):
                got |= {m(lam) for m in p.values}
        if got != vals:
            raise UnfitSamples("box regions overlap on the samples", [(tuple(lam), sorted(vals))])
    return out


def _fit_cones(pattern, group, points, cands, idx) -> list:
    """One piece per monomial, cut out by comparisons between chosen monomials."""
    k = len(idx)
    support = {}
    for m in cands:
        hit = [u for u in range(len(group)) if m(group[u][0]) in group[u][1]]
        if len({points[u] for u in hit}) >= k + 1:
            support[m] = hit
    needed = {(u, g) for u in range(len(group)) for g in group[u][1]}
    cover = {m: {(u, m(group[u][0])) for u in support[m]} for m in support}
    chosen = []
    while needed:
        best = max(support, key=lambda m: (len(cover[m] & needed), -_height(m), len(support[m])), default=None)
        if best is None or not cover[best] & needed:
            break
        chosen.append(best)
        needed -= cover[best]
    if needed:
        bad = sorted({(tuple(group[u][0]), g) for u, g in needed}, key=repr)
        raise UnfitSamples("no consistent exact monomial fit", bad)
    def redundant(m, rest):
        return all(any(u in support[m2] and m2(group[u][0]) == m(group[u][0]) for m2 in rest)
                   for u in support[m])

    while True:
        extra = [m for m in chosen if redundant(m, [x for x in chosen if x is not m])]
        if not extra:
            break
        worst = max(extra, key=lambda m: (_height(m), -len(support[m])))
        chosen = [x for x in chosen if x is not worst]
    owned = {}
    for m in chosen:
        owned[m] = [u for u in support[m]
                    if not any(m2 is not m and u in support[m2] and m2(group[u][0]) == m(group[u][0]) for m2 in chosen)]
        if len({points[u] for u in owned[m]}) < k + 1:
            raise UnfitSamples("a monomial is supported by too few samples",
                               [(m, tuple(group[u][0]), sorted(group[u][1])) for u in support[m]])
    n = len(pattern)
    pool = []
    for a, b in combinations(chosen, 2):
        d = (a.mu - b.mu, tuple(x - y for x, y in zip(a.exps, b.exps)))
        for sign in (1, -1):
            for strict in (False, True):
                pool.append(Constraint(sign * d[0], tuple(sign * r for r in d[1]), strict))
    out = []
    for m in chosen:
        for hit in (support[m], owned[m]):
            region = [c for c in pool if all(c.holds(group[u][0]) for u in hit)]
            region += _region(group, idx, n, hit)
            if not any(all(c.holds(group[u][0]) for c in region)
                       for u in range(len(group)) if u not in support[m]):
                break
        out.append(Piece(pattern, _minimal(region), [m]))
    for lam, vals in group:
        got = {p.values[0](lam) for p in out if p.contains(lam)}
        if got != vals:
            raise UnfitSamples("samples are not separated by monomial comparisons", [(tuple(lam), sorted(vals))])
    return out


def _height(m: Monomial) -> int:
    return max(r.denominator for r in (m.mu, *m.exps)) + sum(abs(r.numerator) for r in m.exps)


def _minimal(region: list) -> list:
    # a strict constraint makes its non-strict twin redundant
    keep = set(region)
    for c in region:
        if c.strict and Constraint(c.mu, c.exps, False) in keep:
            keep.discard(Constraint(c.mu, c.exps, False))
    return [c for c in region if c in keep]


def _region(group, idx, n, members) -> list:
    """Bounding box in lambda exponents of the member samples."""
    out = []
    for i in idx:
        lo = min(group[u][0][i].exp for u in members)
        hi = max(group[u][0][i].exp for u in members)
        all_lo = min(g[0][i].exp for g in group)
        all_hi = max(g[0][i].exp for g in group)
        if lo > all_lo:
            r = [Fraction(0)] * n
            r[i] = Fraction(1)
            out.append(Constraint(-lo, tuple(r)))
        if hi < all_hi:
            r = [Fraction(0)] * n
            r[i] = Fraction(-1)
            out.append(Constraint(hi, tuple(r)))
    return out
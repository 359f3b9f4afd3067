"""Risometries on finite point sets and sampled translater families.

A map between finite sets is a risometry when it preserves rv of every
difference.  All verdicts here are about the sampled points only.
"""
from __future__ import annotations

import random
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterator, Optional, Sequence

from .errors import SampleClosureError, SizeCapExceeded
from .gamma import Gamma
from .puiseux import PSeries, nth_root, ps_rv, ps_val
from .vla import KVector, ResSubspace, dir_of

FIND_CAP = 8


@dataclass
class RisoReport:
    ok: bool
    witness: Optional[tuple] = None
    note: str = "on sample"

    def __bool__(self):
        return self.ok


def _vec(p) -> KVector:
    if isinstance(p, KVector):
        return p
    if isinstance(p, (PSeries, int, float, complex, str)):
        return KVector([p])
    return KVector(p)


def check_risometry(pairs: Sequence[tuple]) -> RisoReport:
    """Check rv(x - x') = rv(phi x - phi x') over all pairs of rows."""
    xs = [_vec(x) for x, _ in pairs]
    ys = [_vec(y) for _, y in pairs]
    for i in range(len(xs)):
        for j in range(i + 1, len(xs)):
            if ps_rv(xs[i] - xs[j]) != ps_rv(ys[i] - ys[j]):
                return RisoReport(False, (xs[i], xs[j]))
    return RisoReport(True)


class _RVTable:
    """rv of pairwise differences, computed on first use."""

    def __init__(self, pts: Sequence[KVector]):
        self.pts = pts
        self.memo: dict = {}

    def __call__(self, i: int, j: int):
        key = (i, j)
        if key not in self.memo:
            self.memo[key] = ps_rv(self.pts[i] - self.pts[j])
        return self.memo[key]


def all_risometries(
    X: Sequence,
    Y: Sequence,
    labels_x: Sequence[Hashable] | None = None,
    labels_y: Sequence[Hashable] | None = None,
    pair_ok: Callable[[int, int], bool] | None = None,
    cap: int = FIND_CAP,
) -> Iterator[dict[int, int]]:
    """Enumerate risometric bijections X -> Y as index maps.

    Backtracking over bijections; each partial assignment is checked
    against all previously assigned points, which is the same filter as
    check_risometry on the completed map.
    """
    if len(X) != len(Y):
        return
    if len(X) > cap:
        raise SizeCapExceeded(f"{len(X)} points exceeds the search cap {cap}")
    X = [_vec(x) for x in X]
    Y = [_vec(y) for y in Y]
    lx = list(labels_x) if labels_x is not None else [None] * len(X)
    ly = list(labels_y) if labels_y is not None else [None] * len(Y)
    rx, ry = _RVTable(X), _RVTable(Y)
    n = len(X)
    assign: list[int] = []
    used = [False] * n

    def rec(i):
        if i == n:
            yield dict(enumerate(assign))
            return
        for j in range(n):
            if used[j] or lx[i] != ly[j]:
                continue
            if pair_ok is not None and not pair_ok(i, j):
                continue
            if all(rx(i, k) == ry(j, assign[k]) for k in range(i)):
                used[j] = True
                assign.append(j)
                yield from rec(i + 1)
                assign.pop()
                used[j] = False

    yield from rec(0)


def find_risometry(X: Sequence, Y: Sequence, **kw) -> Optional[dict[int, int]]:
    for m in all_risometries(X, Y, **kw):
        return m
    return None


# -- translater samples --------------------------------------------------------

@dataclass
class TranslaterSample:
    bases: list            # points q of the projected space, as KVectors
    maps: dict             # (i, j) -> list of (z, alpha_{q_i, q_j}(z))
    target: ResSubspace
    proj: tuple


@dataclass
class TranslaterReport:
    conditions: dict = field(default_factory=dict)   # index -> (passed, witness)
    risometry: dict = field(default_factory=dict)    # (i, j) -> RisoReport

    @property
    def ok(self) -> bool:
        return all(p for p, _ in self.conditions.values()) and all(r.ok for r in self.risometry.values())


def _same_point(a: KVector, b: KVector) -> bool:
    d = a - b
    if d.is_zero_to_prec:
        return True
    return a.approx_eq(b)


def _lookup(pairs, z):
    for w, img in pairs:
        if _same_point(w, z):
            return img
    return None


def check_translater_samples(s: TranslaterSample, chi: Callable | None = None) -> TranslaterReport:
    rep = TranslaterReport()
    # (1) the labelling is preserved
    if chi is not None:
        bad = None
        for key, pairs in s.maps.items():
            for z, img in pairs:
                if chi(z) != chi(img):
                    bad = (key, z, img)
                    break
            if bad:
                break
        rep.conditions[1] = (bad is None, bad)
    # (2) cocycle condition
    bad = None
    tested = 0
    for (i, j), first in s.maps.items():
        for (j2, k), second in s.maps.items():
            if j2 != j or i == j or j == k:
                continue
            for z, w in first:
                w2 = _lookup(second, w)
                if w2 is None:
                    continue
                if (i, k) not in s.maps and i != k:
                    raise SampleClosureError(f"pair {(i, k)} is missing from the sample")
                direct = z if i == k else _lookup(s.maps[(i, k)], z)
                if direct is None:
                    raise SampleClosureError(f"point {z} missing from pair {(i, k)}")
                tested += 1
                if not _same_point(direct, w2) and bad is None:
                    bad = ((i, j, k), z)
    if tested == 0 and len(s.bases) > 2:
        raise SampleClosureError("no composable samples; the cocycle condition is untestable")
    rep.conditions[2] = (bad is None, bad)
    # (3) displacement directions lie in the target residue space
    bad = None
    for key, pairs in s.maps.items():
        for z, img in pairs:
            if _same_point(z, img):
                continue
            if not s.target.contains(dir_of(img - z)):
                bad = (key, z, img)
                break
        if bad:
            break
    rep.conditions[3] = (bad is None, bad)
    for key, pairs in s.maps.items():
        if len(pairs) >= 2:
            rep.risometry[key] = check_risometry(pairs)
    return rep


def translation_sample(bases: Sequence[KVector], points: Sequence[KVector], lift, target: ResSubspace) -> TranslaterSample:
    """alpha_{q,q'}(z) = z + lift(q' - q), sampled on translates of ``points``.

    ``points`` lie in the fiber over ``bases[0]``; ``lift`` maps a projected
    vector into K^n.
    """
    fibers = [[z + lift(q - bases[0]) for z in points] for q in bases]
    maps = {}
    for i, qi in enumerate(bases):
        for j, qj in enumerate(bases):
            maps[(i, j)] = [(z, z + lift(qj - qi)) for z in fibers[i]]
    return TranslaterSample(list(bases), maps, target, ())


# -- the square-root straightening example -------------------------------------

@dataclass
class SquareExample:
    """y = x^2 near (a, a^2), straightened by phi(x, y) = (x - a + sqrt(y), y)."""

    a: PSeries

    @classmethod
    def build(cls, a_exp=-2, coeff: float = 1.0) -> "SquareExample":
        return cls(PSeries.monomial(coeff, a_exp))

    @property
    def radius(self) -> Gamma:
        return ps_val(self.a)

    @property
    def center(self) -> KVector:
        return KVector([self.a, self.a * self.a])

    def sqrt(self, y: PSeries) -> PSeries:
        """Square root of y on the branch closest to a."""
        r0 = nth_root(y, 2, 0)
        r1 = nth_root(y, 2, 1)
        if ps_rv(r0) == ps_rv(self.a):
            return r0
        if ps_rv(r1) == ps_rv(self.a):
            return r1
        return r0 if ps_val(r0 - self.a) <= ps_val(r1 - self.a) else r1

    def phi(self, p: KVector) -> KVector:
        x, y = p.coords
        return KVector([x - self.a + self.sqrt(y), y])

    def phi_inv(self, p: KVector) -> KVector:
        x, y = p.coords
        return KVector([x + self.a - self.sqrt(y), y])

    def alpha(self, z: KVector, q_new: PSeries) -> KVector:
        """Move z to the fiber y = q_new along the straightened arcs."""
        x, y = z.coords
        return KVector([x - self.sqrt(y) + self.sqrt(q_new), q_new])

    def on_curve(self, y: PSeries) -> KVector:
        return KVector([self.sqrt(y), y])

    def random_offset(self, rng: random.Random) -> PSeries:
        e = self.radius.exp + rng.randint(1, 8) * Fraction(1, 2)
        r = rng.choice([-1, 1]) * rng.uniform(0.3, 3.0)
        return PSeries.monomial(r, e)

    def random_point(self, rng: random.Random) -> KVector:
        c = self.center
        return KVector([c[0] + self.random_offset(rng), c[1] + self.random_offset(rng)])

    def in_ball(self, p: KVector) -> bool:
        return ps_val(p - self.center) < self.radius

    def translater_sample(self, rng: random.Random, n_fibers: int = 4, n_points: int = 3) -> TranslaterSample:
        c = self.center
        qs = [c[1]] + [c[1] + self.random_offset(rng) for _ in range(n_fibers - 1)]
        base_pts = []
        for _ in range(n_points):
            z = KVector([c[0] + self.random_offset(rng), qs[0]])
            base_pts.append(z)
        base_pts.append(self.on_curve(qs[0]))
        fibers = [[self.alpha(z, q) for z in base_pts] for q in qs]
        maps = {}
        for i, qi in enumerate(qs):
            for j, qj in enumerate(qs):
                maps[(i, j)] = [(z, self.alpha(z, qj)) for z in fibers[i]]
        return TranslaterSample([KVector([q]) for q in qs], maps, ResSubspace(2, [[0, 1]]), (1,))

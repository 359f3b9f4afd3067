"""Val-chains, nested subspace grids and Taylor-order checks on arc families."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    PrecisionExhausted,
    RejectedInput,
    SingularPoint,
    UnsupportedFamily,
)
from .gamma import Gamma
from .puiseux import PSeries, ps_val
from .strat import (
    StratSpec,
    dist_to_stratum,
    poly_eval_point,
    poly_partial,
    stratum_membership,
)
from .vla import (
    KMatrix,
    KVector,
    ResSubspace,
    Subspace,
    delta_upper,
    dist_vector_to_subspace,
    is_exhibition,
    res_subspace,
)

# -- tangent spaces -----------------------------------------------------------------


def _kernel(rows: list[list[PSeries]], n: int) -> list[KVector]:
    """Basis of the kernel of a matrix over K, by elimination with valuation pivots."""
    rows = [list(r) for r in rows]
    pivots: list[int] = []
    r = 0
    for col in range(n):
        best = None
        for i in range(r, len(rows)):
            c = rows[i][col]
            if c.is_zero_to_prec:
                continue
            if best is None or ps_val(c) > ps_val(rows[best][col]):
                best = i
        if best is None:
            continue
        rows[r], rows[best] = rows[best], rows[r]
        inv = rows[r][col].inverse()
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and not rows[i][col].is_exact_zero:
                f = rows[i][col]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
        if r == len(rows):
            break
    free = [k for k in range(n) if k not in pivots]
    out = []
    for k in free:
        v = [PSeries.zero() for _ in range(n)]
        v[k] = PSeries.const(1)
        for i, p in enumerate(pivots):
            v[p] = -rows[i][k]
        out.append(KVector(v))
    return out


def tangent_space(S: StratSpec, d: int, x: KVector) -> Subspace:
    if d >= S.n:
        return Subspace.full(S.n)
    if d == 0:
        return Subspace.zero(S.n)
    polys = S.strata.get(d, [])
    if not polys:
        raise SingularPoint(f"stratum {d} has no defining equations")
    jac = []
    for poly in polys:
        row = []
        for k in range(S.n):
            row.append(poly_eval_point(poly_partial(poly, k), x.coords)[0])
        jac.append(row)
    basis = _kernel(jac, S.n)
    if len(basis) != d:
        raise SingularPoint(f"Jacobian has corank {len(basis)}, expected {d}")
    return Subspace(S.n, basis)


# -- val-chains ------------------------------------------------------------------


@dataclass
class ValChain:
    points: list
    dims: list
    lambdas: list = field(default_factory=list)   # lambda_1 .. lambda_{m+1}

    @property
    def m(self) -> int:
        return len(self.points) - 1

    def to_json(self) -> dict:
        out = {"points": [p.to_json() for p in self.points], "dims": list(self.dims)}
        if self.lambdas:
            out["lambdas"] = [g.to_json() for g in self.lambdas]
        return out

    @classmethod
    def from_json(cls, obj) -> "ValChain":
        lam = [Gamma.from_json(g) for g in obj.get("lambdas", [])]
        return cls([KVector.from_json(p) for p in obj["points"]], [int(d) for d in obj["dims"]], lam)


@dataclass
class ChainVerdict:
    ok: bool
    condition: Optional[int] = None
    witness: object = None
    lambdas: list = field(default_factory=list)
    sampled: bool = False

    def __bool__(self):
        return self.ok


def _lower_dist(S: StratSpec, d: int, a0: KVector, rng) -> tuple[Gamma, bool]:
    """v(a0 - S_{<d}), Inf for an empty skeleton."""
    r = dist_to_stratum(S, d - 1, a0, rng)
    return r.value, r.exact


def validate_val_chain(S: StratSpec, chain: ValChain, rng: random.Random | None = None) -> ChainVerdict:
    rng = rng or random.Random(0)
    pts, dims = chain.points, chain.dims
    m = len(pts) - 1
    if len(dims) != len(pts):
        raise DimensionMismatch("one dimension per point is required")
    sampled = False
    # (1) dimension pattern
    if not (S.n >= dims[0] and all(dims[i] > dims[i + 1] for i in range(1, m))
            and (m == 0 or dims[0] >= dims[1])):
        return ChainVerdict(False, 1, tuple(dims))
    # (2) stratum membership
    for a, d in zip(pts, dims):
        mem = stratum_membership(S, d, a)
        if mem.member is None:
            sampled = True
        elif not mem.member:
            return ChainVerdict(False, 2, a)
    a0 = pts[0]
    lam = []
    for i in range(1, m + 1):
        li = ps_val(a0 - pts[i])
        lam.append(li)
        # (3) a_i is closer to a_0 than the lower strata are
        low, exact = _lower_dist(S, dims[i], a0, rng)
        sampled |= not exact
        if not low.is_inf and not li < low:
            return ChainVerdict(False, 3, (i, li, low), sampled=sampled)
        # (4) a_i realizes the distance to the skeleton below d_{i-1}
        if dims[i - 1] > dims[i]:
            low_prev, exact = _lower_dist(S, dims[i - 1], a0, rng)
            sampled |= not exact
            if li != low_prev:
                return ChainVerdict(False, 4, (i, li, low_prev), sampled=sampled)
    last, exact = _lower_dist(S, dims[m], a0, rng)
    sampled |= not exact
    lam.append(last)
    if any(not lam[i] < lam[i + 1] for i in range(len(lam) - 1)):
        return ChainVerdict(False, 3, tuple(lam), lam, sampled)
    chain.lambdas = lam
    return ChainVerdict(True, None, None, lam, sampled)


def enumerate_val_chains(S: StratSpec, a0: KVector, max_m: int, pool: Sequence[KVector],
                         rng: random.Random | None = None) -> list[ValChain]:
    """Every chain starting at a0 with further points from the pool that validates."""
    rng = rng or random.Random(0)
    d0 = S.stratum_of(a0)
    labelled = []
    for p in pool:
        if (p - a0).is_zero_to_prec:
            continue
        labelled.append((S.stratum_of(p), p))
    seen = set()
    out = [ValChain([a0], [d0], [])]
    v = validate_val_chain(S, out[0], rng)
    out[0].lambdas = v.lambdas
    seen.add(((d0,), tuple(v.lambdas)))

    def extend(chain_pts, chain_dims):
        m = len(chain_pts) - 1
        if m >= 1:
            c = ValChain(list(chain_pts), list(chain_dims))
            verdict = validate_val_chain(S, c, rng)
            if verdict.ok:
                key = (tuple(chain_dims), tuple(verdict.lambdas))
                if key not in seen:
                    seen.add(key)
                    out.append(c)
            elif verdict.condition in (3,):
                return
        if m >= max_m:
            return
        for d, p in labelled:
            last = chain_dims[-1]
            if (m == 0 and d <= last) or (m >= 1 and d < last):
                if any((p - q).is_zero_to_prec for q in chain_pts):
                    continue
                extend(chain_pts + [p], chain_dims + [d])

    extend([a0], [d0])
    return out


# -- subspace grids ------------------------------------------------------------------


@dataclass
class SubspaceGrid:
    """Triangular array entries[(i, j)], 0 <= i <= j <= m."""

    entries: dict
    lambdas: list          # lambda_1 .. lambda_{m+1}

    @property
    def m(self) -> int:
        return len(self.lambdas) - 1

    @property
    def n(self) -> int:
        return self.entries[(0, 0)].n

    @property
    def dims(self) -> list[int]:
        return [self.entries[(j, j)].dim for j in range(self.m + 1)]

    def bound(self, i: int, j: int) -> Gamma:
        """lambda_{i+1} / lambda_{j+1}, with x / Inf = Zero."""
        return self.lambdas[i] / self.lambdas[j]

    def to_json(self) -> dict:
        return {
            "entries": [[self.entries[(i, j)].to_json() for j in range(i, self.m + 1)]
                        for i in range(self.m + 1)],
            "lambdas": [g.to_json() for g in self.lambdas],
        }

    @classmethod
    def from_json(cls, obj) -> "SubspaceGrid":
        lam = [Gamma.from_json(g) for g in obj["lambdas"]]
        rows = obj["entries"]
        m = len(lam) - 1
        if len(rows) != m + 1:
            raise RejectedInput(f"expected {m + 1} rows of entries for {m + 1} distances")
        n = None
        for row in rows:
            for e in row:
                if e.get("n"):
                    n = int(e["n"])
                elif e.get("basis"):
                    n = len(e["basis"][0])
        entries = {}
        for i, row in enumerate(rows):
            if len(row) != m + 1 - i:
                raise RejectedInput(f"row {i} must have {m + 1 - i} entries")
            for k, e in enumerate(row):
                entries[(i, i + k)] = Subspace.from_json(e, n)
        return cls(entries, lam)


def _bound_ok(U: Subspace, W: Subspace, bound: Gamma) -> bool:
    """Delta(U, W) <= bound, reading a residual past the floor as zero."""
    d, exact = delta_upper(U, W)
    if bound.is_zero:
        return d.is_zero or not exact
    return d <= bound


def _contains(W: Subspace, U: Subspace) -> bool:
    for b in U.basis:
        try:
            if not dist_vector_to_subspace(b, W).is_zero:
                return False
        except PrecisionExhausted as err:
            if getattr(err, "floor", None) is None:
                raise
    return True


def grid_violations(W: SubspaceGrid, require_nesting: bool = False) -> list[tuple]:
    """Failed hypotheses as (name, i, j); empty when the grid is admissible."""
    out = []
    m = W.m
    dims = W.dims
    for i in range(len(W.lambdas) - 1):
        if not W.lambdas[i] < W.lambdas[i + 1]:
            out.append(("increasing distances", i + 1, i + 2))
    if any(dims[j] < dims[j + 1] for j in range(m)):
        out.append(("decreasing dimensions", 0, m))
    for i in range(m + 1):
        for j in range(i, m + 1):
            Wij = W.entries[(i, j)]
            if Wij.dim != dims[j]:
                out.append(("dimension", i, j))
                continue
            if j > i and not _contains(W.entries[(i, i)], Wij):
                out.append(("containment", i, j))
            if require_nesting and j > i and not _contains(W.entries[(i, j - 1)], Wij):
                out.append(("nesting", i, j))
            if j > i:
                if not _bound_ok(W.entries[(i + 1, j)], Wij, W.bound(i, j)):
                    out.append(("distance bound", i, j))
    return out


def _graph_basis(V: Subspace, coords: Sequence[int]) -> list[KVector]:
    """Basis of V whose rows at ``coords`` form the identity matrix."""
    if not V.reduced:
        return []
    B = KMatrix.from_columns(V.reduced)
    A = KMatrix([B.rows[k] for k in coords])
    N = B @ A.inverse()
    return [N.column(k) for k in range(len(coords))]


def _compatible_basis(flags: list[ResSubspace], n: int) -> np.ndarray:
    """Columns b_1..b_n with b_1..b_{d_j} spanning flags[j] for every j."""
    cols: list[np.ndarray] = []
    cur = ResSubspace.zero(n)
    for R in reversed(flags + [ResSubspace.full(n)]):
        for v in list(R.rows) + [np.eye(n, dtype=complex)[k] for k in range(n)]:
            if R.contains_vector(v) and not cur.contains_vector(v):
                cols.append(np.asarray(v, dtype=complex))
                cur = cur + ResSubspace(n, [v])
            if cur.dim == R.dim:
                break
    return np.array(cols, dtype=complex).T


@dataclass
class NestedResult:
    grid: SubspaceGrid
    normalized: dict     # (i, j) -> basis w_{i,j,1..d_j} in adapted coordinates
    M: KMatrix
    M_inv: KMatrix


def nested_subspaces(W: SubspaceGrid, details: bool = False):
    """Nested replacement V of an admissible grid W with V_{i,i} = W_{i,i}."""
    bad = grid_violations(W)
    if bad:
        name, i, j = bad[0]
        raise RejectedInput(f"input grid fails the {name} hypothesis at ({i}, {j})")
    m, n, dims = W.m, W.n, W.dims
    # (a) common residue spaces and their flag
    flags = []
    for j in range(m + 1):
        Rj = res_subspace(W.entries[(0, j)])
        for i in range(1, j + 1):
            if res_subspace(W.entries[(i, j)]) != Rj:
                raise RejectedInput(f"residues of column {j} differ between rows 0 and {i}")
        flags.append(Rj)
    for j in range(m):
        if not flags[j].contains(flags[j + 1]):
            raise RejectedInput(f"residue flag breaks between columns {j} and {j + 1}")
    # (b) constant change of basis sending the flag to standard coordinates
    Bres = _compatible_basis(flags, n)
    M = KMatrix.constant(np.linalg.inv(Bres))
    M_inv = KMatrix.constant(Bres)
    Wp = {key: S.transform(M) for key, S in W.entries.items()}
    # (c) normalized bases w_{i,j,k} in e_k + (0^{d_j} x M^{n-d_j})
    w = {key: _graph_basis(S, range(S.dim)) for key, S in Wp.items()}
    # (d) blocks of new basis vectors, innermost column first
    ext = list(dims) + [0]
    V = {}
    for i in range(m + 1):
        for j in range(i, m + 1):
            vecs = []
            for ell in range(j, m + 1):
                vecs += w[(i, ell)][ext[ell + 1]:ext[ell]]
            # (e) back to the original coordinates
            V[(i, j)] = Subspace(n, [M_inv.apply(v) for v in vecs])
    out = SubspaceGrid(V, list(W.lambdas))
    if details:
        return NestedResult(out, w, M, M_inv)
    return out


@dataclass
class LipschitzReport:
    ok: bool
    failures: list = field(default_factory=list)   # (condition, i, j)

    def __bool__(self):
        return self.ok


def check_nested_output(W: SubspaceGrid, V: SubspaceGrid) -> LipschitzReport:
    """Conclusion of the nesting construction: (i)-(iii), nesting and V_{i,i} = W_{i,i}."""
    fails = [(name, i, j) for name, i, j in grid_violations(V, require_nesting=True)]
    for i in range(W.m + 1):
        if not _bound_ok(V.entries[(i, i)], W.entries[(i, i)], Gamma.zero()):
            fails.append(("diagonal", i, i))
    return LipschitzReport(not fails, fails)


def check_lipschitz_chain(S: StratSpec, chain: ValChain, V: SubspaceGrid) -> LipschitzReport:
    """Conditions (1)-(4) for spaces V attached to a validated chain."""
    fails = []
    m = chain.m
    if V.m != m:
        raise DimensionMismatch("grid and chain lengths differ")
    lam = chain.lambdas or validate_val_chain(S, chain).lambdas
    for i in range(m + 1):
        T = tangent_space(S, chain.dims[i], chain.points[i])
        Vii = V.entries[(i, i)]
        if Vii.dim != T.dim or not _bound_ok(Vii, T, Gamma.zero()):
            fails.append((1, i, i))
    for i in range(m + 1):
        for j in range(i, m + 1):
            Vij = V.entries[(i, j)]
            if Vij.dim != chain.dims[j]:
                fails.append((3, i, j))
                continue
            if j > i and not _contains(V.entries[(i, j - 1)], Vij):
                fails.append((2, i, j))
            if j > i:
                bound = lam[i] / lam[j]
                if not _bound_ok(Vij, V.entries[(i + 1, j)], bound):
                    fails.append((4, i, j))
    return LipschitzReport(not fails, fails)


# -- W-grids from stratification data ----------------------------------------------


def _extend_exhibition(R: ResSubspace, base: Sequence[int]) -> list[int]:
    coords = list(base)
    for k in range(R.n):
        if len(coords) == R.dim:
            break
        if k in coords:
            continue
        trial = sorted(coords + [k])
        # a partial exhibition must stay injective on the residue space
        sub = np.array([row[trial] for row in R.rows]) if R.rows is not None and len(R.rows) else np.zeros((0, len(trial)))
        if np.linalg.matrix_rank(sub, tol=1e-6) == len(trial):
            coords = trial
    if len(coords) != R.dim or not is_exhibition(coords, R):
        raise RejectedInput("no exhibition extends the given coordinates")
    return sorted(coords)


def chain_w_grid(S: StratSpec, chain: ValChain) -> SubspaceGrid:
    """W_{i,i} tangent spaces; W_{i,j} the graph-projection of W_{j,j} into W_{i,i}."""
    m = chain.m
    n = S.n
    lam = chain.lambdas or validate_val_chain(S, chain).lambdas
    T = [tangent_space(S, chain.dims[i], chain.points[i]) for i in range(m + 1)]
    entries = {}
    for j in range(m + 1):
        entries[(j, j)] = T[j]
        if T[j].dim == 0:
            for i in range(j):
                entries[(i, j)] = Subspace.zero(n)
            continue
        Rj = res_subspace(T[j])
        Pj = list(Rj.exhibition())
        Uj = _graph_basis(T[j], Pj)
        for i in range(j):
            Pi = _extend_exhibition(res_subspace(T[i]), Pj)
            Gi = _graph_basis(T[i], Pi)
            vecs = []
            for u in Uj:
                acc = KVector.zero(n)
                for k, g in zip(Pi, Gi):
                    if not u[k].is_exact_zero:
                        acc = acc + g.scale(u[k])
                vecs.append(acc)
            entries[(i, j)] = Subspace(n, vecs)
    return SubspaceGrid(entries, list(lam))


def sample_cusp_chains(S: StratSpec, rng: random.Random, count: int = 20, max_m: int = 2) -> list[ValChain]:
    """Validated chains with m >= 1 built around random curve points."""
    if S.family != "cusp":
        raise UnsupportedFamily("chain sampling is built in for cusps only")
    chains: list[ValChain] = []
    seen = set()
    tries = 0
    while len(chains) < count and tries < 50 * count:
        tries += 1
        e = Fraction(rng.choice([-2, -1, 1, 2, 3]), rng.choice([1, 2, 3]))
        s = PSeries.monomial(_unit(rng), e)
        p = S.curve_point(s)
        q = S.curve_point(s + PSeries.monomial(_unit(rng), e + Fraction(rng.randint(1, 4), 2)))
        off = ps_val(p).exp + Fraction(rng.randint(2, 8), 2)
        # offset across the tangent so p stays the nearest curve point
        tan = res_subspace(tangent_space(S, 1, p)).rows[0]
        k = int(np.argmin(np.abs(tan)))
        y = list(p.coords)
        y[k] = y[k] + PSeries.monomial(_unit(rng), off)
        a_off = KVector(y)
        a0 = rng.choice([a_off, p, q])
        pool = [S.points[0], p, q, a_off]
        for c in enumerate_val_chains(S, a0, max_m, pool, rng):
            if c.m < 1:
                continue
            key = (tuple(c.dims), tuple(c.lambdas), repr(c.points[0]))
            if key in seen:
                continue
            seen.add(key)
            chains.append(c)
            if len(chains) >= count:
                break
    return chains


def _unit(rng: random.Random) -> complex:
    r = rng.uniform(0.5, 2.0)
    th = rng.uniform(0, 2 * math.pi)
    return complex(round(r * math.cos(th), 6), round(r * math.sin(th), 6))


# -- random admissible grids ---------------------------------------------------------------


def _small(rng: random.Random, bound: Gamma, n_terms: int = 2) -> PSeries:
    """Random series of value at most ``bound``."""
    if bound.is_zero:
        return PSeries.zero()
    e = bound.exp
    terms = []
    for _ in range(rng.randint(1, n_terms)):
        terms.append((e + Fraction(rng.randint(0, 4), 2), _unit(rng)))
    return PSeries.from_terms(terms)


def random_admissible_grid(rng: random.Random, n: int | None = None, m: int | None = None,
                           inf_last: bool | None = None) -> SubspaceGrid:
    """Seeded grid satisfying dimension, containment and distance hypotheses."""
    n = n if n is not None else rng.randint(1, 5)
    m = m if m is not None else rng.randint(0, min(4, n))
    dims = sorted((rng.randint(0, n) for _ in range(m + 1)), reverse=True)
    # lambda_1 < ... < lambda_{m+1}: decreasing exponents
    exps = [Fraction(rng.randint(4, 8))]
    for _ in range(m):
        exps.append(exps[-1] - Fraction(rng.choice([1, 2, 3]), 2))
    lam = [Gamma.of(e) for e in exps]
    if inf_last if inf_last is not None else rng.random() < 0.25:
        lam[-1] = Gamma.inf()
    d0 = dims[0]

    def ratio(i, j):
        return lam[i] / lam[j]

    def tight(k: int, i: int) -> Gamma:
        # tightest bound on frame vector k between rows i and i+1
        js = [j for j in range(i + 1, m + 1) if k < dims[j]]
        if not js:
            return Gamma.of(Fraction(1, 2))
        return ratio(i, max(js))

    # frames f_{i,k} = e_k + tail in coordinates >= d0, built telescopically
    frames = []
    base = [KVector.basis_vector(n, k) for k in range(d0)]
    frames.append(base)
    for i in range(m):
        prev = frames[-1]
        nxt = []
        for k in range(d0):
            tail = [PSeries.zero()] * n
            b = tight(k, i)
            for c in range(d0, n):
                tail[c] = _small(rng, b)
            nxt.append(prev[k] + KVector(tail))
        frames.append(nxt)
    # rho_{p,j}[k][l] for k < d_j <= l < d_{p+1}
    rho = {}
    for j in range(m + 1):
        for p in range(j):
            rho[(p, j)] = {(k, l): _small(rng, ratio(p, j))
                           for k in range(dims[j]) for l in range(dims[j], dims[p + 1])}
    entries = {}
    for i in range(m + 1):
        for j in range(i, m + 1):
            vecs = []
            for k in range(dims[j]):
                v = frames[i][k]
                for l in range(dims[j], dims[i]):
                    c = PSeries.zero()
                    for p in range(i, j):
                        c = c + rho[(p, j)].get((k, l), PSeries.zero())
                    if not c.is_exact_zero:
                        v = v + frames[i][l].scale(c)
                vecs.append(v)
            entries[(i, j)] = vecs
    # random constant change of basis in GL_n(O)
    while True:
        P = np.array([[complex(round(rng.uniform(-1, 1), 3), round(rng.uniform(-1, 1), 3))
                       for _ in range(n)] for _ in range(n)])
        if abs(np.linalg.det(P)) > 0.2 and np.linalg.cond(P) < 50:
            break
    Pm = KMatrix.constant(P)
    grid = {key: Subspace(n, [Pm.apply(v) for v in vecs]) for key, vecs in entries.items()}
    return SubspaceGrid(grid, lam)


def identity_grid(n: int, dims: Sequence[int], lambdas: Sequence[Gamma]) -> SubspaceGrid:
    m = len(dims) - 1
    entries = {(i, j): Subspace.coordinate(n, range(dims[j])) for i in range(m + 1) for j in range(i, m + 1)}
    return SubspaceGrid(entries, list(lambdas))


# -- Taylor-order checks ---------------------------------------------------------------------


@dataclass
class ArcFamily:
    """One-dimensional arcs u -> arc(b, u) over a ball of the exhibition line.

    ``deriv(b, u, k)`` is the k-th derivative in u.  ``radius`` and ``open``
    describe the ball B; a radius of Inf means B = K^n.
    """

    name: str
    labels: list
    arc: Callable
    deriv: Callable
    sample_u: Callable          # rng -> PSeries inside the projected ball
    radius: Gamma
    open: bool = True
    structured_u: list = field(default_factory=list)


@dataclass
class TaylorReport:
    r: int
    passed: int
    total: int
    violation: Optional[tuple] = None
    forms_agree: Optional[bool] = None

    @property
    def ok(self) -> bool:
        return self.violation is None


def _sval(x: PSeries) -> Gamma:
    if x.is_exact_zero:
        return Gamma.zero()
    if x.is_zero_to_prec:
        return Gamma.zero()
    return ps_val(x)


def _holds(lhs: Gamma, rhs: Gamma, open_ball: bool) -> bool:
    """lhs <* rhs: weak for open balls, strict for closed ones."""
    if rhs.is_zero:
        return lhs.is_zero
    return lhs <= rhs if open_ball else lhs < rhs


def _rhs(num: Gamma, fam: ArcFamily) -> Gamma:
    return num / fam.radius


def _taylor_residual(fam: ArcFamily, b, u0: PSeries, u1: PSeries, r: int) -> PSeries:
    h = u1 - u0
    acc = fam.arc(b, u0)
    hk = PSeries.const(1)
    for k in range(1, r):
        hk = hk * h
        acc = acc + fam.deriv(b, u0, k) * hk * (1.0 / math.factorial(k))
    return fam.arc(b, u1) - acc


def _u_pool(fam: ArcFamily, rng: random.Random, n: int) -> list[PSeries]:
    pool = list(fam.structured_u)
    while len(pool) < n:
        pool.append(fam.sample_u(rng))
    return pool


def taylor_order_check(fam: ArcFamily, r: int, n_tuples: int = 64, rng: random.Random | None = None) -> TaylorReport:
    """Order-r Taylor condition for each arc, on all pairs of a seeded sample."""
    if r < 2:
        raise ValueError("order must be at least 2")
    rng = rng or random.Random(0)
    pool = _u_pool(fam, rng, max(8, int(math.isqrt(n_tuples)) + 2))
    total = passed = 0
    violation = None
    for b in fam.labels:
        for u0 in pool:
            for u1 in pool:
                h = u1 - u0
                if h.is_zero_to_prec:
                    continue
                total += 1
                lhs = _sval(_taylor_residual(fam, b, u0, u1, r))
                rhs = _rhs(_sval(h) ** r, fam)
                if _holds(lhs, rhs, fam.open):
                    passed += 1
                elif violation is None:
                    violation = (b, u0, u1, lhs, rhs)
    agree = None
    if r == 2:
        agree = _forms_agree(fam, pool, rng)
    return TaylorReport(r, passed, total, violation, agree)


def _form_ok(fam: ArcFamily, b0, b, u0, u1, u2) -> bool:
    h = u1 - u2
    lhs = _sval(fam.arc(b, u1) - fam.arc(b, u2) - fam.deriv(b0, u0, 1) * h)
    alpha = max(_sval(u0 - u1), _sval(u0 - u2), _sval(PSeries.coerce(b0) - PSeries.coerce(b)))
    return _holds(lhs, _rhs(_sval(h) * alpha, fam), fam.open)


def _forms_agree(fam: ArcFamily, pool, rng) -> bool:
    """Both quadratic forms give the same overall verdict on the sample."""
    full = three = True
    for b0 in fam.labels:
        for b in fam.labels:
            for u1, u2 in combinations(pool, 2):
                # form (ii): u0 = u2
                if not _form_ok(fam, b0, b, u2, u1, u2):
                    three = False
                for u0 in rng.sample(pool, min(3, len(pool))):
                    if not _form_ok(fam, b0, b, u0, u1, u2):
                        full = False
    return full == three


def _real_monomial(rng: random.Random, e) -> PSeries:
    return PSeries.monomial(round(rng.choice([-1, 1]) * rng.uniform(0.3, 3.0), 6), e)


def hierarchy_linear_family(a0_exp=2, lam0_exp=1, coeff: float = 1.0) -> ArcFamily:
    """Graph of x -> a0 x on B(0, < lam0), 0 elsewhere, over the open unit ball."""
    a0 = PSeries.monomial(coeff, a0_exp)
    lam0 = Gamma.of(lam0_exp)

    def inside(u: PSeries) -> bool:
        return _sval(u) < lam0

    def arc(b, u):
        base = a0 * u if inside(u) else PSeries.zero()
        return base + PSeries.coerce(b)

    def deriv(b, u, k):
        if k == 1 and inside(u):
            return a0
        return PSeries.zero()

    exps = [Fraction(1, 2), Fraction(2, 3), Fraction(lam0_exp), Fraction(3, 2), Fraction(2), Fraction(3)]
    rng = random.Random(7)
    structured = [_real_monomial(rng, e) for e in exps]
    return ArcFamily(
        "hier1", [PSeries.zero()], arc, deriv,
        lambda g: _real_monomial(g, Fraction(g.randint(1, 12), 4)),
        Gamma.of(0), True, structured,
    )


def _f_deriv(y: PSeries, k: int) -> PSeries:
    """k-th derivative of 1/(1+y^2) via partial fractions."""
    if k == 0:
        return (PSeries.const(1) + y * y).inverse()
    a = (y - 1j).power(-(k + 1))
    b = (y + 1j).power(-(k + 1))
    return (a - b) * ((-1) ** k * math.factorial(k) / 2j)


def hierarchy_rational_family(alpha=3) -> ArcFamily:
    """Graph of g(x) = t^alpha f(x / t) with f(y) = 1/(1+y^2), over the open unit ball."""
    alpha = Fraction(alpha)
    t_inv = PSeries.monomial(1, -1)

    def arc(b, u):
        return _f_deriv(u * t_inv, 0).shift(alpha) + PSeries.coerce(b)

    def deriv(b, u, k):
        return _f_deriv(u * t_inv, k).shift(alpha - k)

    exps = [Fraction(1, 2), Fraction(1), Fraction(1), Fraction(3, 2), Fraction(2), Fraction(3)]
    rng = random.Random(11)
    structured = [_real_monomial(rng, e) for e in exps]
    return ArcFamily(
        "hier2", [PSeries.zero()], arc, deriv,
        lambda g: _real_monomial(g, Fraction(g.randint(2, 12), 4)) + _real_monomial(g, Fraction(g.randint(5, 16), 4)),
        Gamma.of(0), True, structured,
    )


def square_family(a_exp=-2) -> ArcFamily:
    """Arcs x = b + sqrt(y) straightening y = x^2 near (a, a^2), graphs over y."""
    from .riso import SquareExample

    ex = SquareExample.build(a_exp)
    q0 = ex.a * ex.a

    def arc(b, u):
        return ex.sqrt(u) + PSeries.coerce(b)

    def deriv(b, u, k):
        coeff = 1.0
        for i in range(k):
            coeff *= 0.5 - i
        return ex.sqrt(u) * u.power(-k) * coeff

    rad = ex.radius
    rng = random.Random(5)
    structured = [q0 + ex.random_offset(rng) for _ in range(4)]
    labels = [PSeries.zero(), PSeries.monomial(0.7, rad.exp + 1)]
    return ArcFamily("square", labels, arc, deriv, lambda g: q0 + ex.random_offset(g), rad, True, structured)


def identity_family() -> ArcFamily:
    def arc(b, u):
        return PSeries.coerce(b)

    def deriv(b, u, k):
        return PSeries.zero()

    rng = random.Random(3)
    structured = [_real_monomial(rng, Fraction(k, 2)) for k in range(1, 6)]
    return ArcFamily("identity", [PSeries.zero(), PSeries.monomial(1, 2)], arc, deriv,
                     lambda g: _real_monomial(g, Fraction(g.randint(1, 8), 2)), Gamma.of(0), True, structured)


def polynomial_family(obj: dict) -> ArcFamily:
    """Arcs u -> sum_k c_{b,k} u^k read from JSON, with exact derivatives.

    Format: {"arcs": [{"label": series, "coeffs": [series, ...]}, ...],
    "radius": GammaValue, "open": bool, "u": [series, ...]}.
    """
    arcs = obj.get("arcs")
    if not arcs:
        raise RejectedInput("family file needs a non-empty 'arcs' list")
    table = {}
    labels = []
    for a in arcs:
        b = PSeries.from_json(a.get("label", 0))
        labels.append(b)
        table[b] = [PSeries.from_json(c) for c in a["coeffs"]]
    rad = Gamma.from_json(obj.get("radius", {"kind": "finite", "num": 0, "den": 1}))
    us = [PSeries.from_json(u) for u in obj.get("u", [])]

    def deriv(b, u, k):
        acc = PSeries.zero()
        for p, c in enumerate(table[b]):
            if p >= k and not c.is_exact_zero:
                acc = acc + c * (u ** (p - k)) * float(math.perm(p, k))
        return acc

    def arc(b, u):
        return deriv(b, u, 0)

    lo = rad.exp if rad.is_finite else Fraction(0)
    return ArcFamily(
        "file", labels, arc, deriv,
        lambda g: _real_monomial(g, lo + Fraction(g.randint(1, 8), 2)),
        rad, bool(obj.get("open", True)), us,
    )


def family_by_name(name: str, **kw) -> ArcFamily:
    if name == "hier1":
        return hierarchy_linear_family(**kw)
    if name == "hier2":
        return hierarchy_rational_family(**kw)
    if name == "square":
        return square_family(**kw)
    if name == "identity":
        return identity_family()
    raise UnsupportedFamily(f"no derivative oracle for family {name!r}")

"""Linear algebra over K^n with the max-valuation norm.

Subspaces carry a valuation-reduced basis: every vector has value <0> and
the residues are linearly independent.  Distances are computed by greedy
elimination of leading slices against that basis.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, PrecisionExhausted, SingularMatrix
from .gamma import Gamma
from .puiseux import EPS_COEFF, PSeries, RVClass, default_relprec, ps_rv, ps_val

PIVOT_TOL = 1e-6
MAX_ROUNDS = 200


class KVector:
    __slots__ = ("coords",)

    def __init__(self, coords: Iterable):
        self.coords = tuple(PSeries.coerce(c) for c in coords)

    @classmethod
    def zero(cls, n: int) -> "KVector":
        return cls([PSeries.zero()] * n)

    @classmethod
    def basis_vector(cls, n: int, k: int, c=1) -> "KVector":
        return cls([PSeries.const(c) if i == k else PSeries.zero() for i in range(n)])

    @classmethod
    def constant(cls, values: Sequence[complex]) -> "KVector":
        return cls([PSeries.const(v) for v in values])

    def __len__(self):
        return len(self.coords)

    def __getitem__(self, i):
        return self.coords[i]

    def __iter__(self):
        return iter(self.coords)

    def __add__(self, other: "KVector") -> "KVector":
        return KVector([a + b for a, b in zip(self.coords, other.coords)])

    def __sub__(self, other: "KVector") -> "KVector":
        return KVector([a - b for a, b in zip(self.coords, other.coords)])

    def __neg__(self) -> "KVector":
        return KVector([-a for a in self.coords])

    def scale(self, c) -> "KVector":
        if isinstance(c, PSeries):
            return KVector([a * c for a in self.coords])
        return KVector([a.scale(c) for a in self.coords])

    def shift(self, e) -> "KVector":
        return KVector([a.shift(e) for a in self.coords])

    __mul__ = scale
    __rmul__ = scale

    @property
    def is_exact_zero(self) -> bool:
        return all(c.is_exact_zero for c in self.coords)

    @property
    def is_zero_to_prec(self) -> bool:
        return all(c.is_zero_to_prec for c in self.coords)

    def val(self) -> Gamma:
        return ps_val(self)

    def rv(self) -> RVClass:
        return ps_rv(self)

    def residue(self) -> np.ndarray:
        return np.array([c.res() for c in self.coords], dtype=complex)

    def approx_eq(self, other: "KVector", tol: float = 1e-7) -> bool:
        return all(a.approx_eq(b, tol) for a, b in zip(self.coords, other.coords))

    def __repr__(self):
        return "(" + ", ".join(str(c) for c in self.coords) + ")"

    def to_json(self) -> list:
        return [c.to_json() for c in self.coords]

    @classmethod
    def from_json(cls, obj) -> "KVector":
        if not isinstance(obj, list):
            raise ValueError("a vector must be a JSON list of series")
        return cls([PSeries.from_json(c) for c in obj])


# -- residue linear algebra -------------------------------------------------

def _normalize_rows(rows) -> list[np.ndarray]:
    out = []
    for r in rows:
        r = np.asarray(r, dtype=complex)
        m = np.max(np.abs(r)) if r.size else 0.0
        if m > 0:
            out.append(r / m)
    return out


def _rref(rows: Sequence[np.ndarray], n: int):
    """Reduced row echelon form with partial pivoting and certified rank."""
    a = np.array(_normalize_rows(rows), dtype=complex).reshape(-1, n) if len(rows) else np.zeros((0, n), complex)
    a = a.copy()
    pivots = []
    r = 0
    for col in range(n):
        if r >= a.shape[0]:
            break
        k = r + int(np.argmax(np.abs(a[r:, col])))
        p = abs(a[k, col])
        if p <= EPS_COEFF:
            a[r:, col] = 0
            continue
        if p <= PIVOT_TOL:
            raise PrecisionExhausted("residue rank not certifiable (pivot in the gray zone)")
        a[[r, k]] = a[[k, r]]
        a[r] = a[r] / a[r, col]
        for i in range(a.shape[0]):
            if i != r and a[i, col] != 0:
                a[i] = a[i] - a[i, col] * a[r]
        a[r, col] = 1
        pivots.append(col)
        r += 1
    rest = a[r:]
    if rest.size and np.max(np.abs(rest)) > PIVOT_TOL:
        raise PrecisionExhausted("residue rank not certifiable")
    return a[:r], pivots


class ResSubspace:
    """Subspace of the residue field vector space, kept in canonical RREF."""

    __slots__ = ("n", "rows", "pivots")

    def __init__(self, n: int, rows: Sequence = ()):
        self.n = n
        self.rows, self.pivots = _rref(list(rows), n)

    @classmethod
    def zero(cls, n: int) -> "ResSubspace":
        return cls(n, [])

    @classmethod
    def full(cls, n: int) -> "ResSubspace":
        return cls(n, np.eye(n, dtype=complex))

    @classmethod
    def span(cls, n: int, vectors) -> "ResSubspace":
        return cls(n, [np.asarray(v, dtype=complex) for v in vectors])

    @property
    def dim(self) -> int:
        return len(self.pivots)

    @property
    def basis(self) -> list[np.ndarray]:
        return [r.copy() for r in self.rows]

    def contains_vector(self, v) -> bool:
        v = np.asarray(v, dtype=complex)
        m = np.max(np.abs(v)) if v.size else 0
        if m == 0:
            return True
        try:
            return ResSubspace(self.n, list(self.rows) + [v / m]).dim == self.dim
        except PrecisionExhausted:
            raise

    def contains(self, other: "ResSubspace") -> bool:
        return all(self.contains_vector(r) for r in other.rows)

    def __add__(self, other: "ResSubspace") -> "ResSubspace":
        return ResSubspace(self.n, list(self.rows) + list(other.rows))

    def __eq__(self, other):
        if not isinstance(other, ResSubspace):
            return NotImplemented
        if self.n != other.n or self.pivots != other.pivots:
            return False
        if not self.pivots:
            return True
        return bool(np.max(np.abs(self.rows - other.rows)) <= 1e-7)

    def __hash__(self):
        return hash((self.n, tuple(self.pivots)))

    def exhibition(self) -> tuple[int, ...]:
        return tuple(self.pivots)

    def __repr__(self):
        if not self.pivots:
            return f"ResSubspace(0 in {self.n})"
        rows = "; ".join("(" + ", ".join(_fmt_res(c) for c in r) + ")" for r in self.rows)
        return f"ResSubspace[{rows}]"

    def to_json(self) -> dict:
        return {"n": self.n, "dim": self.dim,
                "basis": [[[c.real, c.imag] for c in r] for r in self.rows]}


def _fmt_res(c: complex) -> str:
    from .puiseux import _fmt_c
    return _fmt_c(complex(round(c.real, 9), round(c.imag, 9)))


def dir_of(x: KVector) -> ResSubspace:
    """Residue line spanned by the leading slice of x (zero space for x = 0)."""
    n = len(x)
    r = ps_rv(x)
    if r.is_zero:
        return ResSubspace.zero(n)
    return ResSubspace(n, [np.array(r.slice)])


def affdir(points: Sequence[KVector]) -> ResSubspace:
    if not points:
        raise ValueError("affdir needs at least one point")
    n = len(points[0])
    rows = []
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            d = points[i] - points[j]
            if d.is_exact_zero:
                continue
            rows.append(np.array(ps_rv(d).slice))
    return ResSubspace(n, rows)


def is_exhibition(proj: Sequence[int], R: ResSubspace) -> bool:
    proj = list(proj)
    if len(proj) != R.dim:
        return False
    if R.dim == 0:
        return True
    sub = R.rows[:, proj]
    s = np.linalg.svd(sub, compute_uv=False)
    return bool(s[-1] > PIVOT_TOL)


# -- K-subspaces ------------------------------------------------------------

def _depth_floor(relprec=None) -> Fraction:
    return Fraction(default_relprec() if relprec is None else relprec) / 2


def _budget(relprec=None) -> Fraction:
    return Fraction(default_relprec() if relprec is None else relprec)


def _clean(v: KVector, floor: Fraction | None) -> KVector:
    """Treat coordinates known to vanish below ``floor`` as exact zeros."""
    if floor is None:
        return v
    out = []
    changed = False
    for c in v.coords:
        if not c.items and c.prec is not None and c.prec >= floor:
            out.append(PSeries.zero())
            changed = True
        else:
            out.append(c)
    return KVector(out) if changed else v


def _vec_lead(v: KVector) -> Fraction | None:
    """Leading exponent of a vector, None for exact zero."""
    g = ps_val(v)
    return None if g.is_zero else g.exp


class _ResidueSolver:
    """Expresses residue vectors in the span of fixed residue vectors."""

    def __init__(self, rows: list[np.ndarray], n: int):
        self.n = n
        self.mat = np.array(rows, dtype=complex).reshape(len(rows), n).T  # n x k

    def solve(self, r: np.ndarray):
        """Return (coefficients, remainder norm) relative to max|r| = 1."""
        m = np.max(np.abs(r))
        rn = r / m
        if self.mat.shape[1] == 0:
            return np.zeros(0, complex), float(np.max(np.abs(rn)))
        c, *_ = np.linalg.lstsq(self.mat, rn, rcond=None)
        rem = rn - self.mat @ c
        return c * m, float(np.max(np.abs(rem)))


def _reduce_against(w: KVector, reduced: list[KVector], solver: _ResidueSolver, floor):
    """Eliminate leading slices of w against a reduced family.

    Returns (residual, exponent) where the residual's leading slice is
    independent of the family, or (residual, None) when w lies in the span.
    """
    for _ in range(MAX_ROUNDS):
        w = _clean(w, floor)
        if w.is_exact_zero:
            return w, None
        if w.is_zero_to_prec:
            raise PrecisionExhausted("residual fell below working precision")
        try:
            e = _vec_lead(w)
        except PrecisionExhausted:
            raise PrecisionExhausted("residual not certifiable at working precision")
        if floor is not None and e >= floor:
            if not any(c.prec is not None for c in w.coords):
                # exact data: past the precision budget counts as in the span
                return w, None
            err = PrecisionExhausted("residual fell below the certification floor")
            err.floor = floor
            raise err
        sl = np.array(ps_rv(w).slice)
        coeffs, rem = solver.solve(sl)
        if rem > PIVOT_TOL:
            return w, e
        if rem > EPS_COEFF:
            raise PrecisionExhausted("leading slice dependence not certifiable")
        scale = float(np.max(np.abs(sl)))
        for c, b in zip(coeffs, reduced):
            if abs(c) > PIVOT_TOL * scale:
                w = w - b.scale(PSeries.monomial(c, e))
        # the slice at e is in the span, so what is left there is rounding
        tol = PIVOT_TOL * scale
        w = KVector([x.drop_at(e, tol) for x in w.coords])
    raise PrecisionExhausted(f"elimination exceeded {MAX_ROUNDS} rounds")


def reduce_vectors(basis: Sequence[KVector], relprec=None) -> list[KVector]:
    basis = list(basis)
    if not basis:
        return []
    n = len(basis[0])
    reduced: list[KVector] = []
    residues: list[np.ndarray] = []
    for b in basis:
        if b.is_exact_zero:
            raise PrecisionExhausted("basis contains the zero vector")
        lead = _vec_lead(b)
        inexact = any(c.prec is not None for c in b.coords) or any(
            c.prec is not None for r in reduced for c in r.coords)
        floor = lead + (_depth_floor(relprec) if inexact else _budget(relprec))
        w, e = _reduce_against(b, reduced, _ResidueSolver(residues, n), floor)
        if e is None:
            raise PrecisionExhausted("basis vectors are dependent at working precision")
        if e - lead >= Fraction(default_relprec() if relprec is None else relprec):
            raise PrecisionExhausted("dependence not resolvable at working precision")
        w = w.shift(-e)
        reduced.append(w)
        residues.append(w.residue())
    return reduced


class Subspace:
    """K-subspace of K^n with a cached valuation-reduced basis."""

    def __init__(self, n: int, basis: Iterable = (), reduced: list[KVector] | None = None):
        self.n = n
        self.basis = [b if isinstance(b, KVector) else KVector(b) for b in basis]
        for b in self.basis:
            if len(b) != n:
                raise DimensionMismatch(f"vector of length {len(b)} in K^{n}")
        self.reduced = reduced if reduced is not None else reduce_vectors(self.basis)
        self._residues = [r.residue() for r in self.reduced]

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(n, [KVector.basis_vector(n, k) for k in range(n)])

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls(n, [])

    @classmethod
    def coordinate(cls, n: int, idx: Sequence[int]) -> "Subspace":
        return cls(n, [KVector.basis_vector(n, k) for k in idx])

    @property
    def dim(self) -> int:
        return len(self.basis)

    def residue_rows(self) -> list[np.ndarray]:
        return list(self._residues)

    def solver(self) -> _ResidueSolver:
        return _ResidueSolver(self._residues, self.n)

    def transform(self, M: "KMatrix") -> "Subspace":
        return Subspace(self.n, [M.apply(b) for b in self.basis])

    def __repr__(self):
        return f"Subspace(dim={self.dim}, basis={self.basis})"

    def to_json(self) -> dict:
        return {"dim": self.dim, "n": self.n, "basis": [b.to_json() for b in self.basis]}

    @classmethod
    def from_json(cls, obj, n: int | None = None) -> "Subspace":
        basis = [KVector.from_json(b) for b in obj.get("basis", [])]
        if n is None:
            n = obj.get("n") or (len(basis[0]) if basis else None)
        if n is None:
            raise ValueError("zero-dimensional subspace needs an explicit n")
        if "dim" in obj and obj["dim"] != len(basis):
            raise ValueError("dim does not match the basis length")
        return cls(int(n), basis)


def reduce_basis(S: Subspace) -> Subspace:
    return Subspace(S.n, S.reduced, reduced=S.reduced)


def res_subspace(S: Subspace) -> ResSubspace:
    return ResSubspace(S.n, S.residue_rows())


def lift_subspace(R: ResSubspace) -> Subspace:
    return Subspace(R.n, [KVector.constant(r) for r in R.rows])


def dist_vector_to_subspace(u: KVector, W: Subspace, relprec=None) -> Gamma:
    """min over w in W of v(u - w)."""
    if u.is_exact_zero:
        return Gamma.zero()
    if any(c.prec is not None for c in u.coords) or any(
        c.prec is not None for b in W.reduced for c in b.coords
    ):
        floor = _vec_lead(u) + _depth_floor(relprec)
    else:
        floor = _vec_lead(u) + _budget(relprec)
    w, e = _reduce_against(u, W.reduced, W.solver(), floor)
    return Gamma.zero() if e is None else Gamma.of(e)


def contains_vector(W: Subspace, u: KVector) -> bool:
    return dist_vector_to_subspace(u, W).is_zero


def contains_subspace(W: Subspace, U: Subspace) -> bool:
    return all(contains_vector(W, b) for b in U.basis)


def delta_distance(U: Subspace, W: Subspace) -> Gamma:
    """Smallest gamma with v(u - W) <= gamma v(u) for every u in U.

    The reduced basis b_k of U is the image of the standard directions under
    the GL_n(O) completion of that basis; as this change of basis is an
    isometry, the maximum of dist(b_k, W) over k is the answer.
    """
    if U.n != W.n or U.dim != W.dim:
        raise DimensionMismatch(f"dim {U.dim} vs {W.dim}")
    out = Gamma.zero()
    for b in U.reduced:
        d = dist_vector_to_subspace(b, W)
        if d > out:
            out = d
    return out


def gl_completion(U: Subspace) -> list[int]:
    """Standard directions completing res(U) to a basis, lowest index first."""
    rows = U.residue_rows()
    chosen = []
    cur = ResSubspace(U.n, rows)
    for k in range(U.n):
        if cur.dim == U.n:
            break
        e = np.zeros(U.n, complex)
        e[k] = 1
        nxt = cur + ResSubspace(U.n, [e])
        if nxt.dim > cur.dim:
            chosen.append(k)
            cur = nxt
    return chosen


def delta_upper(U: Subspace, W: Subspace) -> tuple[Gamma, bool]:
    """Delta distance, or an upper bound on it when a residual reaches the floor.

    The flag is True for a certified value.
    """
    if U.n != W.n or U.dim != W.dim:
        raise DimensionMismatch(f"dim {U.dim} vs {W.dim}")
    out, exact = Gamma.zero(), True
    for b in U.reduced:
        try:
            d = dist_vector_to_subspace(b, W)
        except PrecisionExhausted as err:
            if getattr(err, "floor", None) is None:
                raise
            d, exact = Gamma.of(err.floor), False
        if d > out:
            out = d
    return out, exact


def subspaces_equal(U: Subspace, W: Subspace) -> bool:
    return U.dim == W.dim and delta_distance(U, W).is_zero


# -- matrices -----------------------------------------------------------------

class KMatrix:
    def __init__(self, rows: Iterable):
        self.rows = [tuple(PSeries.coerce(c) for c in r) for r in rows]

    @classmethod
    def identity(cls, n: int) -> "KMatrix":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def constant(cls, a) -> "KMatrix":
        a = np.asarray(a, dtype=complex)
        return cls([[complex(x) for x in r] for r in a])

    @classmethod
    def from_columns(cls, cols: Sequence[KVector]) -> "KMatrix":
        n = len(cols[0])
        return cls([[cols[j][i] for j in range(len(cols))] for i in range(n)])

    @property
    def shape(self):
        return (len(self.rows), len(self.rows[0]) if self.rows else 0)

    def column(self, j: int) -> KVector:
        return KVector([r[j] for r in self.rows])

    def apply(self, v: KVector) -> KVector:
        out = []
        for r in self.rows:
            acc = PSeries.zero()
            for a, b in zip(r, v.coords):
                if not a.is_exact_zero and not b.is_exact_zero:
                    acc = acc + a * b
            out.append(acc)
        return KVector(out)

    def __matmul__(self, other: "KMatrix") -> "KMatrix":
        cols = [self.apply(other.column(j)) for j in range(other.shape[1])]
        return KMatrix.from_columns(cols)

    def residue(self) -> np.ndarray:
        return np.array([[c.res() for c in r] for r in self.rows], dtype=complex)

    def is_integral(self) -> bool:
        return all(ps_val(c) <= Gamma.of(0) for r in self.rows for c in r)

    def inverse(self, relprec=None) -> "KMatrix":
        n, m = self.shape
        if n != m:
            raise DimensionMismatch("inverse of a non-square matrix")
        a = [list(r) + [PSeries.const(1) if i == j else PSeries.zero() for j in range(n)]
             for i, r in enumerate(self.rows)]
        for col in range(n):
            best, best_v = None, None
            for i in range(col, n):
                c = a[i][col]
                if c.is_exact_zero:
                    continue
                if c.is_zero_to_prec:
                    continue
                v = ps_val(c)
                if best_v is None or v > best_v:
                    best, best_v = i, v
            if best is None:
                if any(a[i][col].is_zero_to_prec and not a[i][col].is_exact_zero for i in range(col, n)):
                    raise PrecisionExhausted("pivot not certifiable")
                raise SingularMatrix("matrix is singular")
            a[col], a[best] = a[best], a[col]
            inv = a[col][col].inverse(relprec)
            a[col] = [x * inv for x in a[col]]
            for i in range(n):
                if i != col and not a[i][col].is_exact_zero:
                    f = a[i][col]
                    a[i] = [x - f * y for x, y in zip(a[i], a[col])]
        return KMatrix([r[n:] for r in a])

    def to_json(self) -> list:
        return [[c.to_json() for c in r] for r in self.rows]

    @classmethod
    def from_json(cls, obj) -> "KMatrix":
        return cls([[PSeries.from_json(c) for c in r] for r in obj])


def k_rank(vectors: Sequence[KVector]) -> int:
    """Rank over K of exact vectors, by elimination with valuation pivots."""
    rows = [list(v.coords) for v in vectors]
    if not rows:
        return 0
    n = len(rows[0])
    rank = 0
    for col in range(n):
        piv = None
        for i in range(rank, len(rows)):
            if not rows[i][col].is_zero_to_prec:
                if piv is None or ps_val(rows[i][col]) > ps_val(rows[piv][col]):
                    piv = i
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = rows[rank][col].inverse()
        for i in range(rank + 1, len(rows)):
            f = rows[i][col]
            if not f.is_exact_zero:
                f = f * inv
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[rank])]
        rank += 1
    return rank


def matrix_risometry_class(M: KMatrix) -> str:
    """One of 'not_GLnO', 'isometry', 'risometry'."""
    n, m = M.shape
    if n != m:
        raise DimensionMismatch("matrix must be square")
    cols = [M.column(j) for j in range(n)]
    if any(c.is_exact_zero for c in cols):
        raise SingularMatrix("matrix has a zero column")
    try:
        reduce_vectors(cols)
    except PrecisionExhausted:
        if k_rank(cols) < n:
            raise SingularMatrix("matrix is singular")
        raise
    if not M.is_integral():
        return "not_GLnO"
    r = M.residue()
    s = np.linalg.svd(r, compute_uv=False)
    if s[-1] <= PIVOT_TOL:
        return "not_GLnO"
    if np.max(np.abs(r - np.eye(n))) <= 1e-9:
        return "risometry"
    return "isometry"

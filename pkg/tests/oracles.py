"""Reference computations that avoid the elimination code under test."""
from fractions import Fraction
from itertools import combinations, permutations

from valstrat.gamma import Gamma
from valstrat.puiseux import PSeries, ps_val
from valstrat.vla import KVector

GRID_EXPS = [Fraction(k, 6) for k in range(-24, 49)]
GRID_COEFFS = [1, -1, 2, -2, 0.5, -0.5]


def _sign(p):
    s = 1
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                s = -s
    return s


def det(rows):
    k = len(rows)
    acc = PSeries.zero()
    for p in permutations(range(k)):
        term = PSeries.const(_sign(p))
        for i in range(k):
            term = term * rows[i][p[i]]
        acc = acc + term
    return acc


def wedge_value(vectors) -> Gamma:
    """Largest value among the maximal minors, i.e. the norm of the wedge."""
    n = len(vectors[0])
    best = Gamma.zero()
    for cols in combinations(range(n), len(vectors)):
        m = det([[v[c] for c in cols] for v in vectors])
        if not m.is_exact_zero:
            best = max(best, ps_val(m))
    return best


def plucker_dist(u: KVector, W) -> Gamma:
    """v(u - W) as |u ^ w_1 ^ ... ^ w_d| / |w_1 ^ ... ^ w_d|."""
    if not W:
        return ps_val(u)
    top = wedge_value([u] + list(W))
    if top.is_zero:
        return Gamma.zero()
    return top / wedge_value(list(W))


def grid_delta(U, W) -> Gamma:
    """Brute-force max of v(u - W)/v(u) over grid combinations of U's basis."""
    U = list(U)
    if len(U) == 1:
        combos = [U[0]]
    else:
        combos = []
        # leading-coefficient ratios let the grid hit residue cancellations
        coeffs = set(GRID_COEFFS)
        for a, b in zip(U[0], U[1]):
            if not a.is_exact_zero and not b.is_exact_zero:
                r = a.lead_coeff / b.lead_coeff
                coeffs |= {r, -r, 1 / r, -1 / r}
        steps = [PSeries.zero()] + [PSeries.monomial(c, e) for c in coeffs for e in GRID_EXPS]
        for c in steps:
            combos.append(U[0] + U[1].scale(c))
            combos.append(U[1] + U[0].scale(c))
    best = Gamma.zero()
    for u in combos:
        if u.is_exact_zero:
            continue
        best = max(best, plucker_dist(u, W) / ps_val(u))
    return best

"""Seeded generators of subspace pairs shared by the distance suites."""
from fractions import Fraction

from valstrat.puiseux import PSeries
from valstrat.vla import KVector, k_rank

ONE = PSeries.const(1)
ZERO = PSeries.zero()


def mono(rng, exps=(0, Fraction(1, 2), 1, 2)):
    return PSeries.monomial(rng.choice([1, -1, 2]), rng.choice(exps))


def entry(rng):
    x = mono(rng)
    if rng.random() < 0.5:
        x = x + mono(rng)
    return x if not x.is_exact_zero else ONE


def random_pair(rng):
    n = rng.randint(2, 3)
    d = rng.randint(1, n - 1)
    while True:
        U = [KVector([entry(rng) for _ in range(n)]) for _ in range(d)]
        if k_rank(U) == d:
            break
    if rng.random() < 0.6:
        W = [u + KVector([PSeries.monomial(rng.choice([1, -1]), rng.choice([Fraction(1, 2), 1, 3]))
                          if rng.random() < 0.5 else ZERO for _ in range(n)]) for u in U]
    else:
        W = [KVector([entry(rng) for _ in range(n)]) for _ in range(d)]
    if k_rank(W) != d:
        W = U
    return U, W


def normal_form_pair(rng):
    n = rng.randint(2, 5)
    d = rng.randint(1, n - 1)

    def tail():
        return [PSeries.monomial(rng.choice([1, -1, 2]), Fraction(rng.randint(1, 8), 2))
                if rng.random() < 0.7 else ZERO for _ in range(n - d)]

    def basis():
        out = []
        for j in range(d):
            head = [ONE if k == j else ZERO for k in range(d)]
            out.append(KVector(head + tail()))
        return out
    return n, basis(), basis()

"""Acceptance criteria, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v``; the verdict lines are
printed even when output capture is on.  The crit-set grid is shared by
several criteria and computed once per session (about four minutes).
"""
import random
import time
from fractions import Fraction
from functools import lru_cache

import pytest

from oracles import grid_delta
from pairs import normal_form_pair, random_pair
from valstrat.cli import cusp_grid
from valstrat.config import Config
from valstrat.gamma import Gamma
from valstrat.lipschitz import (
    chain_w_grid,
    check_lipschitz_chain,
    check_nested_output,
    family_by_name,
    nested_subspaces,
    random_admissible_grid,
    sample_cusp_chains,
    taylor_order_check,
    validate_val_chain,
)
from valstrat.puiseux import PSeries, T, default_relprec, newton_solve, poly_eval, ps_res, ps_rv, ps_val
from valstrat.riso import SquareExample, all_risometries, check_risometry
from valstrat.strat import StratSpec, candidate_grid, crit_function_eval, crit_values_at_point, fit_monomial_pieces
from valstrat.vla import KVector, Subspace, delta_distance, res_subspace

G = Gamma.of
Z = Gamma.zero()
F = Fraction
STRATS = {"cusp:3,2": StratSpec.cusp(3, 2), "cusp:5,2": StratSpec.cusp(5, 2)}


@pytest.fixture
def verdict(capsys):
    def emit(k, title, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {k:>2}: {title}"
        if detail:
            line += f"  [{detail}]"
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
    return emit


@lru_cache(maxsize=None)
def crit(name, lam):
    t = time.time()
    r = crit_function_eval(STRATS[name], list(lam), Config())
    return frozenset(r.values), time.time() - t


def show(values):
    return "{" + ", ".join("1" if g.exp == 0 else f"<{g.exp}>" for g in sorted(values, reverse=True)) + "}"


def test_cusp_table(verdict):
    table = {
        (G(0), Z): {G(0)},
        (G(1), Z): {G(0), G(1), G(F(3, 2))},
        (G(2), Z): {G(0), G(2), G(3)},
        (G(-3), Z): {G(-3), G(-2)},
        (G(1), G(2)): {G(0), G(1), G(F(3, 2)), G(2)},
        (G(-3), G(-1)): {G(-3), G(-2), G(-1)},
    }
    bad, slowest = [], 0.0
    for lam, want in table.items():
        got, secs = crit("cusp:3,2", lam)
        slowest = max(slowest, secs)
        if got != want or secs >= 30:
            bad.append(f"{lam}: {show(got)} in {secs:.1f}s")
    verdict(1, "cusp(3,2) contact table rows", not bad, "; ".join(bad) or f"slowest query {slowest:.1f}s")


def test_second_cusp(verdict):
    table = {(G(1), Z): {G(0), G(1), G(F(5, 2))}, (G(-5), Z): {G(-5), G(-2)}}
    bad = []
    for lam, want in table.items():
        got, secs = crit("cusp:5,2", lam)
        if got != want:
            bad.append(f"{lam}: {show(got)}")
    verdict(2, "cusp(5,2) contact table rows", not bad, "; ".join(bad))


def test_trumpet_exponent(verdict):
    S = StratSpec.trumpet()
    p = KVector([T ** 2, PSeries.zero(), T ** 3])
    r = crit_values_at_point(S, p, sorted(candidate_grid(S, [G(2)])))
    w = r.witnesses.get(G(3))
    expected = KVector([T ** 2, PSeries.zero(), -(T ** 3)])
    ok = G(3) in r.values and w is not None and (w - expected).is_zero_to_prec
    verdict(3, "trumpet crit value <3> witnessed by (t^2, 0, -t^3)", ok, f"witness {w}")


def test_monomial_fit(verdict):
    samples = []
    for e in (1, 2, 3):
        lam = (G(e), Z)
        samples.append((list(lam), set(crit("cusp:3,2", lam)[0])))
    fn = fit_monomial_pieces(samples)
    mons = {(m.mu, m.exps) for p in fn.pieces for m in p.values}
    ok = (F(0), (F(3, 2), F(0))) in mons and all(fn.evaluate(lam) == v for lam, v in samples)
    verdict(4, "fit recovers lambda_0^(3/2) with mu = 1", ok, f"{len(mons)} monomials")


def test_crit_cardinality_bound(verdict):
    sizes = [len(crit("cusp:3,2", tuple(lam))[0]) for lam in cusp_grid()]
    ok = len(sizes) >= 40 and max(sizes) <= 4
    verdict(5, "every crit set on the 40-point grid has at most 4 elements", ok,
            f"{len(sizes)} points, largest set {max(sizes)}")


def test_nested_subspace_suite(verdict):
    t = time.time()
    fails = 0
    for seed in range(100):
        W = random_admissible_grid(random.Random(seed))
        assert W.n <= 5 and W.m <= 4
        if not check_nested_output(W, nested_subspaces(W)).ok:
            fails += 1
    secs = time.time() - t
    verdict(6, "100 random W-grids nest with all properties", fails == 0 and secs < 60,
            f"{fails} failures, {secs:.1f}s")


def test_delta_oracle(verdict):
    rng = random.Random(2024)
    mism = 0
    for _ in range(100):
        U, W = random_pair(rng)
        n = len(U[0])
        if delta_distance(Subspace(n, U), Subspace(n, W)) != grid_delta(U, W):
            mism += 1
    nf = 0
    for _ in range(100):
        n, A, B = normal_form_pair(rng)
        expected = max(Z if (a - b).is_exact_zero else ps_val(a - b) for a, b in zip(A, B))
        if delta_distance(Subspace(n, A), Subspace(n, B)) != expected:
            nf += 1
    res = 0
    for _ in range(100):
        U, W = random_pair(rng)
        n = len(U[0])
        SU, SW = Subspace(n, U), Subspace(n, W)
        if (delta_distance(SU, SW) < G(0)) != (res_subspace(SU) == res_subspace(SW)):
            res += 1
    verdict(7, "distance oracle, normal-form formula, residue criterion", mism + nf + res == 0,
            f"mismatches {mism}/{nf}/{res}")


def _rand_point(rng):
    return KVector([PSeries.from_terms([(F(rng.randint(-2, 6), 2), rng.choice([1, -1, 2, 1j]))
                                        for _ in range(2)])])


def test_risometry_suite(verdict):
    ex = SquareExample.build(-2)
    rng = random.Random(8)
    pts = [ex.random_point(rng) for _ in range(50)]
    square_ok = check_risometry([(p, ex.phi(p)) for p in pts]).ok
    multiple = 0
    for _ in range(200):
        k = rng.randint(1, 6)
        X = []
        while len(X) < k:
            p = _rand_point(rng)
            if all(not (p - q).is_zero_to_prec for q in X):
                X.append(p)
        if rng.random() < 0.5:
            Y = [x.scale(PSeries.const(1) + T) + KVector([PSeries.const(3)]) for x in X]
            rng.shuffle(Y)
        else:
            Y = [_rand_point(rng) for _ in range(k)]
        if len(list(all_risometries(X, Y))) > 1:
            multiple += 1
    zero, one = KVector([PSeries.zero()]), KVector([PSeries.const(1)])
    doubling = check_risometry([(zero, zero), (one, one.scale(PSeries.const(2)))]).ok
    verdict(8, "square straightening, uniqueness, doubling rejected",
            square_ok and multiple == 0 and not doubling,
            f"square {square_ok}, non-unique {multiple}, doubling accepted {doubling}")


def test_taylor_thresholds(verdict):
    notes, ok = [], True
    for name in ("hier1", "hier2"):
        fam = family_by_name(name)
        r2, r3, r4 = (taylor_order_check(fam, r) for r in (2, 3, 4))
        good = r2.ok and r3.ok and not r4.ok and r4.violation is not None
        ok &= good
        notes.append(f"{name}: r=4 witness residual <{r4.violation[3].exp}> vs <{r4.violation[4].exp}>"
                     if r4.violation else f"{name}: no witness")
    verdict(9, "hierarchy examples pass r=2,3 and fail r=4", ok, "; ".join(notes))


def test_lipschitz_pipeline(verdict):
    S = StratSpec.cusp(3, 2)
    chains = sample_cusp_chains(S, random.Random(10), count=20)
    good = 0
    for c in chains:
        if validate_val_chain(S, c).ok and check_lipschitz_chain(S, c, nested_subspaces(chain_w_grid(S, c))).ok:
            good += 1
    verdict(10, "20 sampled cusp val-chains are Lipschitz", len(chains) == 20 and good == 20,
            f"{good}/{len(chains)}")


def _series(rng, lo=-6, hi=12):
    terms = [(F(rng.randint(lo, hi), rng.choice([1, 2, 3])), complex(rng.choice([1, -1, 2, -3]), rng.randint(-2, 2)))
             for _ in range(rng.randint(1, 4))]
    x = PSeries.from_terms(terms)
    return x if not x.is_exact_zero else PSeries.monomial(1, terms[0][0])


def _vector(rng, n):
    return KVector([_series(rng) for _ in range(n)])


def _noise_free(r: PSeries, scale: float):
    return [(e, c) for e, c in r.terms if abs(c) > 1e-9 * scale]


def test_arithmetic_axioms(verdict):
    rng = random.Random(11)
    fails = {"ultrametric": 0, "multiplicative": 0, "rv": 0, "res": 0, "newton": 0, "average": 0}
    for _ in range(500):
        x, y = _series(rng), _series(rng)
        s = x + y
        vs = Z if s.is_exact_zero else ps_val(s)
        vx, vy = ps_val(x), ps_val(y)
        if vs > max(vx, vy) or (vx != vy and vs != max(vx, vy)):
            fails["ultrametric"] += 1
        if ps_val(x * y) != vx * vy:
            fails["multiplicative"] += 1
        if ps_rv(x * y) != ps_rv(x) * ps_rv(y):
            fails["rv"] += 1
        u, w = x * PSeries.monomial(1, -x.lead_exp), y * PSeries.monomial(1, -y.lead_exp)
        if abs(ps_res(u * w) - ps_res(u) * ps_res(w)) > 1e-9 * abs(ps_res(u) * ps_res(w)):
            fails["res"] += 1
        # root of z^2 - x^2 near x, residual beyond the precision budget
        z = newton_solve([-(x * x), 0, 1], ps_rv(x))
        left = _noise_free(poly_eval([-(x * x), 0, 1], z), max(1.0, (x * x).max_abs()))
        if left and left[0][0] < 2 * x.lead_exp + default_relprec():
            fails["newton"] += 1
        # averages of pairs with a common rv of differences
        n, m = rng.randint(1, 3), rng.randint(2, 5)
        d = _vector(rng, n)
        lead = ps_val(d).exp
        xs = [_vector(rng, n) for _ in range(m)]
        xps = []
        for xi in xs:
            tail = KVector([PSeries.monomial(rng.choice([1, -1, 1j]), lead + F(rng.randint(1, 6), 2))
                            for _ in range(n)])
            xps.append(xi - d - tail)
        inv = PSeries.const(1.0 / m)
        xbar = KVector([sum((xi[k] for xi in xs), PSeries.zero()) * inv for k in range(n)])
        xpbar = KVector([sum((xi[k] for xi in xps), PSeries.zero()) * inv for k in range(n)])
        if any(ps_rv(xi - xpi) != ps_rv(d) for xi, xpi in zip(xs, xps)) or ps_rv(xbar - xpbar) != ps_rv(d):
            fails["average"] += 1
    total = sum(fails.values())
    verdict(11, "500-sample arithmetic axioms", total == 0,
            ", ".join(f"{k} {v}" for k, v in fails.items()))

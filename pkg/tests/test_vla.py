import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import grid_delta, plucker_dist
from pairs import entry, normal_form_pair, random_pair
from valstrat.errors import DimensionMismatch, SingularMatrix
from valstrat.gamma import Gamma
from valstrat.puiseux import PSeries, T
from valstrat.vla import (
    KMatrix,
    KVector,
    ResSubspace,
    Subspace,
    affdir,
    contains_subspace,
    delta_distance,
    dir_of,
    dist_vector_to_subspace,
    is_exhibition,
    res_subspace,
)

ONE = PSeries.const(1)
ZERO = PSeries.zero()


def test_delta_example():
    U = Subspace(2, [KVector([ONE, T])])
    W = Subspace(2, [KVector([ONE, T * T])])
    assert delta_distance(U, W) == Gamma.of(1)


def test_delta_of_equal_spaces_is_zero():
    U = Subspace(2, [KVector([ONE, T]), KVector([T, ONE])])
    assert delta_distance(U, Subspace.full(2)).is_zero


def test_delta_requires_equal_dimensions():
    with pytest.raises(DimensionMismatch):
        delta_distance(Subspace.full(2), Subspace.coordinate(2, [0]))


def test_delta_matches_grid_oracle():
    rng = random.Random(17)
    for _ in range(30):
        U, W = random_pair(rng)
        n = len(U[0])
        assert delta_distance(Subspace(n, U), Subspace(n, W)) == grid_delta(U, W)


def test_distance_matches_wedge_formula():
    rng = random.Random(3)
    for _ in range(40):
        U, W = random_pair(rng)
        n = len(U[0])
        u = KVector([entry(rng) for _ in range(n)])
        assert dist_vector_to_subspace(u, Subspace(n, W)) == plucker_dist(u, W)


def test_normal_form_distance_formula():
    rng = random.Random(5)
    for _ in range(40):
        n, A, B = normal_form_pair(rng)
        expected = max((a - b).val() if not (a - b).is_exact_zero else Gamma.zero() for a, b in zip(A, B))
        assert delta_distance(Subspace(n, A), Subspace(n, B)) == expected


def test_small_delta_iff_equal_residues():
    rng = random.Random(11)
    for _ in range(40):
        U, W = random_pair(rng)
        n = len(U[0])
        SU, SW = Subspace(n, U), Subspace(n, W)
        assert (delta_distance(SU, SW) < Gamma.of(0)) == (res_subspace(SU) == res_subspace(SW))


def test_residue_subspace_rref_and_exhibition():
    R = ResSubspace(3, [np.array([1, 1, 0]), np.array([0, 0, 1])])
    assert R.dim == 2
    assert is_exhibition([0, 2], R)
    assert not is_exhibition([0, 1], R)


def test_dir_and_affdir():
    x = KVector([T, PSeries.monomial(3, 1)])
    assert dir_of(x) == ResSubspace(2, [np.array([1, 3])])
    pts = [KVector([ZERO, ZERO]), KVector([ONE, ZERO]), KVector([ZERO, T])]
    assert affdir(pts).dim == 2


def test_matrix_inverse():
    M = KMatrix([[ONE, T], [T, ONE]])
    P = M @ M.inverse()
    for i in range(2):
        for j in range(2):
            d = P.rows[i][j] - (ONE if i == j else ZERO)
            assert d.truncate(10).is_zero_to_prec
    with pytest.raises(SingularMatrix):
        KMatrix([[ONE, ONE], [ONE, ONE]]).inverse()


@given(st.integers(0, 10 ** 6))
@settings(max_examples=30, deadline=None)
def test_containment_is_reflexive(seed):
    rng = random.Random(seed)
    U, _ = random_pair(rng)
    S = Subspace(len(U[0]), U)
    assert contains_subspace(S, S)
    assert delta_distance(S, S).is_zero

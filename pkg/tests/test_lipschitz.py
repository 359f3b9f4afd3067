import json
import random
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from valstrat.errors import RejectedInput, UnsupportedFamily
from valstrat.gamma import Gamma
from valstrat.lipschitz import (
    SubspaceGrid,
    ValChain,
    chain_w_grid,
    check_lipschitz_chain,
    check_nested_output,
    enumerate_val_chains,
    family_by_name,
    grid_violations,
    identity_grid,
    nested_subspaces,
    polynomial_family,
    random_admissible_grid,
    sample_cusp_chains,
    tangent_space,
    taylor_order_check,
    validate_val_chain,
)
from valstrat.puiseux import PSeries, T
from valstrat.strat import StratSpec
from valstrat.vla import KVector, Subspace, delta_distance as delta

DATA = Path(__file__).parent / "data"
G = Gamma.of
CUSP = StratSpec.cusp(3, 2)


def load_chain(name):
    return ValChain.from_json(json.loads((DATA / name).read_text()))


def pt(*coords):
    return KVector([PSeries.coerce(c) for c in coords])


def test_tangent_space_of_cusp_branch():
    a = pt(T ** 2, T ** 3)
    Tg = tangent_space(CUSP, 1, a)
    assert Tg.dim == 1
    # the curve y^2 = x^3 has tangent direction (2y, 3x^2) at (t^2, t^3)
    expected = Subspace(2, [pt(2 * T ** 3, 3 * T ** 4)])
    assert delta(Tg, expected).is_zero


def test_tangent_space_of_open_stratum_is_everything():
    assert tangent_space(CUSP, 2, pt(1, 5)).dim == 2


def test_good_chain_validates():
    chain = load_chain("chain_good.json")
    v = validate_val_chain(CUSP, chain)
    assert v.ok
    assert v.lambdas[:2] == [G(4), G(1)]
    assert v.lambdas[2].is_inf


def test_bad_chain_fails_realization():
    v = validate_val_chain(CUSP, load_chain("chain_bad.json"))
    assert not v.ok
    assert v.condition == 4


def test_chain_dimension_pattern():
    chain = ValChain([pt(0, 0), pt(T, T)], [0, 1])
    v = validate_val_chain(CUSP, chain)
    assert not v.ok and v.condition == 1


def test_chain_json_round_trip():
    chain = load_chain("chain_good.json")
    again = ValChain.from_json(json.loads(json.dumps(chain.to_json())))
    assert again.dims == chain.dims
    assert all((p - q).is_zero_to_prec for p, q in zip(again.points, chain.points))


def test_enumerate_finds_corrected_chain():
    good = load_chain("chain_good.json")
    found = enumerate_val_chains(CUSP, good.points[0], 2, good.points[1:])
    assert any(c.dims == [2, 1, 0] for c in found)
    assert all(validate_val_chain(CUSP, c).ok for c in found)


def test_good_chain_nesting_and_lipschitz():
    chain = load_chain("chain_good.json")
    validate_val_chain(CUSP, chain)
    W = chain_w_grid(CUSP, chain)
    assert grid_violations(W) == []
    V = nested_subspaces(W)
    assert check_nested_output(W, V).ok
    assert check_lipschitz_chain(CUSP, chain, V).ok


def test_identity_grid_is_fixed():
    lam = [G(3), G(1), Gamma.inf()]
    W = identity_grid(3, [3, 2, 1], lam)
    V = nested_subspaces(W)
    for key, S in W.entries.items():
        assert delta(S, V.entries[key]).is_zero


def test_grid_json_round_trip():
    W = SubspaceGrid.from_json(json.loads((DATA / "identity_grid.json").read_text()))
    again = SubspaceGrid.from_json(json.loads(json.dumps(W.to_json())))
    assert again.lambdas == W.lambdas and again.dims == W.dims


def test_rejects_non_increasing_distances():
    W = identity_grid(2, [2, 1], [G(1), G(3)])
    with pytest.raises(RejectedInput, match="increasing distances"):
        nested_subspaces(W)


def test_rejects_distance_bound_failure():
    W = identity_grid(2, [1, 1], [G(3), G(1)])
    # a row-one entry far from row zero
    W.entries[(1, 1)] = Subspace(2, [pt(1, 1)])
    assert any(name == "distance bound" for name, _, _ in grid_violations(W))
    with pytest.raises(RejectedInput):
        nested_subspaces(W)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_random_grids_nest(seed):
    W = random_admissible_grid(random.Random(seed))
    assert grid_violations(W) == []
    V = nested_subspaces(W)
    report = check_nested_output(W, V)
    assert report.ok, report.failures


def test_sampled_cusp_chains_are_lipschitz():
    chains = sample_cusp_chains(CUSP, random.Random(3), count=5)
    assert len(chains) == 5
    for c in chains:
        assert validate_val_chain(CUSP, c).ok
        V = nested_subspaces(chain_w_grid(CUSP, c))
        assert check_lipschitz_chain(CUSP, c, V).ok


@pytest.mark.parametrize("name", ["hier1", "hier2"])
def test_hierarchy_thresholds(name):
    fam = family_by_name(name)
    assert taylor_order_check(fam, 2).ok
    assert taylor_order_check(fam, 3).ok
    assert not taylor_order_check(fam, 4).ok


@pytest.mark.parametrize("name", ["identity", "square"])
def test_polynomial_arcs_pass_every_order(name):
    fam = family_by_name(name)
    for r in (2, 3, 4):
        assert taylor_order_check(fam, r).ok


def test_order_two_forms_agree():
    assert taylor_order_check(family_by_name("hier1"), 2).forms_agree


def test_unknown_family():
    with pytest.raises(UnsupportedFamily):
        family_by_name("bessel")


def test_family_from_json():
    fam = polynomial_family({"arcs": [{"label": 0, "coeffs": [0, 1, "t"]}], "radius": G(0).to_json()})
    assert taylor_order_check(fam, 3).ok
    with pytest.raises(RejectedInput):
        polynomial_family({"arcs": []})

import math

import numpy as np
import pytest

from perclab.oracle import path_graph
from perclab.osss import (DecisionForest, DecisionTree, ProductMeasure,
                          bit_table, coupled_variation, covariance,
                          evaluation_tree, expectation, fixed_order_tree,
                          forest_masks, ghost_crossing_instance,
                          random_instance, random_monotone_table, revealment,
                          revealment_sampled, run_forest, run_tree,
                          verify_osss)


# -- measures -----------------------------------------------------------------


def test_measure_validation():
    with pytest.raises(ValueError):
        ProductMeasure(())
    with pytest.raises(ValueError):
        ProductMeasure((0.5,) * 21)
    with pytest.raises(ValueError):
        ProductMeasure((0.5, 1.5))
    with pytest.raises(ValueError):
        ProductMeasure((0.5, 0.5, 0.5), layer_split=2)


def test_measure_weights_sum_and_atoms(rng):
    params = tuple(rng.uniform(0.05, 0.95, 5))
    mu = ProductMeasure(params)
    w = mu.weights()
    assert w.shape == (32,)
    assert abs(w.sum() - 1.0) < 1e-12
    assert abs(w[-1] - np.prod(params)) < 1e-15          # all bits on
    assert abs(w[0] - np.prod(1.0 - np.asarray(params))) < 1e-15


def test_two_layer_indexing():
    gamma = -math.expm1(-1.2)
    mu = ProductMeasure.two_layer(3, 0.4, 1.2)
    assert mu.n_bits == 6 and mu.layer_split == 3
    assert mu.params == (0.4, 0.4, 0.4) + (gamma,) * 3
    assert mu.perc_index(2) == 2
    assert mu.field_index(2) == 5
    with pytest.raises(ValueError):
        mu.perc_index(3)
    with pytest.raises(ValueError):
        ProductMeasure((0.5, 0.5)).field_index(0)


# -- query procedures ---------------------------------------------------------


def test_run_tree_mechanics():
    # halt as soon as bit 0 reads 1, otherwise continue to bit 1
    tree = fixed_order_tree([0, 1], halt_when=lambda h: h[-1] == (0, 1))
    mask, hist = run_tree(tree, 2, 0b01)
    assert mask == 0b01 and hist == ((0, 1),)
    mask, hist = run_tree(tree, 2, 0b10)
    assert mask == 0b11 and hist == ((0, 0), (1, 1))


def test_run_tree_contract_violations():
    requery = DecisionTree("again", 0, lambda h: 0, lambda h: False)
    with pytest.raises(RuntimeError):
        run_tree(requery, 2, 0b11)
    oob = DecisionTree("oob", 5, lambda h: 5, lambda h: False)
    with pytest.raises(ValueError):
        run_tree(oob, 2, 0b00)
    nohalt = DecisionTree("nohalt", 0, lambda h: len(h), lambda h: False)
    with pytest.raises(RuntimeError):
        run_tree(nohalt, 3, 0b101)


def test_fixed_order_validation():
    with pytest.raises(ValueError):
        fixed_order_tree([])
    with pytest.raises(ValueError):
        fixed_order_tree([0, 1, 0])


def test_forest_validation():
    with pytest.raises(ValueError):
        DecisionForest(())
    with pytest.raises(TypeError):
        DecisionForest((lambda cfg: 0,))


def test_forest_union_mask():
    t0 = fixed_order_tree([0])
    t2 = fixed_order_tree([2])
    forest = DecisionForest((t0, t2))
    assert run_forest(forest, 3, 0b000) == 0b101
    masks = forest_masks(forest, 3)
    assert masks.shape == (8,) and (masks == 0b101).all()


def test_evaluation_tree_settles_exactly(rng):
    # every configuration agreeing with the queried bits carries the same
    # value -- the defining property of the canonical procedure
    n = 4
    table = random_monotone_table(rng, n)
    for order in (None, tuple(reversed(range(n)))):
        tree = evaluation_tree(table, n, order)
        masks = forest_masks(DecisionForest((tree,)), n)
        for cfg in range(1 << n):
            m = int(masks[cfg])
            agree = [c for c in range(1 << n) if (c & m) == (cfg & m)]
            assert len({table[c] for c in agree}) == 1


def test_evaluation_tree_validation():
    with pytest.raises(ValueError):
        evaluation_tree(np.zeros(7), 3)
    with pytest.raises(ValueError):
        evaluation_tree(np.zeros(1 << 13), 13)
    with pytest.raises(ValueError):
        evaluation_tree(np.zeros(8), 3, order=(0, 0, 2))


# -- exact functionals --------------------------------------------------------


def test_revealment_exact_by_hand():
    mu = ProductMeasure((0.3, 0.7))
    tree = fixed_order_tree([0, 1], halt_when=lambda h: h[-1] == (0, 1))
    forest = DecisionForest((tree,))
    delta = revealment(forest, mu)
    # bit 0 always read; bit 1 only on the 0-branch of bit 0
    assert np.allclose(delta, [1.0, 0.7], atol=1e-15)


def test_revealment_sampled_tracks_exact():
    mu = ProductMeasure((0.3, 0.7))
    tree = fixed_order_tree([0, 1], halt_when=lambda h: h[-1] == (0, 1))
    forest = DecisionForest((tree,))
    exact = revealment(forest, mu)
    approx = revealment_sampled(forest, mu, 4000, seed=7)
    assert np.abs(approx - exact).max() < 0.03


def test_expectation_and_bit_covariance():
    mu = ProductMeasure((0.25, 0.6))
    b0 = bit_table(0, 2)
    assert abs(expectation(mu, b0) - 0.25) < 1e-15
    assert abs(covariance(mu, b0, b0) - 0.25 * 0.75) < 1e-15
    assert abs(covariance(mu, b0, bit_table(1, 2))) < 1e-15


def test_coupled_variation_doubles_covariance_for_indicators(rng):
    # CoVr[f, g] = 2 Cov[f, g] whenever both functions are 0/1 valued
    for _ in range(25):
        n = int(rng.integers(1, 7))
        mu = ProductMeasure(tuple(rng.uniform(0.05, 0.95, n)))
        ft = (rng.random(1 << n) < 0.5).astype(float)
        gt = (rng.random(1 << n) < 0.5).astype(float)
        cvr = coupled_variation(mu, ft, gt)
        assert abs(cvr - 2.0 * covariance(mu, ft, gt)) < 1e-12


# -- the inequality -----------------------------------------------------------


def test_single_bit_worked_equality():
    # f = g = the bit itself, queried by the one-bit tree: both sides
    # collapse to p(1-p) exactly
    for p in (0.1, 0.37, 0.5, 0.9):
        mu = ProductMeasure((p,))
        ft = bit_table(0, 1)
        forest = DecisionForest((fixed_order_tree([0]),))
        rep = verify_osss(mu, ft, ft, forest)
        assert rep.holds
        assert abs(rep.lhs - p * (1.0 - p)) < 1e-15
        assert abs(rep.rhs - p * (1.0 - p)) < 1e-15
        assert abs(rep.slack) < 1e-15


def test_ghost_single_edge_equality():
    # one embedded edge: f = 1(edge open), g = 1(edge open and carries the
    # field).  The probe reads the field bit always and the edge bit with
    # probability gamma, so both sides equal gamma * p(1-p).
    graph = path_graph(1)
    for p, intensity in ((0.3, 0.8), (0.55, 1.7), (0.9, 0.1)):
        gamma = -math.expm1(-intensity)
        mu, ft, gt, forest = ghost_crossing_instance(graph, (0,), p,
                                                     intensity, k=1)
        rep = verify_osss(mu, ft, gt, forest)
        assert rep.holds
        want = gamma * p * (1.0 - p)
        assert abs(rep.lhs - want) < 1e-12
        assert abs(rep.rhs - want) < 1e-12
        assert abs(rep.revealments[0] - gamma) < 1e-12   # edge bit
        assert abs(rep.revealments[1] - 1.0) < 1e-12     # field bit


def test_ghost_instance_edge_budget():
    with pytest.raises(ValueError):
        ghost_crossing_instance(path_graph(11), (0,), 0.5, 1.0)


def test_witness_when_forest_misses_g():
    mu = ProductMeasure((0.5, 0.5))
    gt = bit_table(1, 2)                 # depends on the unqueried bit
    forest = DecisionForest((fixed_order_tree([0]),))
    with pytest.raises(ValueError, match="does not determine"):
        verify_osss(mu, bit_table(0, 2), gt, forest)
    # same forest is fine once the check is waived and g ignores bit 1
    rep = verify_osss(mu, bit_table(0, 2), bit_table(0, 2), forest,
                      check_computes=False)
    assert rep.holds


def test_randomized_battery_no_violations(rng):
    kinds = set()
    for _ in range(100):
        inst = random_instance(rng)
        kinds.add(inst.kind)
        rep = verify_osss(inst.measure, inst.f_table, inst.g_table,
                          inst.forest)
        assert rep.holds, inst.description
    assert kinds == {"plain", "two-layer"}

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gelato import graph
from gelato.core import DataSet, EdgeSet, standardize
from gelato.lasso import RegressionFit, coefficient_matrix, nodewise_regressions
from gelato.simulate import gen_ar1_block, sample_gaussian
from gelato.tuning import theoretical_parameters

from oracles import pairwise_edges


def fit_of(coefs, node=0):
    return RegressionFit(node=node, coefficients=np.asarray(coefs, float), lambda_n=0.1,
                         iterations=1, objective=0.0)


def test_threshold_examples():
    np.testing.assert_array_equal(graph.threshold_coefficients(fit_of([0.3, -0.05, 0.0]), 0.1), [0.3, 0, 0])
    np.testing.assert_array_equal(graph.threshold_coefficients([0.3, -0.05, 0.0], 0.0), [0.3, -0.05, 0.0])
    # strict inequality at the boundary
    np.testing.assert_array_equal(graph.threshold_coefficients([0.1], 0.1), [0.0])


def test_negative_tau_rejected():
    with pytest.raises(ValueError):
        graph.threshold_coefficients([0.1], -1.0)


def test_or_and_single_direction():
    B = np.zeros((2, 2))
    B[1, 0] = 0.4  # regression of node 1 keeps node 0, not the reverse
    t = graph.threshold_fits(B, 0.1)
    assert (0, 1) in graph.or_rule_edges(t)
    assert len(graph.and_rule_edges(t)) == 0
    B[0, 1] = -0.2
    assert (0, 1) in graph.and_rule_edges(graph.threshold_fits(B, 0.1))


def test_all_zero_gives_empty():
    assert len(graph.or_rule_edges(graph.threshold_fits(np.zeros((4, 4)), 0.0))) == 0


def test_four_node_cycle_matches_pairwise_oracle():
    B = np.zeros((4, 4))
    for i in range(4):
        B[i, (i + 1) % 4] = 0.5
    for rule in ("or", "and"):
        got = graph.edges_from_fits(B, 0.1, rule).edges
        assert got == pairwise_edges(B, 0.1, rule)
    assert graph.edges_from_fits(B, 0.1).sorted_list() == [[0, 1], [0, 3], [1, 2], [2, 3]]
    assert len(graph.edges_from_fits(B, 0.1, "and")) == 0


def test_unknown_rule():
    with pytest.raises(ValueError):
        graph.edges_from_fits(np.zeros((3, 3)), 0.1, "xor")


def test_kept_dropped_partition():
    rng = np.random.default_rng(0)
    B = rng.standard_normal((5, 5)) * 0.3
    t = graph.threshold_fits(B, 0.2)
    for i in range(5):
        assert t.kept[i] | t.dropped[i] == set(range(5)) - {i}
        assert not (t.kept[i] & t.dropped[i])


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), p=st.integers(2, 9), tau=st.floats(0, 1))
def test_rules_against_oracle(seed, p, tau):
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((p, p)) * (rng.random((p, p)) < 0.4)
    np.fill_diagonal(B, 0.0)
    e_or = graph.edges_from_fits(B, tau, "or")
    e_and = graph.edges_from_fits(B, tau, "and")
    assert e_or.edges == pairwise_edges(B, tau, "or")
    assert e_and.edges == pairwise_edges(B, tau, "and")
    assert e_and.issubset(e_or)
    assert len(e_or) <= int(np.count_nonzero(np.abs(B) > tau))
    # monotone in tau
    assert graph.edges_from_fits(B, tau + 0.1).issubset(e_or)
    assert len(graph.edges_from_fits(B, np.inf)) == 0


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_permutation_relabels_edges(seed):
    rng = np.random.default_rng(seed)
    p = 6
    B = rng.standard_normal((p, p)) * (rng.random((p, p)) < 0.5)
    np.fill_diagonal(B, 0.0)
    perm = rng.permutation(p)
    e = graph.edges_from_fits(B, 0.3)
    e_perm = graph.edges_from_fits(B[np.ix_(perm, perm)], 0.3)
    relabelled = EdgeSet.from_pairs(p, [(perm[i], perm[j]) for i, j in e_perm])
    assert relabelled == e


def test_select_graph_large_tau_empty():
    rng = np.random.default_rng(1)
    data = standardize(DataSet(rng.standard_normal((40, 5))))
    assert len(graph.select_graph(data, 0.05, 10.0)) == 0


def test_select_graph_agrees_with_manual_pipeline():
    sigma, _ = gen_ar1_block(8, 4, 0.7)
    data = sample_gaussian(sigma, 100, 2)
    B = coefficient_matrix(nodewise_regressions(data, 0.1))
    assert graph.select_graph(data, 0.1, 0.05).edges == pairwise_edges(B, 0.05, "or")


@pytest.mark.slow
def test_no_cross_block_edges_ar1_blocks():
    p, n = 20, 320
    sigma, _ = gen_ar1_block(p, 10, 0.9)
    lam, tau = theoretical_parameters(p, n)
    clean = 0
    for seed in range(20):
        e = graph.select_graph(sample_gaussian(sigma, n, seed), lam, tau)
        clean += all((i < 10) == (j < 10) for i, j in e)
    assert clean >= 18

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entrocoup.arimec import PrefixTreePartitionSet, entropy_upper_bound
from entrocoup.partitions import SingletonPartitionSet, imec_encode
from entrocoup.probcore import entropy
from entrocoup.seqmodel import NgramModel, UniformSource

from conftest import BruteForce, coupling_gap, random_evidence, random_order1, random_tree_model


# -- entropy bound -----------------------------------------------------------------


def test_bound_examples():
    assert entropy_upper_bound(1.0, 7) == 0.0
    assert entropy_upper_bound(0.5, 2) == pytest.approx(1.0)
    assert entropy_upper_bound(0.7, 4) == pytest.approx(1.3568, abs=1e-3)
    with pytest.raises(ValueError):
        entropy_upper_bound(0.2, 4)
    with pytest.raises(ValueError):
        entropy_upper_bound(0.5, 1)


def test_bound_is_nonincreasing():
    for kappa in (2, 3, 5, 9):
        qs = np.linspace(1 / kappa, 1.0, 400)
        vals = [entropy_upper_bound(q, kappa) for q in qs]
        assert np.all(np.diff(vals) <= 1e-12)
        assert vals[0] == pytest.approx(math.log2(kappa))


@settings(max_examples=300, deadline=None)
@given(st.integers(2, 8).flatmap(
    lambda k: st.tuples(st.just(k), st.lists(st.floats(0, 1), min_size=1, max_size=k)
                        .filter(lambda v: sum(v) > 1e-6))))
def test_bound_dominates_entropy(args):
    kappa, raw = args
    p = np.array(raw) / sum(raw)
    assert entropy(p) <= entropy_upper_bound(float(p.max()), kappa) + 1e-9


# -- structure ------------------------------------------------------------------------


def test_root_partition_of_fixed_length_messages():
    pset = PrefixTreePartitionSet(UniformSource(3, 2))
    w = pset.posterior_at(())
    np.testing.assert_allclose(w, [1 / 3, 1 / 3, 1 / 3, 0.0, 0.0])
    assert pset.n_blocks == 5 and pset.kappa == 5
    assert pset.block_of((1,), (1, 2)) == 2
    assert pset.block_of((1,), (0, 2)) == pset.NOT_EXTEND
    assert pset.block_of((1, 2), (1, 2)) == pset.EQUAL


def test_eos_blocks():
    model = random_tree_model(np.random.default_rng(0), 3, 3, eos=True)
    pset = PrefixTreePartitionSet(model)
    w = pset.posterior_at(())
    d = model.next_dist(())
    np.testing.assert_allclose(w, [d[0], d[1], 0.0, d[2]])
    assert sum(pset.element_prior(x) for x in pset.elements()) == pytest.approx(1.0)


def test_depth_one_tree_matches_tabular(rng):
    for seed in range(20):
        cover = random_order1(rng, 3, 6)
        x = seed % 2
        a = imec_encode(PrefixTreePartitionSet(UniformSource(2, 1)), cover, (x,), 6, seed=seed)
        b = imec_encode(SingletonPartitionSet(2), cover, x, 6, seed=seed)
        assert a == b


def test_complement_propagation_example():
    pset = PrefixTreePartitionSet(UniformSource(2, 2))
    np.testing.assert_allclose(pset.posterior_at((0,)), [0.25, 0.25, 0.5, 0.0])
    pset.walk_to(())
    pset.update((), [0.4, 0.6, 0.0, 0.0])
    np.testing.assert_allclose(pset.posterior_at((0,)), [0.2, 0.2, 0.6, 0.0], atol=1e-15)


def test_no_new_evidence_leaves_neighbour_unchanged():
    pset = PrefixTreePartitionSet(UniformSource(2, 2))
    before = pset.posterior_at((1,))
    pset.walk_to(())
    pset.update((), [0.5, 0.5, 0.0, 0.0])
    np.testing.assert_array_equal(pset.posterior_at((1,)), before)


def test_only_visited_prefixes_materialize():
    pset = PrefixTreePartitionSet(UniformSource(4, 6))
    assert pset.n_materialized == 1
    pset.posterior_at((1, 2, 3))
    assert pset.n_materialized == 4


def test_stale_partition_rejected():
    pset = PrefixTreePartitionSet(UniformSource(2, 2))
    pset.walk_to((0,))
    pset.walk_to(())
    pset.update((), [0.5, 0.5, 0.0, 0.0])
    with pytest.raises(RuntimeError):
        pset.block_posterior((0,))
    with pytest.raises(RuntimeError):
        pset.update((0,), [0.1, 0.1, 0.8, 0.0])


# -- lazy posterior propagation vs brute force ------------------------------------------


@pytest.mark.parametrize("V, L, eos", [(2, 6, False), (3, 4, True), (4, 3, False), (3, 5, True)])
def test_lazy_posteriors_match_bayes(rng, V, L, eos):
    for _ in range(5):
        pset = PrefixTreePartitionSet(random_tree_model(rng, V, L, eos))
        oracle = BruteForce(pset)
        assert len(oracle.nodes) <= 200
        random_evidence(rng, pset, oracle, 15)
        for v in rng.permutation(len(oracle.nodes))[:60]:
            v = oracle.nodes[v]
            np.testing.assert_allclose(pset.posterior_at(v), oracle.blocks(v), atol=1e-9)


def test_complement_identity_and_zero_persistence(rng):
    pset = PrefixTreePartitionSet(random_tree_model(rng, 3, 4, False))
    oracle = BruteForce(pset)
    random_evidence(rng, pset, oracle, 20)
    zero_before = {}
    for v in oracle.nodes:
        zero_before[v] = pset.posterior_at(v) == 0
    for v in oracle.nodes:
        w = pset.posterior_at(v)
        assert abs(w.sum() - 1) < 1e-9
        if v == ():
            assert w[pset.NOT_EXTEND] == 0.0
        if v:
            parent = pset.posterior_at(v[:-1])
            w = pset.posterior_at(v)
            k = pset.child_symbols.index(v[-1])
            assert parent[k] + w[pset.NOT_EXTEND] == pytest.approx(1.0, abs=1e-9)
    random_evidence(rng, pset, oracle, 10)
    for v in oracle.nodes:
        assert np.all(pset.posterior_at(v)[zero_before[v]] == 0)


# -- search ---------------------------------------------------------------------------------


@pytest.mark.parametrize("V, L, eos", [(2, 7, False), (3, 5, False), (4, 4, True), (3, 6, True)])
def test_search_finds_global_maximum(rng, V, L, eos):
    for _ in range(6):
        pset = PrefixTreePartitionSet(random_tree_model(rng, V, L, eos), record_pruning=True)
        oracle = BruteForce(pset)
        assert len(oracle.nodes) <= 500
        random_evidence(rng, pset, oracle, int(rng.integers(0, 12)))
        stats = pset.search()
        ent = oracle.entropies()
        assert ent[stats.selected] >= max(ent.values()) - 1e-9
        for u, nb, bound in stats.pruned:
            region = [w for w in oracle.nodes if w[: len(nb)] == nb] if len(nb) > len(u) else \
                [w for w in oracle.nodes if w[: len(u)] != u]
            assert max(ent[w] for w in region) <= bound + 1e-9


def test_search_returns_split_node():
    table = {(): np.array([1.0, 0, 0, 0])}
    for s in range(4):
        table[(s,)] = np.full(4, 0.25)
    pset = PrefixTreePartitionSet(NgramModel(1, list("abcd"), table, None, 2))
    assert pset.select() == (0,)


def test_search_on_point_mass_has_zero_entropy():
    table = {(): np.array([0.0, 1.0])}
    table[(0,)] = np.array([1.0, 0.0])
    table[(1,)] = np.array([1.0, 0.0])
    pset = PrefixTreePartitionSet(NgramModel(1, list("ab"), table, None, 3))
    key = pset.select()
    assert entropy(pset.block_posterior(key)) == 0.0
    assert key == ()


def test_search_log_records_touch_counts():
    pset = PrefixTreePartitionSet(UniformSource(3, 4))
    pset.select()
    assert pset.search_log[-1].touched >= 1
    assert pset.search_log[-1].materialized == pset.n_materialized


def test_working_prefix_backtracks():
    pset = PrefixTreePartitionSet(UniformSource(2, 3))
    keys = []
    for lam in ([100, 1, 1, 1], [100, 1, 1, 1], [1, 1, 1000, 1]):
        k = pset.select()
        keys.append(k)
        pset.update(k, pset.block_posterior(k) * lam)
    assert keys == [(0,), (0, 0), (0, 0)]
    k = pset.select()
    assert len(k) < 2 and k == (0,)


# -- MAP --------------------------------------------------------------------------------------


def test_wide_beam_map_is_exact(rng):
    for _ in range(10):
        pset = PrefixTreePartitionSet(random_tree_model(rng, 3, 4, True))
        oracle = BruteForce(pset)
        random_evidence(rng, pset, oracle, 8)
        best = oracle.xs[int(np.argmax(oracle.post))]
        got = pset.map_estimate(beam=1000)
        assert oracle.post[oracle.xs.index(got)] == pytest.approx(oracle.post.max(), abs=1e-12)
        assert pset.element_posterior(best) == pytest.approx(oracle.post.max(), abs=1e-9)


def test_greedy_map_on_concentrated_posterior():
    pset = PrefixTreePartitionSet(UniformSource(2, 3))
    oracle = BruteForce(pset)
    for v in [(), (1,), (1, 0)]:
        w = pset.posterior_at(v)
        lam = np.full(4, 1e-3)
        lam[pset.block_of(v, (1, 0, 1))] = 1.0
        pset.update(v, w * lam)
        oracle.apply(v, lam)
    assert pset.map_estimate() == (1, 0, 1)


# -- coupling property at small scale --------------------------------------------------------


@pytest.mark.parametrize("merge", [False, True])
def test_prefix_tree_imec_is_a_coupling(rng, merge):
    for _ in range(10):
        prior = random_tree_model(rng, 3, 3, True)
        cover = random_order1(rng, 3, 3)
        assert coupling_gap(PrefixTreePartitionSet(prior), cover, 3, merge) < 1e-7


def test_uniform_bits_agree_with_factored_marginals(rng):
    from entrocoup.partitions import FactoredPartitionSet, enumerate_joint
    cover = random_order1(rng, 3, 3)
    a_x, a = enumerate_joint(PrefixTreePartitionSet(UniformSource(2, 3)), cover, 3)
    f_x, f = enumerate_joint(FactoredPartitionSet([[0.5, 0.5]] * 3), cover, 3)
    assert [tuple(x) for x in a_x] == [tuple(x) for x in f_x]
    for y in itertools.product(range(3), repeat=3):
        pa = a.get(y, np.zeros(8))
        pf = f.get(y, np.zeros(8))
        assert pa.mean() == pytest.approx(pf.mean(), abs=1e-12)

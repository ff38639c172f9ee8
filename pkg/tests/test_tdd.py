import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from randcirc import random_circuit, random_order
from tddsim import (
    ArenaExhausted, ComputedCache, Engine, GateKind, IndexId, TERMINAL, Tensor,
    ZERO, build_network, contract_network_dense, contract_pair_dense, example_circuit,
    data_path, gate_tensor, generate, index_levels, oracle_statevector, order_greedy,
    order_sequential, parse_rqc, tetris_simplify,
)
from tddsim.tdd import Tdd

SQ2 = 1 / math.sqrt(2)
H = np.array([[1, 1], [1, -1]]) * SQ2


def idx(n, tag="x"):
    return [IndexId.fresh(f"{tag}{k}") for k in range(n)]


def levels_of(indices):
    return {i: k for k, i in enumerate(indices)}


def rand_data(rng, rank, sparse=False):
    shape = (2,) * rank
    data = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    if sparse:
        # zeros and repeated values exercise the reduction rules
        data = np.where(rng.random(shape) < 0.3, 0, data)
        data = np.where(rng.random(shape) < 0.3, 0.5 - 0.5j, data)
    return data


def reachable(root_node):
    seen, stack = set(), [root_node]
    while stack:
        n = stack.pop()
        if n is TERMINAL or n.uid in seen:
            continue
        seen.add(n.uid)
        stack += [n.n0, n.n1]
    return seen


# -- make_node ---------------------------------------------------------------

def test_redundant_node_is_not_created():
    e = Engine()
    edge = e.make_node(0, (SQ2, TERMINAL), (SQ2, TERMINAL))
    assert edge[1] is TERMINAL
    assert edge[0] == pytest.approx(SQ2)
    assert len(e) == 0


def test_normalization_extracts_the_larger_weight():
    e = Engine()
    basis = e.make_node(1, (1, TERMINAL), (0, TERMINAL))
    w, node = e.make_node(0, (SQ2, TERMINAL), (-SQ2, basis[1]))
    assert w == pytest.approx(SQ2)
    assert (node.w0, node.w1) == (1, -1)


def test_larger_high_weight_is_divided_out():
    e = Engine()
    w, node = e.make_node(0, (0.5, TERMINAL), (2j, TERMINAL))
    assert w == pytest.approx(2j)
    assert node.w1 == 1 and node.w0 == pytest.approx(-0.25j)


def test_both_zero_is_the_zero_edge():
    assert Engine().make_node(3, ZERO, (0j, TERMINAL)) == ZERO


def test_hash_consing_returns_the_same_node():
    e = Engine()
    a = e.make_node(0, (1, TERMINAL), (-1, TERMINAL))
    b = e.make_node(0, (3, TERMINAL), (-3, TERMINAL))
    assert a[1] is b[1]
    assert len(e) == 1
    assert e.unique_hits == 1 and e.unique_misses == 1


# -- tensor_to_tdd / tdd_to_tensor -----------------------------------------

def h_tensor_h():
    x0, y0, x1, y1 = idx(4)
    hh = np.kron(H, H).reshape(2, 2, 2, 2).transpose(0, 2, 1, 3)
    return Tensor([x0, y0, x1, y1], hh), np.kron(H, H)


def test_h_tensor_h_has_four_nodes():
    t, _ = h_tensor_h()
    e = Engine()
    d = e.tensor_to_tdd(t, levels_of(t.indices))
    assert len(e) == 4
    assert d.node_count(terminal=False) == 4
    assert d.weight == pytest.approx(0.5, abs=1e-12)


def test_h_tensor_h_round_trip():
    t, array = h_tensor_h()
    e = Engine()
    back = e.tdd_to_tensor(e.tensor_to_tdd(t, levels_of(t.indices)))
    x0, y0, x1, y1 = t.indices
    # rows (x0 x1), columns (y0 y1)
    assert np.allclose(back.transpose([x0, x1, y0, y1]).data.reshape(4, 4), array, atol=1e-12)


def test_scalar_tensor():
    d = Engine().tensor_to_tdd(Tensor([], np.array(2 - 1j)), {})
    assert d.root == (2 - 1j, TERMINAL)


def test_basis_state():
    (i,) = idx(1)
    d = Engine().tensor_to_tdd(Tensor([i], [1, 0]), {i: 7})
    w, n = d.root
    assert w == 1 and n.level == 7
    assert (n.w0, n.n0, n.w1, n.n1) == (1, TERMINAL, 0, TERMINAL)


def test_zero_edge_expands_to_zeros():
    a, b = idx(2)
    t = Engine().tdd_to_tensor(Tdd(ZERO, (a, b), (0, 1)))
    assert np.array_equal(t.data, np.zeros((2, 2)))


@pytest.mark.parametrize("seed", range(100))
def test_round_trip_random(seed):
    rng = np.random.default_rng(seed)
    rank = int(rng.integers(0, 7))
    ix = idx(rank)
    levels = dict(zip(ix, rng.permutation(rank).tolist()))
    t = Tensor(ix, rand_data(rng, rank, sparse=seed % 2 == 0))
    e = Engine()
    back = e.tdd_to_tensor(e.tensor_to_tdd(t, levels)).transpose(ix)
    assert np.allclose(back.data, t.data, atol=1e-12, rtol=0)


@pytest.mark.parametrize("seed", range(20))
def test_stored_nodes_are_normalized_and_reduced(seed):
    rng = np.random.default_rng(seed)
    e = Engine()
    for _ in range(5):
        ix = idx(5)
        e.tensor_to_tdd(Tensor(ix, rand_data(rng, 5, sparse=True)), levels_of(ix))
    for n in e.table.values():
        assert max(abs(n.w0), abs(n.w1)) == pytest.approx(1, abs=1e-12)
        assert not (n.n0 is n.n1 and n.w0 == n.w1)
        assert n.n0.level > n.level and n.n1.level > n.level
        if n.w0 == 0:
            assert n.n0 is TERMINAL
        if n.w1 == 0:
            assert n.n1 is TERMINAL


@pytest.mark.parametrize("seed", range(20))
def test_conversion_is_canonical(seed):
    rng = np.random.default_rng(seed)
    ix = idx(5)
    data = rand_data(rng, 5, sparse=True)
    e = Engine()
    a = e.tensor_to_tdd(Tensor(ix, data), levels_of(ix))
    b = e.tensor_to_tdd(Tensor(ix, data * (1 + 1e-15)), levels_of(ix))
    assert a.node is b.node
    assert a.weight == pytest.approx(b.weight, abs=1e-12)


# -- contraction -------------------------------------------------------------

def test_h_on_zero():
    e = Engine()
    h = gate_tensor(GateKind("H"))
    i, j = h.indices
    lv = {i: 0, j: 1}
    out = e.contract(e.tensor_to_tdd(h, lv), e.tensor_to_tdd(Tensor([i], [1, 0]), lv))
    assert out.indices == (j,)
    assert np.allclose(e.tdd_to_tensor(out).data, [SQ2, SQ2])


def test_operand_without_a_node_at_a_level_is_reused():
    # the gate owns the top level; the state has no node there and feeds both branches
    e = Engine()
    a, b = idx(2)
    lv = {a: 0, b: 1}
    state = Tensor([b], [0.6, 0.8j])
    gate = Tensor([a, b], [[1, 2], [3, 4]])
    s, g = e.tensor_to_tdd(state, lv), e.tensor_to_tdd(gate, lv)
    assert s.node.level == 1 and g.node.level == 0
    out = e.contract(s, g)
    assert out.indices == (a,)
    assert np.allclose(e.tdd_to_tensor(out).data, gate.data @ state.data)


@pytest.mark.parametrize("seed", range(200))
def test_contract_matches_dense(seed):
    rng = np.random.default_rng(seed)
    pool = idx(8)
    ra, rb = int(rng.integers(0, 6)), int(rng.integers(0, 6))
    ia = list(rng.choice(8, ra, replace=False))
    ib = list(rng.choice(8, rb, replace=False))
    ta = Tensor([pool[k] for k in ia], rand_data(rng, ra, sparse=seed % 3 == 0))
    tb = Tensor([pool[k] for k in ib], rand_data(rng, rb, sparse=seed % 3 == 1))
    common = sorted(set(ia) & set(ib))
    keep = {pool[k] for k in common if rng.random() < 0.3}
    lv = dict(zip(pool, rng.permutation(8).tolist()))
    e = Engine()
    got = e.tdd_to_tensor(e.contract(e.tensor_to_tdd(ta, lv), e.tensor_to_tdd(tb, lv), keep))
    ref = contract_pair_dense(ta, tb, keep)
    assert set(got.indices) == set(ref.indices)
    assert np.allclose(got.transpose(ref.indices).data, ref.data, atol=1e-10, rtol=0)


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_terminal_factor(k):
    e = Engine()
    ix = idx(k)
    lv = levels_of(ix)
    a = e.tensor_to_tdd(Tensor(ix, np.full((2,) * k, 1.5)), lv)
    b = e.tensor_to_tdd(Tensor(ix, np.full((2,) * k, -2j)), lv)
    assert a.node is TERMINAL and b.node is TERMINAL
    out = e.contract(a, b)
    assert out.indices == ()
    assert out.root[1] is TERMINAL
    assert out.weight == pytest.approx(1.5 * -2j * 2 ** k)


# -- addition ----------------------------------------------------------------

def test_add_zero_is_identity():
    e = Engine()
    ix = idx(3)
    d = e.tensor_to_tdd(Tensor(ix, rand_data(np.random.default_rng(0), 3)), levels_of(ix))
    assert e.add(d.root, ZERO) == d.root
    assert e.add(ZERO, d.root) == d.root


def test_add_negation_is_zero():
    e = Engine()
    ix = idx(4)
    v = rand_data(np.random.default_rng(1), 4)
    a = e.tensor_to_tdd(Tensor(ix, v), levels_of(ix))
    b = e.tensor_to_tdd(Tensor(ix, -v), levels_of(ix))
    assert e.add(a.root, b.root) == ZERO


@pytest.mark.parametrize("seed", range(50))
def test_add_matches_dense(seed):
    rng = np.random.default_rng(seed)
    rank = int(rng.integers(0, 7))
    ix = idx(rank)
    lv = levels_of(ix)
    va, vb = rand_data(rng, rank, sparse=True), rand_data(rng, rank, sparse=True)
    e = Engine()
    a, b = e.tensor_to_tdd(Tensor(ix, va), lv), e.tensor_to_tdd(Tensor(ix, vb), lv)
    # give both operands the full index list so the sum is read back over it
    s = e.tdd_to_tensor(Tdd(e.add(a.root, b.root), tuple(ix), tuple(range(rank))))
    assert np.allclose(s.data, va + vb, atol=1e-12, rtol=0)


# -- networks ----------------------------------------------------------------

def test_single_tensor_network_is_unchanged():
    (i,) = idx(1)
    from tddsim import TensorNetwork
    net = TensorNetwork([Tensor([i], [0.6, 0.8])], [i])
    e = Engine()
    d = e.contract_network(net, order_sequential(net))
    assert np.allclose(e.tdd_to_tensor(d).data, [0.6, 0.8])


@pytest.mark.parametrize("n", [2, 5, 10])
def test_ghz_node_count_and_amplitudes(n):
    c = generate("ghz", n)
    net = build_network(c)
    e = Engine()
    d = e.contract_network(net, order_sequential(net))
    assert d.node_count() == 2 * n
    outs = net.open_indices
    zeros = {i: 0 for i in outs}
    assert e.amplitude(d, zeros) == pytest.approx(SQ2, abs=1e-12)
    last_one = dict(zeros)
    last_one[outs[-1]] = 1
    assert e.amplitude(d, last_one) == 0
    ref = oracle_statevector(c)
    assert e.amplitude(d, {i: 1 for i in outs}) == pytest.approx(ref["1" * n], abs=1e-12)


def test_amplitude_of_zero_edge():
    a, b = idx(2)
    assert Engine().amplitude(Tdd(ZERO, (a, b), (0, 1)), {a: 1, b: 0}) == 0


def test_amplitude_needs_every_index():
    t, _ = h_tensor_h()
    e = Engine()
    d = e.tensor_to_tdd(t, levels_of(t.indices))
    with pytest.raises(KeyError):
        e.amplitude(d, {t.indices[0]: 0})


@pytest.mark.parametrize("seed", range(10))
def test_networks_match_dense_in_every_order(seed):
    rng = np.random.default_rng(seed)
    c = random_circuit(rng, max_qubits=7, max_depth=10)
    full = build_network(c)
    ref = contract_network_dense(full, order_greedy(full)).data
    for scheme in ("appearance", "interleaved"):
        lv = index_levels(full, scheme)
        e = Engine()
        roots = set()
        for net in (full, tetris_simplify(c, full)):
            for order in (order_sequential(net), order_greedy(net), random_order(rng, net)):
                d = e.contract_network(net, order, lv)
                assert np.allclose(e.result_tensor(d, net).data, ref, atol=1e-10)
                roots.add(d.node.uid)
        assert len(roots) == 1


def test_index_level_schemes():
    net = build_network(example_circuit())
    app = index_levels(net, "appearance")
    inter = index_levels(net, "interleaved")
    assert sorted(app.values()) == sorted(inter.values()) == list(range(len(app)))
    # appearance puts the open outputs last
    assert sorted(app[i] for i in net.outputs) == list(range(len(app) - 4, len(app)))
    # interleaved groups each qubit line together
    qubit_runs = [i.qubit for i in sorted(inter, key=inter.get)]
    assert qubit_runs == sorted(qubit_runs)
    with pytest.raises(ValueError):
        index_levels(net, "random")


# -- garbage collection and caches --------------------------------------------

def test_gc_reclaims_operands():
    e = Engine()
    rng = np.random.default_rng(4)
    a, b, c = idx(3)
    lv = levels_of([a, b, c])
    x = e.tensor_to_tdd(Tensor([a, b], rand_data(rng, 2)), lv)
    y = e.tensor_to_tdd(Tensor([b, c], rand_data(rng, 2)), lv)
    e.inc_ref(x.root)
    e.inc_ref(y.root)
    assert e.garbage_collection() == 0
    z = e.contract(x, y)
    e.inc_ref(z.root)
    e.dec_ref(x.root)
    e.dec_ref(y.root)
    e.garbage_collection()
    assert {n.uid for n in e.table.values()} == reachable(z.node)


def test_gc_keeps_only_what_the_kept_root_reaches():
    e = Engine()
    rng = np.random.default_rng(5)
    ix = idx(6)
    lv = levels_of(ix)
    kept = None
    for k in range(1000):
        d = e.tensor_to_tdd(Tensor(ix, rand_data(rng, 6, sparse=True)), lv)
        if k == 500:
            kept = d
            e.inc_ref(d.root)
    before = e.tdd_to_tensor(kept).data
    e.garbage_collection()
    assert {n.uid for n in e.table.values()} == reachable(kept.node)
    assert np.array_equal(e.tdd_to_tensor(kept).data, before)
    assert e.gc_runs == 1 and e.gc_reclaimed > 0


def test_gc_clears_caches():
    e = Engine(cache_bits=4)
    e.contract_cache.store(("k",), ZERO)
    e.garbage_collection()
    assert e.contract_cache.lookup(("k",)) is None


def test_gc_does_not_change_results():
    c = parse_rqc(open(data_path("inst_2x3_16_1.txt")).read())
    full = build_network(c)
    net = tetris_simplify(c, full)
    lv = index_levels(full, "interleaved")
    plain = Engine()
    a = plain.contract_network(net, order_sequential(net), lv)
    tight = Engine(gc_limit=16)
    b = tight.contract_network(net, order_sequential(net), lv)
    assert tight.gc_runs > 0 and plain.gc_runs == 0
    assert np.array_equal(plain.result_tensor(a, net).data, tight.result_tensor(b, net).data)


def test_cache_transparency():
    c = random_circuit(np.random.default_rng(12), max_qubits=8, max_depth=15)
    full = build_network(c)
    net = tetris_simplify(c, full)
    lv = index_levels(full, "interleaved")
    e = Engine()
    a = e.contract_network(net, order_greedy(net), lv)
    e.contract_cache.clear()
    e.add_cache.clear()
    e.contract_cache.enabled = e.add_cache.enabled = False
    hits = (e.contract_cache.hits, e.add_cache.hits)
    b = e.contract_network(net, order_greedy(net), lv)
    assert (e.contract_cache.hits, e.add_cache.hits) == hits
    assert a.node is b.node and a.weight == b.weight
    cold = Engine(use_cache=False)
    d = cold.contract_network(net, order_greedy(net), lv)
    assert np.array_equal(cold.result_tensor(d, net).data, e.result_tensor(a, net).data)


def test_computed_cache_is_direct_mapped():
    cache = ComputedCache(bits=3)
    assert len(cache) == 8
    cache.store((1, 2), "a")
    assert cache.lookup((1, 2)) == "a"
    for k in range(100):
        cache.store((k, k), k)
    assert len(cache.slots) == 8
    assert cache.hits + cache.misses == 1
    off = ComputedCache(bits=3, enabled=False)
    off.store((1, 2), "a")
    assert off.lookup((1, 2)) is None


def test_node_cap_raises_with_stats():
    net = build_network(generate("qft", 6))
    with pytest.raises(ArenaExhausted) as err:
        Engine(max_nodes=50).contract_network(net, order_greedy(net))
    assert err.value.stats.current_nodes == 50


# -- stats ---------------------------------------------------------------------

def test_fresh_engine_stats_are_zero():
    s = Engine().stats()
    assert all(v == 0 for v in vars(s).values())
    assert s.unique_hit_rate == s.contract_hit_rate == s.add_hit_rate == 0


def test_stats_are_self_consistent():
    c = parse_rqc(open(data_path("inst_3x3_12_0.txt")).read())
    net = tetris_simplify(c)
    e = Engine(gc_limit=200)
    d = e.contract_network(net, order_sequential(net))
    s = e.stats(d)
    assert s.unique_misses == s.current_nodes + s.gc_reclaimed
    assert s.peak_nodes >= s.current_nodes >= s.final_nodes - 1
    assert s.contract_hits + s.contract_misses <= s.recursive_calls
    assert s.add_hits + s.add_misses <= s.recursive_calls
    for rate in (s.unique_hit_rate, s.contract_hit_rate, s.add_hit_rate):
        assert 0 < rate < 1
    fields = json.loads(s.to_json())
    for name in ("unique_hits", "unique_misses", "contract_hits", "contract_misses",
                 "add_hits", "add_misses", "peak_nodes", "final_nodes", "gc_runs",
                 "complex_muls", "complex_adds"):
        assert name in fields


def test_dot_export_styles_edges():
    t, _ = h_tensor_h()
    e = Engine()
    dot = e.to_dot(e.tensor_to_tdd(t, levels_of(t.indices)))
    assert dot.startswith("digraph")
    assert "color=red, style=dashed" in dot and "color=blue" in dot
    assert dot.count("shape=circle") == 4


@settings(max_examples=60, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
                min_size=8, max_size=8))
def test_round_trip_property(values):
    ix = idx(3)
    data = np.array(values).reshape(2, 2, 2)
    e = Engine()
    back = e.tdd_to_tensor(e.tensor_to_tdd(Tensor(ix, data), levels_of(ix)))
    # weights relative to a node's larger one are interned on a 1e-11 grid
    scale = max(1.0, float(np.abs(data).max()))
    assert np.allclose(back.data, data, atol=1e-11 * scale, rtol=0)

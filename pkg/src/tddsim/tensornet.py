"""Dense tensors, hyper-edge-aware tensor networks, Tetris rank simplification
and contraction orders.

Every index has dimension 2. A diagonal gate reuses the index of each qubit
line it touches instead of introducing a new one, so that index becomes a
hyper-edge shared by more than two tensors. Pairwise contraction sums an index
only once no other tensor (and no open leg) references it.
"""
from __future__ import annotations

import itertools
import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit, gate_tensor

__all__ = [
    "IndexId", "Tensor", "TensorNetwork", "ContractionOrder", "OrderError",
    "build_network", "contract_pair_dense", "tetris_simplify", "TetrisStats",
    "order_sequential", "order_greedy", "order_import", "order_cost",
    "contract_network_dense",
]

_ids = itertools.count()


@dataclass(frozen=True, order=True)
class IndexId:
    id: int
    label: str = field(default="", compare=False)
    qubit: int = field(default=-1, compare=False)

    @classmethod
    def fresh(cls, label="", qubit=-1):
        return cls(next(_ids), label, qubit)

    # hot in every set/dict of indices; the generated versions build tuples
    def __hash__(self):
        return self.id

    def __eq__(self, other):
        return self is other or (isinstance(other, IndexId) and self.id == other.id)

    def __repr__(self):
        return self.label or f"#{self.id}"


class Tensor:
    """Dense complex tensor over distinct binary indices (row-major)."""

    __slots__ = ("indices", "data")

    def __init__(self, indices, data):
        self.indices = tuple(indices)
        data = np.asarray(data, dtype=complex)
        if data.size != 2 ** len(self.indices):
            raise ValueError(f"{data.size} values do not fit rank {len(self.indices)}")
        if len(set(self.indices)) != len(self.indices):
            raise ValueError(f"duplicate index in {self.indices}")
        self.data = data.reshape((2,) * len(self.indices))

    @property
    def rank(self) -> int:
        return len(self.indices)

    def transpose(self, indices) -> "Tensor":
        """Reorder axes to `indices` (a permutation of this tensor's indices)."""
        indices = tuple(indices)
        if indices == self.indices:
            return self
        perm = [self.indices.index(i) for i in indices]
        return Tensor(indices, self.data.transpose(perm))

    def __repr__(self):
        return f"Tensor({list(self.indices)}, rank={self.rank})"


@dataclass
class TensorNetwork:
    tensors: list[Tensor]
    open_indices: list[IndexId]
    num_qubits: int = 0
    mode: str = "state"
    # per-qubit open legs; inputs only in unitary mode
    inputs: list[IndexId] = field(default_factory=list)
    outputs: list[IndexId] = field(default_factory=list)
    # qubit lines each tensor sits on, parallel to `tensors`
    lines: list[tuple[int, ...]] = field(default_factory=list)
    num_states: int = 0

    @property
    def index_refcount(self) -> Counter:
        return Counter(i for t in self.tensors for i in t.indices)

    @property
    def shared_indices(self) -> set[IndexId]:
        opened = set(self.open_indices)
        return {i for i, c in self.index_refcount.items() if c >= 2 and i not in opened}

    def all_indices(self) -> list[IndexId]:
        seen = dict.fromkeys(i for t in self.tensors for i in t.indices)
        seen.update(dict.fromkeys(self.open_indices))
        return list(seen)

    def dump(self) -> str:
        """Debug JSON: each tensor's index labels and rank."""
        return json.dumps({
            "open_indices": [repr(i) for i in self.open_indices],
            "tensors": [{"indices": [repr(i) for i in t.indices], "rank": t.rank}
                        for t in self.tensors],
        }, indent=1)


def build_network(circuit: Circuit, hyper: bool = True) -> TensorNetwork:
    """Translate a circuit into a tensor network.

    State mode prepends a ``(1, 0)`` tensor per qubit; unitary mode leaves the
    inputs open. With `hyper`, diagonal gates sit on the existing index of each
    qubit line. Index ids increase in order of first appearance, qubit-major
    within a layer.
    """
    n = circuit.num_qubits
    counters = [0] * n

    def new_index(q):
        idx = IndexId.fresh(f"q{q}_{counters[q]}", q)
        counters[q] += 1
        return idx

    tensors, lines = [], []
    current = [new_index(q) for q in range(n)]
    inputs = []
    if circuit.mode == "state":
        for q in range(n):
            tensors.append(Tensor([current[q]], [1, 0]))
            lines.append((q,))
    else:
        inputs = list(current)
    num_states = len(tensors)
    for layer in circuit.layers:
        for g in sorted(layer, key=lambda g: min(g.qubits)):
            ins = [current[q] for q in g.qubits]
            if hyper and g.kind.diagonal:
                idx = ins
            else:
                outs = [new_index(q) for q in g.qubits]
                for q, o in zip(g.qubits, outs):
                    current[q] = o
                idx = ins + outs
            tensors.append(gate_tensor(g.kind, hyper, idx))
            lines.append(g.qubits)
    outputs = list(current)
    opened = list(dict.fromkeys(inputs + outputs))
    return TensorNetwork(tensors, opened, n, circuit.mode, inputs, outputs, lines, num_states)


def _letters(*index_lists):
    table = {}
    for lst in index_lists:
        for i in lst:
            table.setdefault(i, len(table))
    return table


def contract_pair_dense(a: Tensor, b: Tensor, still_referenced=frozenset()) -> Tensor:
    """Contract two dense tensors.

    Indices shared by `a` and `b` are summed unless they are in
    `still_referenced` (open indices and hyper-edges used by other tensors
    belong there); surviving shared indices appear once in the result. Result
    order: `a`'s surviving indices, then `b`'s new ones.
    """
    common = set(a.indices) & set(b.indices)
    summed = {i for i in common if i not in still_referenced}
    out = [i for i in a.indices if i not in summed]
    out += [i for i in b.indices if i not in common]
    if len(out) + len(summed) > 52:
        raise ValueError("too many distinct indices for a dense pairwise contraction")
    letter = _letters(a.indices, b.indices)
    data = np.einsum(a.data, [letter[i] for i in a.indices],
                     b.data, [letter[i] for i in b.indices],
                     [letter[i] for i in out])
    return Tensor(out, data)


# --------------------------------------------------------------------------
# Tetris

class _Block:
    __slots__ = ("tensor", "qubits", "mergeable", "ngates")

    def __init__(self, tensor, qubits, mergeable=True, ngates=1):
        self.tensor = tensor
        self.qubits = tuple(qubits)
        self.mergeable = mergeable
        self.ngates = ngates


@dataclass
class TetrisStats:
    gates_in: int = 0
    tensors_out: int = 0
    merges: int = 0
    stack_ops: int = 0
    max_rank: int = 0


def tetris_simplify(circuit: Circuit, net: TensorNetwork | None = None, *,
                    hyper: bool = True, constraint: str = "max",
                    absorb_states: bool = False, stats: TetrisStats | None = None
                    ) -> TensorNetwork:
    """Consolidate gate tensors along qubit lines with one pass over the layers.

    Each qubit keeps a stack of consolidated tensors. A gate is contracted into
    the stack tops of its qubits when the result rank stays within the rank
    budget, otherwise it is pushed. The budget is the largest (``max``) or
    smallest (``min``) rank among the gate and the tops involved; a gate counts
    with its unmerged rank, two legs per qubit. If all tops together exceed it,
    each single top is tried in qubit order.

    State tensors sit at the bottom of the stacks and only take part in merges
    when `absorb_states` is set. The result lists tensors popped from the stack
    bottoms, layer by layer.
    """
    if constraint not in ("max", "min"):
        raise ValueError(f"unknown Tetris constraint {constraint!r}")
    if net is None:
        net = build_network(circuit, hyper)
    if stats is None:
        stats = TetrisStats()
    n = net.num_qubits
    opened = set(net.open_indices)
    refs = net.index_refcount
    stacks: list[list[_Block]] = [[] for _ in range(n)]

    for k in range(net.num_states):
        q = net.lines[k][0]
        stacks[q].append(_Block(net.tensors[k], (q,), absorb_states, 0))
        stats.stack_ops += 1

    def top_everywhere(blk):
        return all(stacks[q][-1] is blk for q in blk.qubits)

    def result_rank(tensors):
        cnt = Counter(i for t in tensors for i in t.indices)
        return sum(1 for i, c in cnt.items() if c < refs[i] or i in opened)

    combine = max if constraint == "max" else min
    for k in range(net.num_states, len(net.tensors)):
        gate, gq = net.tensors[k], net.lines[k]
        stats.gates_in += 1
        tops = []
        for q in gq:
            if stacks[q]:
                blk = stacks[q][-1]
                if blk.mergeable and blk not in tops and top_everywhere(blk) \
                        and set(blk.tensor.indices) & set(gate.indices):
                    tops.append(blk)
        groups = [tops] if tops else []
        if len(tops) > 1:
            groups += [[t] for t in tops]
        chosen = None
        for group in groups:
            r = result_rank([gate] + [b.tensor for b in group])
            budget = combine([2 * len(gq)] + [b.tensor.rank for b in group])
            if r <= budget:
                chosen = group
                break
        if chosen is None:
            blk = _Block(gate, gq)
            for q in gq:
                stacks[q].append(blk)
                stats.stack_ops += 1
            continue

        acc = gate
        for b in chosen:
            t = b.tensor
            refs.subtract(acc.indices)
            refs.subtract(t.indices)
            keep = {i for i in set(acc.indices) & set(t.indices) if refs[i] > 0 or i in opened}
            acc = contract_pair_dense(t, acc, keep)
            refs.update(acc.indices)
        assert acc.rank <= budget, "Tetris rank budget violated"
        qubits = tuple(sorted(set(gq).union(*(b.qubits for b in chosen))))
        merged = _Block(acc, qubits, True, 1 + sum(b.ngates for b in chosen))
        for q in qubits:
            if stacks[q] and stacks[q][-1] in chosen:
                stacks[q][-1] = merged
            else:
                stacks[q].append(merged)
            stats.stack_ops += 1
        stats.merges += 1
        stats.max_rank = max(stats.max_rank, acc.rank)

    # pop bottoms; a block leaves once it is the bottom of all its stacks
    out_tensors, out_lines, states = [], [], 0
    pos = [0] * n
    remaining = sum(len(s) for s in stacks)
    while remaining:
        bottoms = {q: stacks[q][pos[q]] for q in range(n) if pos[q] < len(stacks[q])}
        ready = []
        for q, blk in bottoms.items():
            if blk not in ready and all(bottoms.get(p) is blk for p in blk.qubits):
                ready.append(blk)
        if not ready:
            raise RuntimeError("Tetris stacks are inconsistent")
        for blk in ready:
            for p in blk.qubits:
                pos[p] += 1
                remaining -= 1
                stats.stack_ops += 1
            out_tensors.append(blk.tensor)
            out_lines.append(blk.qubits)
            states += blk.ngates == 0
    stats.tensors_out = len(out_tensors) - states
    return TensorNetwork(out_tensors, list(net.open_indices), n, net.mode,
                         list(net.inputs), list(net.outputs), out_lines, states)


# --------------------------------------------------------------------------
# Contraction orders

class OrderError(ValueError):
    pass


@dataclass
class ContractionOrder:
    """Pairs of positions into a list that drops both operands and appends the
    result after every step."""

    pairs: list[tuple[int, int]]

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def validate(self, num_tensors: int) -> "ContractionOrder":
        if len(self.pairs) != max(num_tensors - 1, 0):
            raise OrderError(f"order has {len(self.pairs)} pairs, "
                             f"expected {max(num_tensors - 1, 0)} for {num_tensors} tensors")
        size = num_tensors
        for step, (i, j) in enumerate(self.pairs):
            if not (0 <= i < size and 0 <= j < size) or i == j:
                raise OrderError(f"pair {step} ({i}, {j}) is invalid for a list of {size} tensors")
            size -= 1
        return self

    def to_json(self) -> str:
        return json.dumps([list(p) for p in self.pairs])


def _replay(order, items, combine):
    items = list(items)
    for i, j in order:
        a, b = items[i], items[j]
        for k in sorted((i, j), reverse=True):
            del items[k]
        items.append(combine(a, b))
    return items


def order_sequential(net: TensorNetwork) -> ContractionOrder:
    """Left fold in list order: ((t0 t1) t2) t3 ..."""
    t = len(net.tensors)
    if t < 2:
        return ContractionOrder([])
    return ContractionOrder([(0, 1)] + [(0, t - 1 - k) for k in range(1, t - 1)])


def _pair_result(a, b, refs, opened):
    """Surviving indices and the union size for contracting index sets a, b."""
    union = a | b
    out = frozenset(i for i in union
                    if i in opened or refs[i] > (i in a) + (i in b))
    return out, len(union)


def order_greedy(net: TensorNetwork) -> ContractionOrder:
    """Repeatedly contract the index-sharing pair with the smallest
    (result rank, dense FLOPs); disconnected pieces are joined last.

    Ties go to the lowest position pair.
    """
    opened = set(net.open_indices)
    items = [frozenset(t.indices) for t in net.tensors]
    refs = Counter(i for s in items for i in s)
    pairs = []
    while len(items) > 1:
        where: dict[IndexId, list[int]] = {}
        for pos, s in enumerate(items):
            for i in s:
                where.setdefault(i, []).append(pos)
        cands = set()
        for plist in where.values():
            for x, y in itertools.combinations(plist, 2):
                cands.add((x, y))
        if not cands:
            cands = set(itertools.combinations(range(len(items)), 2))
        best = None
        for i, j in sorted(cands):
            out, u = _pair_result(items[i], items[j], refs, opened)
            key = (len(out), u, i, j)
            if best is None or key < best[0]:
                best = (key, out)
        (_, _, i, j), out = best
        pairs.append((i, j))
        refs.subtract(items[i])
        refs.subtract(items[j])
        refs.update(out)
        for k in (j, i):
            del items[k]
        items.append(out)
    return ContractionOrder(pairs)


def order_import(path, net: TensorNetwork) -> ContractionOrder:
    """Load an order from a JSON array of ``[i, j]`` pairs and validate it."""
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise OrderError(f"malformed order file {path}: {exc}") from None
    if not isinstance(raw, list) or not all(
            isinstance(p, list) and len(p) == 2 and all(type(x) is int for x in p) for p in raw):
        raise OrderError(f"{path}: expected a JSON array of [i, j] integer pairs")
    return ContractionOrder([tuple(p) for p in raw]).validate(len(net.tensors))


def order_cost(net: TensorNetwork, order: ContractionOrder) -> dict:
    """Dense cost model: 8 FLOPs per entry of each pairwise index union."""
    order.validate(len(net.tensors))
    opened = set(net.open_indices)
    refs = net.index_refcount
    flops, ranks = 0, []

    def combine(a, b):
        nonlocal flops
        out, u = _pair_result(a, b, refs, opened)
        refs.subtract(a)
        refs.subtract(b)
        refs.update(out)
        flops += 8 * 2 ** u
        ranks.append(len(out))
        return out

    _replay(order, [frozenset(t.indices) for t in net.tensors], combine)
    return {"flops": flops, "ranks": ranks, "max_rank": max(ranks, default=0)}


def contract_network_dense(net: TensorNetwork, order: ContractionOrder | None = None) -> Tensor:
    """Contract with dense pairwise steps; the result is ordered as `open_indices`."""
    if order is None:
        order = order_sequential(net)
    order.validate(len(net.tensors))
    if not net.tensors:
        return _finalize(Tensor([], np.array(1 + 0j)), net)
    opened = set(net.open_indices)
    refs = net.index_refcount

    def combine(a, b):
        refs.subtract(a.indices)
        refs.subtract(b.indices)
        keep = {i for i in set(a.indices) & set(b.indices) if refs[i] > 0 or i in opened}
        c = contract_pair_dense(a, b, keep)
        refs.update(c.indices)
        return c

    (result,) = _replay(order, net.tensors, combine)
    return _finalize(result, net)


def _finalize(t: Tensor, net: TensorNetwork) -> Tensor:
    # indices still present but not open are summed (only arises for dangling legs)
    extra = [i for i in t.indices if i not in set(net.open_indices)]
    if extra:
        keep = [k for k, i in enumerate(t.indices) if i not in extra]
        data = t.data.sum(axis=tuple(k for k, i in enumerate(t.indices) if i in extra))
        t = Tensor([t.indices[k] for k in keep], data)
    missing = [i for i in net.open_indices if i not in t.indices]
    if missing:
        # open legs no tensor touches act as identity-free broadcasts
        t = Tensor(list(t.indices) + missing,
                   np.broadcast_to(t.data[(...,) + (None,) * len(missing)],
                                   t.data.shape + (2,) * len(missing)))
    return t.transpose(net.open_indices)

"""Tensor decision diagrams with an edge-centric recursive core.

An edge is a plain ``(weight, node)`` tuple and is the only thing the
recursive operations pass around; index bookkeeping lives on the :class:`Tdd`
wrapper and is turned into per-level lookup tables once per operation.

Nodes are hash-consed in a single dict that doubles as the node store. Every
node counts the parent edges and root references pointing at it; garbage
collection reaps the zero-count ones. Contraction and addition results are
memoised in fixed-size direct-mapped caches.
"""
from __future__ import annotations

import bisect
import json
import sys
from dataclasses import asdict, dataclass

import numpy as np

from .tensornet import (
    ContractionOrder, IndexId, Tensor, TensorNetwork, _finalize, order_sequential,
)

__all__ = [
    "Node", "TERMINAL", "ZERO", "Tdd", "Engine", "StatsReport", "ArenaExhausted",
    "index_levels",
]

TERMINAL_LEVEL = 1 << 40
_GRID = 1e11           # complex-table cell size is 1/_GRID
_MERGE = 1e-12         # values this close always share a representative
_TIE = 1e-12           # relative magnitude difference treated as a tie


class Node:
    __slots__ = ("level", "w0", "n0", "w1", "n1", "ref", "uid")

    def __init__(self, level, w0, n0, w1, n1, uid):
        self.level = level
        self.w0, self.n0, self.w1, self.n1 = w0, n0, w1, n1
        self.ref = 0
        self.uid = uid

    def __repr__(self):
        if self.level == TERMINAL_LEVEL:
            return "Node(terminal)"
        return f"Node#{self.uid}(level={self.level})"


TERMINAL = Node(TERMINAL_LEVEL, 0j, None, 0j, None, 0)
ZERO = (0j, TERMINAL)
ONE = (1 + 0j, TERMINAL)


class ComplexTable:
    """Tolerance-aware interning of complex weights.

    The first value seen in a grid cell becomes the representative for every
    later value in that cell; the cell around the origin holds zero. A value within ``_MERGE`` of a cell border is
    also registered in the neighbouring cells, so two values closer than
    ``_MERGE`` never end up with different representatives.
    """

    def __init__(self):
        self.cells = {(0, 0): 0j}

    def __len__(self):
        return len(self.cells)

    def __call__(self, w: complex) -> complex:
        re, im = w.real, w.imag
        key = (round(re * _GRID), round(im * _GRID))
        rep = self.cells.get(key)
        if rep is not None:
            return rep
        rs = {key[0], round((re - _MERGE) * _GRID), round((re + _MERGE) * _GRID)}
        ims = {key[1], round((im - _MERGE) * _GRID), round((im + _MERGE) * _GRID)}
        cells = self.cells
        for a in rs:
            for b in ims:
                cells.setdefault((a, b), w)
        return cells[key]


class ArenaExhausted(MemoryError):
    def __init__(self, stats):
        self.stats = stats
        super().__init__(f"node store exhausted: {stats}")


@dataclass
class Tdd:
    """A root edge plus the indices it ranges over, sorted by level."""

    root: tuple
    indices: tuple
    levels: tuple

    @property
    def weight(self) -> complex:
        return self.root[0]

    @property
    def node(self) -> Node:
        return self.root[1]

    def node_count(self, terminal: bool = True) -> int:
        """Distinct nodes reachable from the root (terminal included by default)."""
        seen = set()
        stack = [self.root[1]]
        while stack:
            n = stack.pop()
            if n.uid in seen:
                continue
            seen.add(n.uid)
            if n is not TERMINAL:
                stack.append(n.n0)
                stack.append(n.n1)
        return len(seen) - (0 if terminal else TERMINAL.uid in seen)


@dataclass
class StatsReport:
    unique_hits: int = 0
    unique_misses: int = 0
    contract_hits: int = 0
    contract_misses: int = 0
    add_hits: int = 0
    add_misses: int = 0
    peak_nodes: int = 0
    current_nodes: int = 0
    final_nodes: int = 0
    gc_runs: int = 0
    gc_reclaimed: int = 0
    recursive_calls: int = 0
    complex_muls: int = 0
    complex_adds: int = 0

    @staticmethod
    def _rate(h, m):
        return h / (h + m) if h + m else 0.0

    @property
    def unique_hit_rate(self):
        return self._rate(self.unique_hits, self.unique_misses)

    @property
    def contract_hit_rate(self):
        return self._rate(self.contract_hits, self.contract_misses)

    @property
    def add_hit_rate(self):
        return self._rate(self.add_hits, self.add_misses)

    def to_json(self, **extra) -> str:
        d = asdict(self)
        d.update(unique_hit_rate=self.unique_hit_rate, contract_hit_rate=self.contract_hit_rate,
                 add_hit_rate=self.add_hit_rate)
        d.update(extra)
        return json.dumps(d, indent=1)


class ComputedCache:
    """Direct-mapped memo table: a new entry overwrites whatever shares its slot."""

    def __init__(self, bits=20, enabled=True):
        self.bits = bits
        self.mask = (1 << bits) - 1
        self.enabled = enabled
        self.slots = [None] * (1 << bits)
        self.hits = 0
        self.misses = 0

    def __len__(self):
        return 1 << self.bits

    def lookup(self, key):
        ent = self.slots[hash(key) & self.mask]
        if ent is not None and ent[0] == key:
            self.hits += 1
            return ent[1]
        self.misses += 1
        return None

    def store(self, key, value):
        if self.enabled:
            self.slots[hash(key) & self.mask] = (key, value)

    def clear(self):
        self.slots = [None] * (1 << self.bits)


def index_levels(net: TensorNetwork, scheme: str = "appearance") -> dict:
    """Global index order for a network.

    ``appearance`` levels internal indices by creation order and puts the open
    outputs last, qubit by qubit. ``interleaved`` groups every index by qubit
    line (line 0 first) and orders each line by creation.
    """
    idx = net.all_indices()
    if scheme == "appearance":
        outs = list(dict.fromkeys(i for i in net.outputs if i not in set(net.inputs)))
        tail = set(outs)
        ordered = sorted(i for i in idx if i not in tail) + outs
    elif scheme == "interleaved":
        ordered = sorted(idx, key=lambda i: (i.qubit, i.id))
    else:
        raise ValueError(f"unknown index order {scheme!r}")
    return {i: lvl for lvl, i in enumerate(ordered)}


class Engine:
    """Node store, computed caches and the recursive TDD operations.

    Not thread-safe; use one engine per thread.
    """

    def __init__(self, gc_limit: int = 1 << 22, cache_bits: int = 20,
                 use_cache: bool = True, max_nodes: int | None = None):
        self.gc_limit = gc_limit
        self.max_nodes = max_nodes
        self.table: dict = {}
        self.contract_cache = ComputedCache(cache_bits, use_cache)
        self.add_cache = ComputedCache(cache_bits, use_cache)
        self._uid = 0
        self.unique_hits = 0
        self.unique_misses = 0
        self.peak_nodes = 0
        self.gc_runs = 0
        self.gc_reclaimed = 0
        self.calls = 0
        self.muls = 0
        self.adds = 0
        self._contexts: dict = {}
        self.canon = ComplexTable()
        if sys.getrecursionlimit() < 20000:
            sys.setrecursionlimit(20000)

    # -- node store ----------------------------------------------------------

    def __len__(self):
        return len(self.table)

    def make_node(self, level: int, low: tuple, high: tuple) -> tuple:
        """Normalised, reduced, hash-consed node; returns the edge pointing at it."""
        return self._make(level, low[0], low[1], high[0], high[1])

    def _make(self, level, w0, n0, w1, n1):
        if w0 == 0:
            if w1 == 0:
                return ZERO
            div = w1
            w0, n0, w1 = 0j, TERMINAL, 1 + 0j
        elif w1 == 0:
            div = w0
            w0, w1, n1 = 1 + 0j, 0j, TERMINAL
        else:
            a0, a1 = abs(w0), abs(w1)
            if a1 - a0 > _TIE * a1:
                div = w1
                w0, w1 = self.canon(w0 / w1), 1 + 0j
                if w0 == 0:
                    n0 = TERMINAL
            else:
                div = w0
                w0, w1 = 1 + 0j, self.canon(w1 / w0)
                if w1 == 0:
                    n1 = TERMINAL
        if n0 is n1 and w0 == w1:
            return (div * w0, n0)
        key = (level, n0.uid, w0, n1.uid, w1)
        node = self.table.get(key)
        if node is not None:
            self.unique_hits += 1
            return (div, node)
        self.unique_misses += 1
        if self.max_nodes is not None and len(self.table) >= self.max_nodes:
            raise ArenaExhausted(self.stats())
        self._uid += 1
        node = Node(level, w0, n0, w1, n1, self._uid)
        n0.ref += 1
        n1.ref += 1
        self.table[key] = node
        if len(self.table) > self.peak_nodes:
            self.peak_nodes = len(self.table)
        return (div, node)

    @staticmethod
    def _key(n):
        return (n.level, n.n0.uid, n.w0, n.n1.uid, n.w1)

    def inc_ref(self, edge):
        if edge[1] is not TERMINAL:
            edge[1].ref += 1

    def dec_ref(self, edge):
        n = edge[1]
        if n is not TERMINAL:
            if n.ref <= 0:
                raise RuntimeError(f"reference count underflow on {n}")
            n.ref -= 1

    def garbage_collection(self) -> int:
        """Drop every node no root or live parent references; clears both caches."""
        dead = [n for n in self.table.values() if n.ref == 0]
        reclaimed = 0
        table = self.table
        while dead:
            n = dead.pop()
            del table[self._key(n)]
            reclaimed += 1
            for c in (n.n0, n.n1):
                if c is not TERMINAL:
                    c.ref -= 1
                    if c.ref == 0:
                        dead.append(c)
        self.contract_cache.clear()
        self.add_cache.clear()
        self.gc_runs += 1
        self.gc_reclaimed += reclaimed
        return reclaimed

    # -- conversion ----------------------------------------------------------

    def tensor_to_tdd(self, t: Tensor, levels: dict) -> Tdd:
        """Shannon-expand a dense tensor bottom-up into a reduced diagram."""
        order = sorted(t.indices, key=levels.__getitem__)
        lv = [levels[i] for i in order]
        data = t.transpose(order).data.reshape(-1)
        edges = [((complex(v), TERMINAL) if v != 0 else ZERO) for v in data.tolist()]
        make = self._make
        for lvl in reversed(lv):
            edges = [make(lvl, e0[0], e0[1], e1[0], e1[1])
                     for e0, e1 in zip(edges[0::2], edges[1::2])]
        return Tdd(edges[0], tuple(order), tuple(lv))

    def tdd_to_tensor(self, d: Tdd) -> Tensor:
        levels = d.levels
        r = len(levels)
        memo = {}

        def expand(node, k):
            if k == r:
                return np.ones(())
            key = (node.uid, k)
            hit = memo.get(key)
            if hit is not None:
                return hit
            if node.level == levels[k]:
                lo = expand(node.n0, k + 1) * node.w0
                hi = expand(node.n1, k + 1) * node.w1
                out = np.stack([lo, hi])
            else:
                sub = expand(node, k + 1)
                out = np.stack([sub, sub])
            memo[key] = out
            return out

        w, n = d.root
        data = expand(n, 0) * w if w != 0 else np.zeros((2,) * r, dtype=complex)
        return Tensor(d.indices, data)

    def amplitude(self, d: Tdd, assignment: dict) -> complex:
        """Product of the edge weights along the path picked by `assignment`."""
        missing = [i for i in d.indices if i not in assignment]
        if missing:
            raise KeyError(f"assignment lacks indices {missing}")
        bit = {lvl: assignment[i] for lvl, i in zip(d.levels, d.indices)}
        w, n = d.root
        while n is not TERMINAL and w != 0:
            if bit[n.level]:
                w, n = w * n.w1, n.n1
            else:
                w, n = w * n.w0, n.n0
        return complex(w)

    # -- addition ------------------------------------------------------------

    def add(self, a: tuple, b: tuple) -> tuple:
        """Elementwise sum of two edges over the same global order."""
        return self._add(a[0], a[1], b[0], b[1])

    def _add(self, wa, na, wb, nb):
        self.calls += 1
        if wa == 0:
            return (wb, nb)
        if wb == 0:
            return (wa, na)
        if na is nb:
            self.adds += 1
            w = wa + wb
            if abs(w) <= 1e-12 * max(abs(wa), abs(wb)):
                return ZERO
            return (w, na)
        ratio = wb / wa
        self.muls += 1
        # exact ratio and fixed operand order: a hit must reproduce a recomputation
        # bit for bit, otherwise results would depend on cache and GC history
        key = (na.uid, nb.uid, ratio)
        cache = self.add_cache
        hit = cache.lookup(key)
        if hit is not None:
            self.muls += 1
            return (wa * hit[0], hit[1])
        la, lb = na.level, nb.level
        if la <= lb:
            x = la
            a0w, a0n, a1w, a1n = na.w0, na.n0, na.w1, na.n1
        else:
            x = lb
            a0w = a1w = 1
            a0n = a1n = na
        if lb == x:
            b0w, b0n, b1w, b1n = ratio * nb.w0, nb.n0, ratio * nb.w1, nb.n1
            self.muls += 2
        else:
            b0w = b1w = ratio
            b0n = b1n = nb
        r0 = self._add(a0w, a0n, b0w, b0n)
        r1 = self._add(a1w, a1n, b1w, b1n)
        res = self._make(x, r0[0], r0[1], r1[0], r1[1])
        cache.store(key, res)
        self.muls += 1
        return (wa * res[0], res[1])

    # -- contraction ---------------------------------------------------------

    def contract(self, a: Tdd, b: Tdd, still_referenced=frozenset()) -> Tdd:
        """Contract two diagrams.

        Indices both operands carry are summed unless listed in
        `still_referenced` (pass open indices and hyper-edges other tensors
        still use there); summed indices absent from the diagrams contribute a
        factor of 2 each.
        """
        level_of = dict(zip(a.indices, a.levels))
        level_of.update(zip(b.indices, b.levels))
        common = set(a.indices) & set(b.indices)
        summed_levels = sorted(level_of[i] for i in common if i not in still_referenced)
        out = sorted((lv, i) for i, lv in level_of.items()
                     if not (i in common and i not in still_referenced))
        root = self._contract_edges(a.root, b.root, summed_levels)
        return Tdd(root, tuple(i for _, i in out), tuple(lv for lv, _ in out))

    def _contract_edges(self, ea, eb, summed_levels):
        ctx_key = tuple(summed_levels)
        ctx = self._contexts.get(ctx_key)
        if ctx is None:
            ctx = self._contexts[ctx_key] = len(self._contexts)
        top = (summed_levels[-1] + 2) if summed_levels else 1
        # cnt[l]: summed levels >= l, for l < top; zero below the last summed level
        cnt = [0] * (top + 1)
        for lv in summed_levels:
            for l in range(lv + 1):
                cnt[l] += 1
        is_summed = set(summed_levels)
        pow2 = [float(2 ** k) for k in range(len(summed_levels) + 1)]
        cache = self.contract_cache
        slots, mask = cache.slots, cache.mask
        enabled = cache.enabled
        make, add = self._make, self._add
        T = TERMINAL

        def count(l):
            return cnt[l] if l < top else 0

        def mul(wa, na, wb, nb, cp):
            w = wa * wb
            if w == 0:
                return ZERO
            rw, rn = cont(na, nb)
            if rw == 0:
                return ZERO
            x = na.level if na.level < nb.level else nb.level
            k = cp - (cnt[x] if x < top else 0)
            return (w * rw * pow2[k] if k else w * rw, rn)

        def cont(na, nb):
            self.calls += 1
            la, lb = na.level, nb.level
            x = la if la < lb else lb
            if x >= top:
                if nb is T:
                    return ONE if na is T else (1 + 0j, na)
                if na is T:
                    return (1 + 0j, nb)
            key = (na.uid, nb.uid, ctx) if na.uid <= nb.uid else (nb.uid, na.uid, ctx)
            h = hash(key) & mask
            ent = slots[h]
            if ent is not None and ent[0] == key:
                cache.hits += 1
                return ent[1]
            cache.misses += 1
            if la == x:
                a0w, a0n, a1w, a1n = na.w0, na.n0, na.w1, na.n1
            else:
                a0w = a1w = 1
                a0n = a1n = na
            if lb == x:
                b0w, b0n, b1w, b1n = nb.w0, nb.n0, nb.w1, nb.n1
            else:
                b0w = b1w = 1
                b0n = b1n = nb
            cp = count(x + 1)
            r0 = mul(a0w, a0n, b0w, b0n, cp)
            r1 = mul(a1w, a1n, b1w, b1n, cp)
            self.muls += 4
            if x in is_summed:
                res = add(r0[0], r0[1], r1[0], r1[1])
            else:
                res = make(x, r0[0], r0[1], r1[0], r1[1])
            if enabled:
                slots[h] = (key, res)
            return res

        return mul(ea[0], ea[1], eb[0], eb[1], count(0))

    # -- networks ------------------------------------------------------------

    def contract_network(self, net: TensorNetwork, order: ContractionOrder | None = None,
                         levels: dict | str = "appearance") -> Tdd:
        """Convert every tensor, then replay `order` over the shrinking list,
        moving root references from operands to results and collecting
        garbage whenever the store outgrows its limit."""
        if order is None:
            order = order_sequential(net)
        order.validate(len(net.tensors))
        if isinstance(levels, str):
            levels = index_levels(net, levels)
        opened = set(net.open_indices)
        tdds = []
        refs: dict = {}
        for t in net.tensors:
            d = self.tensor_to_tdd(t, levels)
            self.inc_ref(d.root)
            tdds.append(d)
            for i in d.indices:
                refs[i] = refs.get(i, 0) + 1
        if not tdds:
            tdds.append(Tdd(ONE, (), ()))
        for i, j in order:
            a, b = tdds[i], tdds[j]
            for x in a.indices:
                refs[x] -= 1
            for x in b.indices:
                refs[x] -= 1
            keep = {x for x in set(a.indices) & set(b.indices) if refs[x] > 0 or x in opened}
            c = self.contract(a, b, keep)
            for x in c.indices:
                refs[x] += 1
            self.dec_ref(a.root)
            self.dec_ref(b.root)
            self.inc_ref(c.root)
            for k in sorted((i, j), reverse=True):
                del tdds[k]
            tdds.append(c)
            if len(self.table) > self.gc_limit:
                self.garbage_collection()
        return tdds[0]

    def result_tensor(self, d: Tdd, net: TensorNetwork) -> Tensor:
        """Dense form of a network result, axes ordered as ``net.open_indices``."""
        return _finalize(self.tdd_to_tensor(d), net)

    # -- reporting -----------------------------------------------------------

    def stats(self, final: Tdd | None = None) -> StatsReport:
        return StatsReport(
            unique_hits=self.unique_hits, unique_misses=self.unique_misses,
            contract_hits=self.contract_cache.hits, contract_misses=self.contract_cache.misses,
            add_hits=self.add_cache.hits, add_misses=self.add_cache.misses,
            peak_nodes=self.peak_nodes, current_nodes=len(self.table),
            final_nodes=final.node_count() if final is not None else 0,
            gc_runs=self.gc_runs, gc_reclaimed=self.gc_reclaimed,
            recursive_calls=self.calls, complex_muls=self.muls, complex_adds=self.adds,
        )

    def to_dot(self, d: Tdd) -> str:
        """Graphviz source; low (0) edges red and dashed, high (1) edges blue."""
        label = dict(zip(d.levels, d.indices))
        lines = ["digraph tdd {", '  root [shape=point];']
        seen = set()
        stack = [d.root[1]]
        lines.append(f'  root -> n{d.root[1].uid} [label="{_fmt(d.root[0])}"];')
        while stack:
            n = stack.pop()
            if n.uid in seen:
                continue
            seen.add(n.uid)
            if n is TERMINAL:
                lines.append(f'  n{n.uid} [shape=box, label="1"];')
                continue
            lines.append(f'  n{n.uid} [shape=circle, label="{label.get(n.level, n.level)!r}"];')
            for w, c, style in ((n.w0, n.n0, "color=red, style=dashed"),
                                (n.w1, n.n1, "color=blue")):
                if w != 0:
                    lines.append(f'  n{n.uid} -> n{c.uid} [{style}, label="{_fmt(w)}"];')
                    stack.append(c)
        lines.append("}")
        return "\n".join(lines) + "\n"


def _fmt(w):
    return f"{w.real:.4g}{w.imag:+.4g}i" if w.imag else f"{w.real:.4g}"

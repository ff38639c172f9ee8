"""Merging gate tensors before contraction.

Run with ``python3 demos/02_tetris.py``.
"""
# %% [markdown]
# A circuit becomes a network with one tensor per gate plus the |0> inputs.
# The Tetris pass packs neighbouring gates into blocks whose combined rank stays
# within a budget, so the contraction has fewer, larger pieces to handle.

# %%
from tddsim import (
    Engine, TetrisStats, build_network, emit_qasm, example_circuit, generate,
    oracle_contract, order_cost, order_greedy, tetris_simplify,
)

c = example_circuit()
print(emit_qasm(c))

full = build_network(c)
st = TetrisStats()
net = tetris_simplify(c, full, stats=st)
print("gate tensors:", c.gate_count, "->", st.tensors_out)

# %% [markdown]
# A tighter rank budget keeps more blocks apart.

# %%
st_min = TetrisStats()
tetris_simplify(c, full, constraint="min", stats=st_min)
print("with the min constraint:", st_min.tensors_out)

# %% [markdown]
# The merged network still contracts to the same tensor.

# %%
import numpy as np

e = Engine()
d = e.contract_network(net, order_greedy(net), "interleaved")
err = np.abs(e.result_tensor(d, net).data - oracle_contract(full).data).max()
print("difference from the einsum oracle:", err)

# %% [markdown]
# On larger circuits the pass removes many small contractions. The widest
# intermediate tensor is set by the circuit itself and does not move.

# %%
for family, n in (("qft", 10), ("qft_entangled", 10), ("graph_state", 12)):
    circ = generate(family, n)
    raw = build_network(circ)
    packed = tetris_simplify(circ, raw)
    a = order_cost(raw, order_greedy(raw))
    b = order_cost(packed, order_greedy(packed))
    print(f"{family:>14} n={n}: tensors {len(raw.tensors):>3} -> {len(packed.tensors):>3}, "
          f"pair steps {len(a['ranks']):>3} -> {len(b['ranks']):>3}, "
          f"largest intermediate rank {a['max_rank']} -> {b['max_rank']}")

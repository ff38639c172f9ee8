"""How big do the final diagrams get?

Run with ``python3 demos/03_node_counts.py`` (about ten seconds).
"""
# %% [markdown]
# A GHZ state is two branches, so its diagram grows linearly with the number
# of qubits. The QFT unitary and an entangled QFT state have no such sharing
# and fill the whole binary tree. Counts include the terminal node.

# %%
import time

from tddsim import Engine, generate, order_greedy, order_sequential, tetris_simplify


def final_size(family, n, order):
    t0 = time.perf_counter()
    c = generate(family, n)
    net = tetris_simplify(c)
    o = order_sequential(net) if order == "sequential" else order_greedy(net)
    e = Engine()
    d = e.contract_network(net, o, "interleaved")
    return d.node_count(), time.perf_counter() - t0


rows = [("ghz", n, "sequential") for n in (25, 26, 27, 28)]
rows += [("qft", n, "greedy") for n in (10, 12, 14)]
rows += [("qft_entangled", n, "greedy") for n in (10, 12, 14)]
for family, n, order in rows:
    nodes, secs = final_size(family, n, order)
    print(f"{family:>14} {n:>3} qubits: {nodes:>7} nodes  ({secs:.2f}s)")

# %% [markdown]
# The diagram is canonical for a fixed index order, so the contraction order
# changes the time taken but never the result.

# %%
c = generate("qft_entangled", 8)
net = tetris_simplify(c)
e = Engine()
a = e.contract_network(net, order_sequential(net), "interleaved")
b = e.contract_network(net, order_greedy(net), "interleaved")
print("same root node from both orders:", a.node is b.node)

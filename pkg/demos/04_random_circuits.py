"""A 16-qubit random circuit, memory management and the caches.

Run with ``python3 demos/04_random_circuits.py`` (under a minute).
"""
# %% [markdown]
# The bundled ``inst_4x4_10_0.txt`` is a random circuit on a 4x4 grid, depth 10,
# written by ``tools/make_rqc.py``. Its output state has no structure to
# exploit, so the final diagram is close to a full tree.

# %%
import numpy as np

from tddsim import (
    Engine, build_network, data_path, index_levels, order_greedy, parse_rqc,
    tetris_simplify,
)

c = parse_rqc(open(data_path("inst_4x4_10_0.txt")).read())
full = build_network(c)
net = tetris_simplify(c, full)
order = order_greedy(net)
levels = index_levels(full, "interleaved")
print(c.num_qubits, "qubits,", c.gate_count, "gates,", len(net.tensors), "tensors after Tetris")

# %% [markdown]
# With a low node limit the engine stops to collect unreachable nodes
# during the run. The amplitudes come out bit for bit the same.

# %%
roomy = Engine(gc_limit=1 << 40)
a = roomy.result_tensor(roomy.contract_network(net, order, levels), net).data
tight = Engine(gc_limit=1 << 12)
b = tight.result_tensor(tight.contract_network(net, order, levels), net).data
print("GC runs:", tight.gc_runs, "nodes reclaimed:", tight.gc_reclaimed)
print("identical amplitudes:", np.array_equal(a, b))

# %% [markdown]
# The statistics report shows how often the unique table and the two
# operation caches save work.

# %%
d = roomy.contract_network(net, order, levels)
s = roomy.stats(d)
print(f"final nodes {s.final_nodes}, peak {s.peak_nodes}")
print(f"unique table hit rate   {s.unique_hit_rate:.1%}")
print(f"contract cache hit rate {s.contract_hit_rate:.1%}")
print(f"add cache hit rate      {s.add_hit_rate:.1%}")

# %% [markdown]
# A single amplitude is a path lookup in the final diagram.

# %%
bits = "0" * 16
amp = roomy.amplitude(d, dict(zip(net.open_indices, map(int, bits))))
print(f"<{bits}|psi> = {amp:.3e}, probability {abs(amp) ** 2:.3e} vs uniform {2 ** -16:.3e}")

"""A first tensor decision diagram: H (x) H.

Run with ``python3 demos/01_first_diagram.py``.
"""
# %% [markdown]
# A rank-4 tensor with 16 entries. The decision diagram stores it with one node
# per index, because every row of H (x) H is a signed copy of the same pattern.

# %%
import math

import numpy as np

from tddsim import Engine, IndexId, Tensor

h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
hh = np.kron(h, h)

x0, y0, x1, y1 = (IndexId.fresh(s) for s in ("x0", "y0", "x1", "y1"))
t = Tensor([x0, y0, x1, y1], hh.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3))

engine = Engine()
d = engine.tensor_to_tdd(t, {x0: 0, y0: 1, x1: 2, y1: 3})
print("entries:", t.data.size)
print("nodes in the diagram (terminal excluded):", d.node_count(terminal=False))
print("root weight:", d.weight)

# %% [markdown]
# Expanding the diagram back gives the original array.

# %%
back = engine.tdd_to_tensor(d).transpose([x0, x1, y0, y1]).data.reshape(4, 4)
print("round-trip error:", np.abs(back - hh).max())

# %% [markdown]
# Single entries come straight from a path through the diagram.

# %%
for bits in ("0000", "0101", "1111"):
    a = engine.amplitude(d, dict(zip((x0, y0, x1, y1), map(int, bits))))
    print(f"entry x0 y0 x1 y1 = {bits}: {a:+.4f}")

# %% [markdown]
# The engine hash-conses nodes, so building the same tensor again adds nothing.

# %%
before = len(engine)
engine.tensor_to_tdd(t, {x0: 0, y0: 1, x1: 2, y1: 3})
print("stored nodes before / after rebuilding:", before, len(engine))

# %%
print(engine.to_dot(d))

"""Dense reference results, kept independent of the pairwise contraction code.

Only the :class:`~tddsim.tensornet.Tensor` type is shared with the rest of the
package. ``oracle_contract`` hands the whole network to a single einsum call
(opt_einsum picks its own path); ``oracle_statevector`` is a textbook
state-vector simulator.
"""
from __future__ import annotations

import numpy as np
import opt_einsum

from .circuit import Circuit, gate_matrix
from .tensornet import Tensor, TensorNetwork

__all__ = ["OracleError", "DenseState", "oracle_contract", "oracle_statevector",
           "MAX_OPEN_RANK", "MAX_QUBITS"]

MAX_OPEN_RANK = 26
MAX_QUBITS = 20


class OracleError(ValueError):
    pass


class DenseState:
    def __init__(self, amplitudes):
        self.amplitudes = np.asarray(amplitudes, dtype=complex)

    @property
    def num_qubits(self) -> int:
        return int(self.amplitudes.size).bit_length() - 1

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def __getitem__(self, bits):
        if isinstance(bits, str):
            bits = int(bits, 2)
        return self.amplitudes[bits]


def oracle_contract(net: TensorNetwork) -> Tensor:
    """Sum the whole network at once; axes follow ``net.open_indices``."""
    if len(net.open_indices) > MAX_OPEN_RANK:
        raise OracleError(f"open rank {len(net.open_indices)} exceeds the oracle guard "
                          f"of {MAX_OPEN_RANK}")
    if not net.tensors:
        return Tensor(net.open_indices, np.ones((2,) * len(net.open_indices)))
    symbol = {}
    for t in net.tensors:
        for i in t.indices:
            symbol.setdefault(i, opt_einsum.get_symbol(len(symbol)))
    for i in net.open_indices:
        symbol.setdefault(i, opt_einsum.get_symbol(len(symbol)))
    operands = []
    terms = []
    for t in net.tensors:
        terms.append("".join(symbol[i] for i in t.indices))
        operands.append(t.data)
    # an open leg no tensor touches is a free all-ones axis
    loose = [i for i in net.open_indices if not any(i in t.indices for t in net.tensors)]
    for i in loose:
        terms.append(symbol[i])
        operands.append(np.ones(2))
    expr = ",".join(terms) + "->" + "".join(symbol[i] for i in net.open_indices)
    data = opt_einsum.contract(expr, *operands, optimize="greedy")
    return Tensor(net.open_indices, data)


def oracle_statevector(circuit: Circuit) -> DenseState:
    """Apply every gate matrix in layer order to |0...0>."""
    n = circuit.num_qubits
    if circuit.mode != "state":
        raise OracleError("the state-vector oracle only handles state-mode circuits")
    if n > MAX_QUBITS:
        raise OracleError(f"{n} qubits exceeds the state-vector guard of {MAX_QUBITS}")
    psi = np.zeros((2,) * n, dtype=complex)
    psi[(0,) * n] = 1
    for g in circuit.gates:
        a = len(g.qubits)
        u = gate_matrix(g.kind).reshape((2,) * (2 * a))
        psi = np.tensordot(u, psi, axes=(list(range(a, 2 * a)), list(g.qubits)))
        # tensordot puts the gate's output axes first
        psi = np.moveaxis(psi, list(range(a)), list(g.qubits))
    return DenseState(psi.reshape(-1))

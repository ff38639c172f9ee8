"""Quantum circuit simulation with tensor decision diagrams.

Typical use::

    from tddsim import generate, build_network, tetris_simplify, order_greedy, Engine

    circ = generate("ghz", 25)
    net = tetris_simplify(circ)
    engine = Engine()
    result = engine.contract_network(net, order_greedy(net), "interleaved")
    result.node_count()   # 50
"""
from .circuit import (
    Circuit, CircuitError, Gate, GateKind, QasmError, QubitRangeError, RqcError,
    UnsupportedGateError, emit_qasm, example_circuit, gate_matrix, gate_tensor,
    generate, parse_qasm, parse_rqc,
)
from .oracle import DenseState, OracleError, oracle_contract, oracle_statevector
from .tdd import (
    ZERO, ArenaExhausted, ComputedCache, Engine, Node, StatsReport, Tdd, TERMINAL,
    index_levels,
)
from .tensornet import (
    ContractionOrder, IndexId, OrderError, Tensor, TensorNetwork, TetrisStats,
    build_network, contract_network_dense, contract_pair_dense, order_cost,
    order_greedy, order_import, order_sequential, tetris_simplify,
)

__version__ = "0.1.0"


def data_path(name: str) -> str:
    """Path of a bundled circuit file."""
    from pathlib import Path
    return str(Path(__file__).with_name("data") / name)

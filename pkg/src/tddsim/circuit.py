"""Quantum circuits: gate library, OpenQASM / RQC parsing and benchmark generators.

A :class:`Circuit` is a list of layers; each layer is a list of gates acting on
pairwise-disjoint qubits. Qubit 0 is the most significant bit of every basis
state and amplitude index used throughout the package.
"""
from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GateKind", "Gate", "Circuit", "CircuitError", "QasmError",
    "UnsupportedGateError", "QubitRangeError", "RqcError",
    "GATES", "gate_matrix", "gate_tensor", "parse_qasm", "emit_qasm",
    "parse_rqc", "generate", "example_circuit",
]

_SQ2 = math.sqrt(0.5)


class CircuitError(ValueError):
    """Base class for circuit construction and parsing failures."""


class QasmError(CircuitError):
    def __init__(self, msg, line=None, col=None):
        self.line, self.col = line, col
        where = f" (line {line}, column {col})" if line is not None else ""
        super().__init__(msg + where)


class UnsupportedGateError(QasmError):
    def __init__(self, name, line=None, col=None):
        self.gate = name
        super().__init__(f"unsupported gate {name!r}", line, col)


class QubitRangeError(QasmError):
    pass


class RqcError(CircuitError):
    def __init__(self, msg, line=None):
        self.line = line
        super().__init__(msg if line is None else f"{msg} (line {line})")


def _rx(t):
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def _ry(t):
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rz(t):
    return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])


def _p(t):
    return np.diag([1, np.exp(1j * t)])


def _cp(t):
    return np.diag([1, 1, 1, np.exp(1j * t)])


@dataclass(frozen=True)
class _GateInfo:
    arity: int
    nparams: int
    diagonal: bool
    matrix: object  # ndarray or callable(theta) -> ndarray


GATES: dict[str, _GateInfo] = {
    "H": _GateInfo(1, 0, False, np.array([[1, 1], [1, -1]], dtype=complex) * _SQ2),
    "X": _GateInfo(1, 0, False, np.array([[0, 1], [1, 0]], dtype=complex)),
    "Y": _GateInfo(1, 0, False, np.array([[0, -1j], [1j, 0]])),
    "Z": _GateInfo(1, 0, True, np.diag([1, -1]).astype(complex)),
    "S": _GateInfo(1, 0, True, np.diag([1, 1j])),
    "T": _GateInfo(1, 0, True, np.diag([1, np.exp(0.25j * math.pi)])),
    "SX": _GateInfo(1, 0, False, 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]])),
    "SY": _GateInfo(1, 0, False, 0.5 * np.array([[1 + 1j, -1 - 1j], [1 + 1j, 1 + 1j]])),
    "RX": _GateInfo(1, 1, False, _rx),
    "RY": _GateInfo(1, 1, False, _ry),
    "RZ": _GateInfo(1, 1, True, _rz),
    "P": _GateInfo(1, 1, True, _p),
    "CZ": _GateInfo(2, 0, True, np.diag([1, 1, 1, -1]).astype(complex)),
    "CX": _GateInfo(2, 0, False, np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)),
    "CP": _GateInfo(2, 1, True, _cp),
    "SWAP": _GateInfo(2, 0, False, np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)),
}


@dataclass(frozen=True)
class GateKind:
    name: str
    params: tuple[float, ...] = ()

    def __post_init__(self):
        info = GATES.get(self.name)
        if info is None:
            raise UnsupportedGateError(self.name)
        if len(self.params) != info.nparams:
            raise CircuitError(
                f"{self.name} takes {info.nparams} parameter(s), got {len(self.params)}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))

    @property
    def arity(self) -> int:
        return GATES[self.name].arity

    @property
    def diagonal(self) -> bool:
        return GATES[self.name].diagonal

    def __str__(self):
        if not self.params:
            return self.name
        return f"{self.name}({', '.join(f'{p:g}' for p in self.params)})"


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    qubits: tuple[int, ...]
    layer: int = 0

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != self.kind.arity:
            raise CircuitError(f"{self.kind} acts on {self.kind.arity} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitError(f"repeated qubit in {self.kind} {self.qubits}")

    def __str__(self):
        return f"{self.kind}@{','.join(map(str, self.qubits))}"


@dataclass
class Circuit:
    num_qubits: int
    layers: list[list[Gate]] = field(default_factory=list)
    mode: str = "state"  # "state" | "unitary"

    def __post_init__(self):
        if self.num_qubits < 1:
            raise CircuitError("a circuit needs at least one qubit")
        if self.mode not in ("state", "unitary"):
            raise CircuitError(f"unknown simulation mode {self.mode!r}")
        for li, layer in enumerate(self.layers):
            seen = set()
            for g in layer:
                for q in g.qubits:
                    if not 0 <= q < self.num_qubits:
                        raise QubitRangeError(f"qubit {q} out of range for {self.num_qubits} qubits")
                    if q in seen:
                        raise CircuitError(f"layer {li} uses qubit {q} twice")
                    seen.add(q)

    @classmethod
    def from_gates(cls, num_qubits, gates, mode="state"):
        """Layer a gate sequence greedily: each gate goes right after the last
        layer that touches one of its qubits."""
        depth = [0] * num_qubits
        layers: list[list[Gate]] = []
        for kind, qubits in gates:
            for q in qubits:
                if not 0 <= q < num_qubits:
                    raise QubitRangeError(f"qubit {q} out of range for {num_qubits} qubits")
            li = max(depth[q] for q in qubits)
            if li == len(layers):
                layers.append([])
            layers[li].append(Gate(kind, qubits, li))
            for q in qubits:
                depth[q] = li + 1
        return cls(num_qubits, layers, mode)

    @property
    def gates(self) -> list[Gate]:
        return [g for layer in self.layers for g in layer]

    @property
    def gate_count(self) -> int:
        return sum(len(layer) for layer in self.layers)

    @property
    def depth(self) -> int:
        return len(self.layers)

    def __repr__(self):
        body = ", ".join("[" + ",".join(map(str, layer)) + "]" for layer in self.layers)
        return f"Circuit(n={self.num_qubits}, mode={self.mode}, layers=[{body}])"


def gate_matrix(kind: GateKind) -> np.ndarray:
    """Unitary of `kind` as a 2^a x 2^a matrix (first qubit most significant)."""
    m = GATES[kind.name].matrix
    return np.asarray(m(*kind.params) if callable(m) else m, dtype=complex)


def gate_tensor(kind: GateKind, hyper: bool = True, indices=None):
    """Tensor form of a gate.

    Full form has indices ``(in_0, .., in_{a-1}, out_0, .., out_{a-1})`` with
    ``t[i.., j..] = U[j.., i..]``. For a diagonal gate with ``hyper=True`` each
    qubit's input and output index are the same hyper-edge, so the tensor has
    one index per qubit and holds the diagonal of ``U``.
    """
    from .tensornet import IndexId, Tensor

    a = kind.arity
    u = gate_matrix(kind)
    if hyper and kind.diagonal:
        data = np.diag(u).reshape((2,) * a)
        labels = [f"k{q}" for q in range(a)]
    else:
        data = u.reshape((2,) * (2 * a)).transpose(list(range(a, 2 * a)) + list(range(a)))
        labels = [f"i{q}" for q in range(a)] + [f"j{q}" for q in range(a)]
    if indices is None:
        indices = [IndexId.fresh(lb) for lb in labels]
    return Tensor(indices, np.ascontiguousarray(data))


# --------------------------------------------------------------------------
# OpenQASM 2.0 subset

_QASM_NAMES = {
    "h": "H", "x": "X", "y": "Y", "z": "Z", "s": "S", "t": "T", "sx": "SX", "sy": "SY",
    "rx": "RX", "ry": "RY", "rz": "RZ", "p": "P", "u1": "P", "cz": "CZ", "cx": "CX",
    "cnot": "CX", "cp": "CP", "cu1": "CP", "swap": "SWAP",
}
_SKIPPED = {"measure", "barrier"}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|//[^\n]*)
  | (?P<num>(\d+\.\d*|\.\d+|\d+)([eE][-+]?\d+)?)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<str>"[^"\n]*")
  | (?P<arrow>->)
  | (?P<op>[\[\](){};,+\-*/^])
""", re.VERBOSE)


def _tokenize(text):
    pos, line, col = 0, 1, 1
    toks = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise QasmError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        val = m.group()
        if kind != "ws":
            toks.append((kind, val, line, col))
        nl = val.count("\n")
        if nl:
            line += nl
            col = len(val) - val.rfind("\n")
        else:
            col += len(val)
        pos = m.end()
    toks.append(("eof", "", line, col))
    return toks


class _QasmParser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0
        self.reg = None
        self.nq = None
        self.gates = []

    def peek(self):
        return self.toks[self.i]

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, val=None, kind=None):
        tok = self.next()
        if (val is not None and tok[1] != val) or (kind is not None and tok[0] != kind):
            want = repr(val) if val is not None else kind
            got = tok[1] or "end of input"
            raise QasmError(f"expected {want}, got {got!r}", tok[2], tok[3])
        return tok

    def skip_statement(self):
        while self.peek()[1] != ";":
            if self.peek()[0] == "eof":
                tok = self.peek()
                raise QasmError("missing ';'", tok[2], tok[3])
            self.next()
        self.next()

    def parse(self):
        while self.peek()[0] != "eof":
            kind, val, line, col = self.peek()
            if val == "OPENQASM":
                self.next()
                ver = self.expect(kind="num")
                if not ver[1].startswith("2"):
                    raise QasmError(f"only OpenQASM 2.0 is supported, got {ver[1]}", ver[2], ver[3])
                self.expect(";")
            elif val == "include":
                self.next()
                self.expect(kind="str")
                self.expect(";")
            elif val == "qreg":
                self.next()
                name = self.expect(kind="id")
                self.expect("[")
                size = self.expect(kind="num")
                self.expect("]")
                self.expect(";")
                if self.reg is not None:
                    raise QasmError("only one quantum register is supported", line, col)
                self.reg, self.nq = name[1], int(size[1])
            elif val == "creg":
                self.skip_statement()
            elif val in _SKIPPED:
                warnings.warn(f"line {line}: ignoring '{val}' statement", stacklevel=3)
                self.skip_statement()
            elif val in ("if", "gate", "opaque", "reset"):
                raise QasmError(f"'{val}' statements are not supported", line, col)
            elif kind == "id":
                self.gate_statement()
            else:
                raise QasmError(f"unexpected token {val!r}", line, col)
        if self.nq is None:
            raise QasmError("no qreg declaration")
        return Circuit.from_gates(self.nq, self.gates)

    def gate_statement(self):
        _, name, line, col = self.next()
        gname = _QASM_NAMES.get(name.lower())
        if gname is None:
            raise UnsupportedGateError(name, line, col)
        params = []
        if self.peek()[1] == "(":
            self.next()
            if self.peek()[1] != ")":
                params.append(self.expr())
                while self.peek()[1] == ",":
                    self.next()
                    params.append(self.expr())
            self.expect(")")
        args = [self.qubit_arg()]
        while self.peek()[1] == ",":
            self.next()
            args.append(self.qubit_arg())
        self.expect(";")
        info = GATES[gname]
        if len(params) != info.nparams:
            raise QasmError(f"{name} takes {info.nparams} parameter(s), got {len(params)}", line, col)
        kind = GateKind(gname, tuple(params))
        if len(args) != info.arity:
            raise QasmError(f"{name} takes {info.arity} qubit argument(s), got {len(args)}", line, col)
        if info.arity == 1 and args[0] is None:
            for q in range(self.nq):
                self.gates.append((kind, (q,)))
            return
        if any(a is None for a in args):
            raise QasmError("register broadcast is only supported for single-qubit gates", line, col)
        if len(set(args)) != len(args):
            raise QasmError(f"repeated qubit argument for {name}", line, col)
        self.gates.append((kind, tuple(args)))

    def qubit_arg(self):
        _, name, line, col = self.expect(kind="id")
        if self.reg is None or name != self.reg:
            raise QasmError(f"unknown quantum register {name!r}", line, col)
        if self.peek()[1] != "[":
            return None
        self.next()
        idx = self.expect(kind="num")
        self.expect("]")
        q = int(idx[1])
        if not 0 <= q < self.nq:
            raise QubitRangeError(f"qubit {name}[{q}] out of range (register size {self.nq})",
                                  idx[2], idx[3])
        return q

    # expr := term (('+'|'-') term)* ; term := unary (('*'|'/') unary)* ;
    # unary := '-' unary | atom ; atom := num | pi | '(' expr ')'
    def expr(self):
        v = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.next()[1]
            rhs = self.term()
            v = v + rhs if op == "+" else v - rhs
        return v

    def term(self):
        v = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.next()
            rhs = self.unary()
            if op[1] == "*":
                v *= rhs
            else:
                if rhs == 0:
                    raise QasmError("division by zero in angle", op[2], op[3])
                v /= rhs
        return v

    def unary(self):
        if self.peek()[1] == "-":
            self.next()
            return -self.unary()
        if self.peek()[1] == "+":
            self.next()
            return self.unary()
        kind, val, line, col = self.next()
        if kind == "num":
            return float(val)
        if val == "pi":
            return math.pi
        if val == "(":
            v = self.expr()
            self.expect(")")
            return v
        raise QasmError(f"unexpected {val or 'end of input'!r} in angle expression", line, col)


def parse_qasm(text: str) -> Circuit:
    """Parse an OpenQASM 2.0 program restricted to one register and the gate library.

    ``measure`` and ``barrier`` are skipped with a warning. Gates are layered
    greedily (see :meth:`Circuit.from_gates`).
    """
    return _QasmParser(text).parse()


_EMIT_NAMES = {v: k for k, v in _QASM_NAMES.items() if k not in ("u1", "cu1", "cnot")}


def emit_qasm(circuit: Circuit) -> str:
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{circuit.num_qubits}];"]
    for g in circuit.gates:
        name = _EMIT_NAMES[g.kind.name]
        if g.kind.params:
            name += "(" + ",".join(repr(p) for p in g.kind.params) + ")"
        lines.append(f"{name} {','.join(f'q[{q}]' for q in g.qubits)};")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Google random-circuit instance files

_RQC_NAMES = {"h": "H", "t": "T", "x_1_2": "SX", "y_1_2": "SY", "cz": "CZ"}


def parse_rqc(text: str) -> Circuit:
    """Parse a Google RQC instance: a qubit count, then ``cycle gate q [q2]`` lines.

    Gate layers are the cycle numbers.
    """
    lines = text.splitlines()
    body = [(i + 1, ln.split()) for i, ln in enumerate(lines) if ln.strip()]
    if not body:
        raise RqcError("empty instance file")
    first_no, first = body[0]
    if len(first) != 1 or not first[0].isdigit() or int(first[0]) < 1:
        raise RqcError("first line must be the qubit count", first_no)
    n = int(first[0])
    layers: dict[int, list[Gate]] = {}
    for no, parts in body[1:]:
        if len(parts) < 3 or not parts[0].isdigit():
            raise RqcError(f"malformed line {' '.join(parts)!r}", no)
        cycle, name = int(parts[0]), parts[1]
        if name not in _RQC_NAMES:
            raise RqcError(f"unsupported gate {name!r}", no)
        kind = GateKind(_RQC_NAMES[name])
        try:
            qubits = tuple(int(p) for p in parts[2:])
        except ValueError:
            raise RqcError(f"malformed qubit list {' '.join(parts[2:])!r}", no) from None
        if len(qubits) != kind.arity:
            raise RqcError(f"{name} expects {kind.arity} qubit(s)", no)
        if any(not 0 <= q < n for q in qubits):
            raise RqcError(f"qubit out of range in {' '.join(parts)!r}", no)
        if len(set(qubits)) != len(qubits):
            raise RqcError("repeated qubit", no)
        layer = layers.setdefault(cycle, [])
        if any(set(g.qubits) & set(qubits) for g in layer):
            raise RqcError(f"cycle {cycle} uses a qubit twice", no)
        layer.append(Gate(kind, qubits, cycle))
    depth = max(layers) + 1 if layers else 0
    return Circuit(n, [layers.get(c, []) for c in range(depth)])


# --------------------------------------------------------------------------
# Benchmark families

def generate(family: str, n: int, qft_swaps: bool = False) -> Circuit:
    """Build a benchmark circuit.

    ``ghz``: H then a CX chain (n gates). ``graph_state``: H on every qubit then a
    CZ ring (2n gates). ``qft``: textbook QFT without the final swaps unless
    ``qft_swaps``; simulated as a unitary. ``qft_entangled``: the GHZ preamble
    followed by the QFT, simulated as a state.
    """
    if n < 1:
        raise CircuitError("n must be positive")
    if family in ("ghz", "graph_state", "qft_entangled") and n < 2:
        raise CircuitError(f"{family} needs at least 2 qubits")
    H, CX, CZ = GateKind("H"), GateKind("CX"), GateKind("CZ")
    if family == "ghz":
        return Circuit.from_gates(n, [(H, (0,))] + [(CX, (i, i + 1)) for i in range(n - 1)])
    if family == "graph_state":
        gates = [(H, (q,)) for q in range(n)]
        gates += [(CZ, (i, (i + 1) % n)) for i in range(n)]
        return Circuit.from_gates(n, gates)
    if family == "qft":
        return Circuit.from_gates(n, _qft_gates(n, qft_swaps), mode="unitary")
    if family == "qft_entangled":
        ghz = [(H, (0,))] + [(CX, (i, i + 1)) for i in range(n - 1)]
        return Circuit.from_gates(n, ghz + _qft_gates(n, qft_swaps))
    raise CircuitError(f"unknown circuit family {family!r}")


def _qft_gates(n, swaps):
    gates = []
    for i in range(n):
        gates.append((GateKind("H"), (i,)))
        for j in range(i + 1, n):
            gates.append((GateKind("CP", (math.pi / 2 ** (j - i),)), (j, i)))
    if swaps:
        gates += [(GateKind("SWAP"), (i, n - 1 - i)) for i in range(n // 2)]
    return gates


def example_circuit() -> Circuit:
    """Four-qubit, eleven-gate random-circuit fragment used in the docs and tests.

    Qubits 0 and 1 carry H, CZ, RX/RY and a trailing T; qubit 2 gets H, T and a
    CZ with qubit 1; qubit 3 carries an isolated H, RY(pi/2) chain.
    """
    g = GateKind
    half = math.pi / 2
    return Circuit(4, [
        [Gate(g("H"), (0,), 0), Gate(g("H"), (1,), 0), Gate(g("H"), (2,), 0), Gate(g("H"), (3,), 0)],
        [Gate(g("CZ"), (0, 1), 1), Gate(g("T"), (2,), 1), Gate(g("RY", (half,)), (3,), 1)],
        [Gate(g("RX", (half,)), (0,), 2), Gate(g("RY", (half,)), (1,), 2)],
        [Gate(g("T"), (0,), 3), Gate(g("CZ"), (1, 2), 3)],
    ])

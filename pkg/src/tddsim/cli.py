"""Command-line driver: parse -> network -> Tetris -> order -> contract -> report.

Exit codes: 0 success, 1 input/usage error, 2 oracle mismatch, 3 out of resources.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .circuit import CircuitError, generate, parse_qasm, parse_rqc
from .oracle import MAX_OPEN_RANK, MAX_QUBITS, oracle_contract, oracle_statevector
from .tdd import ArenaExhausted, Engine, index_levels
from .tensornet import (
    OrderError, TetrisStats, build_network, contract_network_dense, order_greedy,
    order_import, order_sequential, tetris_simplify,
)

EXIT_OK, EXIT_INPUT, EXIT_VERIFY, EXIT_RESOURCE = 0, 1, 2, 3
VERIFY_TOL = 1e-10


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    input: str | None = None
    gen: str | None = None
    format: str = "auto"
    tetris: bool = True
    order: str = "greedy"
    hyper_edges: bool = True
    backend: str = "tdd"
    gc_limit: int = 1 << 22
    cache_bits: int = 20
    max_nodes: int | None = None
    tetris_constraint: str = "max"
    index_order: str = "interleaved"
    qft_swaps: bool = False
    verify: bool = False
    stats_out: str | None = None
    amplitude: str | None = None
    dump_dot: str | None = None
    report: dict = field(default_factory=dict)


def _load_circuit(cfg: RunConfig):
    if cfg.gen:
        family, _, n = cfg.gen.partition(":")
        if not n.isdigit():
            raise UsageError(f"--gen expects family:n, got {cfg.gen!r}")
        return generate(family, int(n), qft_swaps=cfg.qft_swaps)
    text = Path(cfg.input).read_text(encoding="utf-8")
    fmt = cfg.format
    if fmt == "auto":
        fmt = "qasm" if cfg.input.endswith(".qasm") or "qreg" in text else "rqc"
    return parse_qasm(text) if fmt == "qasm" else parse_rqc(text)


def _validate(cfg: RunConfig):
    if (cfg.input is None) == (cfg.gen is None):
        raise UsageError("give exactly one of an input file or --gen family:n")
    if cfg.backend not in ("tdd", "dense"):
        raise UsageError(f"unknown backend {cfg.backend!r}")
    if cfg.order not in ("sequential", "greedy") and not cfg.order.startswith("file:"):
        raise UsageError(f"unknown order {cfg.order!r}")
    if cfg.backend == "dense" and cfg.dump_dot:
        raise UsageError("--dump-dot needs the tdd backend")
    if cfg.gc_limit < 1 or not 1 <= cfg.cache_bits <= 28:
        raise UsageError("--gc-limit must be positive and --cache-bits within 1..28")


def _format_complex(z: complex) -> str:
    def part(x):
        return str(int(x)) if float(x).is_integer() else repr(float(x))
    sign = "-" if z.imag < 0 else "+"
    return f"{part(z.real)}{sign}{part(abs(z.imag))}i"


def run(cfg: RunConfig, out=None) -> int:
    """Run the pipeline described by `cfg`; fills ``cfg.report`` and returns an exit code."""
    out = out if out is not None else sys.stdout
    rep = cfg.report
    timings = rep.setdefault("timings", {})
    try:
        _validate(cfg)
        t0 = time.perf_counter()
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            circuit = _load_circuit(cfg)
        timings["parse"] = time.perf_counter() - t0
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    except (OSError, CircuitError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    full = build_network(circuit, cfg.hyper_edges)
    if cfg.verify and (len(full.open_indices) > MAX_OPEN_RANK
                       or (circuit.mode == "state" and circuit.num_qubits > MAX_QUBITS)):
        print(f"error: --verify is limited to {MAX_OPEN_RANK} open indices "
              f"and {MAX_QUBITS} qubits", file=sys.stderr)
        return EXIT_INPUT

    t0 = time.perf_counter()
    tstats = TetrisStats()
    net = full
    if cfg.tetris:
        net = tetris_simplify(circuit, full, constraint=cfg.tetris_constraint, stats=tstats)
    timings["tetris"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    try:
        if cfg.order == "sequential":
            order = order_sequential(net)
        elif cfg.order == "greedy":
            order = order_greedy(net)
        else:
            order = order_import(cfg.order[5:], net)
    except (OSError, OrderError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    timings["ordering"] = time.perf_counter() - t0

    rep.update(qubits=circuit.num_qubits, gates=circuit.gate_count, mode=circuit.mode,
               tensors=len(net.tensors), gate_tensors=len(net.tensors) - net.num_states)

    t0 = time.perf_counter()
    engine = result = None
    try:
        if cfg.backend == "tdd":
            engine = Engine(gc_limit=cfg.gc_limit, cache_bits=cfg.cache_bits,
                            max_nodes=cfg.max_nodes)
            levels = index_levels(full, cfg.index_order)
            result = engine.contract_network(net, order, levels)
        else:
            dense = contract_network_dense(net, order)
    except (ArenaExhausted, MemoryError, RecursionError) as exc:
        print(f"error: out of resources: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    timings["contraction"] = time.perf_counter() - t0

    if engine is not None:
        stats = engine.stats(result)
        rep["final_nodes"] = stats.final_nodes
        rep["stats"] = json.loads(stats.to_json())
    else:
        rep["final_nodes"] = None

    for stage in ("parse", "tetris", "ordering", "contraction"):
        print(f"{stage:>12}: {timings[stage]:.4f} s", file=out)
    print(f"{'tensors':>12}: {rep['tensors']} ({rep['gate_tensors']} gate tensors "
          f"from {rep['gates']} gates)", file=out)
    if rep["final_nodes"] is not None:
        print(f"{'final_nodes':>12}: {rep['final_nodes']}", file=out)
        print(stats.to_json(timings=timings), file=out)

    if cfg.amplitude is not None:
        bits = cfg.amplitude
        if len(bits) != len(net.open_indices) or set(bits) - {"0", "1"}:
            print(f"error: --amplitude needs {len(net.open_indices)} bits", file=sys.stderr)
            return EXIT_INPUT
        if engine is not None:
            amp = engine.amplitude(result, {i: int(b) for i, b in zip(net.open_indices, bits)})
        else:
            amp = complex(dense.data[tuple(int(b) for b in bits)])
        rep["amplitude"] = [amp.real, amp.imag]
        print(f"{'amplitude':>12}: {_format_complex(amp)}", file=out)

    if cfg.dump_dot and engine is not None:
        Path(cfg.dump_dot).write_text(engine.to_dot(result))
    if cfg.stats_out:
        payload = dict(rep)
        Path(cfg.stats_out).write_text(json.dumps(payload, indent=1))

    if cfg.verify:
        got = engine.result_tensor(result, net).data if engine is not None else dense.data
        ref = oracle_contract(build_network(circuit, hyper=True)).data
        err = float(np.max(np.abs(got - ref), initial=0.0))
        if circuit.mode == "state":
            sv = oracle_statevector(circuit).amplitudes.reshape(got.shape)
            err = max(err, float(np.max(np.abs(got - sv), initial=0.0)))
        rep["verify_error"] = err
        ok = err <= VERIFY_TOL
        print(f"{'verify':>12}: {'ok' if ok else 'MISMATCH'} (max abs error {err:.3g})", file=out)
        if not ok:
            return EXIT_VERIFY
    return EXIT_OK


def _on_off(text):
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return text == "on"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tddsim", description=__doc__.splitlines()[0])
    p.add_argument("input", nargs="?", help="OpenQASM 2.0 or Google RQC instance file")
    p.add_argument("--gen", metavar="FAMILY:N",
                   help="generate ghz, graph_state, qft or qft_entangled with N qubits")
    p.add_argument("--format", choices=("auto", "qasm", "rqc"), default="auto")
    p.add_argument("--qft-swaps", action="store_true", help="append the final QFT swaps")
    p.add_argument("--tetris", type=_on_off, default=True, metavar="on|off")
    p.add_argument("--tetris-constraint", choices=("max", "min"), default="max")
    p.add_argument("--hyper-edges", type=_on_off, default=True, metavar="on|off")
    p.add_argument("--order", default="greedy", help="sequential, greedy or file:PATH")
    p.add_argument("--backend", choices=("tdd", "dense"), default="tdd")
    p.add_argument("--index-order", choices=("appearance", "interleaved"), default="interleaved")
    p.add_argument("--gc-limit", type=int, default=1 << 22, metavar="N")
    p.add_argument("--cache-bits", type=int, default=20, metavar="B")
    p.add_argument("--max-nodes", type=int, default=None, metavar="N",
                   help="hard cap on stored nodes (exit 3 when exceeded)")
    p.add_argument("--verify", action="store_true", help="cross-check against the dense oracles")
    p.add_argument("--stats-out", metavar="PATH")
    p.add_argument("--amplitude", metavar="BITS", help="bits for the open indices, in order")
    p.add_argument("--dump-dot", metavar="PATH")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(
        input=args.input, gen=args.gen, format=args.format, tetris=args.tetris,
        order=args.order, hyper_edges=args.hyper_edges, backend=args.backend,
        gc_limit=args.gc_limit, cache_bits=args.cache_bits, max_nodes=args.max_nodes,
        tetris_constraint=args.tetris_constraint, index_order=args.index_order,
        qft_swaps=args.qft_swaps, verify=args.verify, stats_out=args.stats_out,
        amplitude=args.amplitude, dump_dot=args.dump_dot,
    )
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())

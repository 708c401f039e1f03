"""Batch command-line front end.

Subcommands: ``normalize`` (with ``--size`` and ``--exponent`` variants),
``sample``, ``map``, ``edpp``, ``gen``, and ``tw``.  Exact rationals print
as ``p/q``; ``--json`` wraps results with algorithm metadata.  Exit codes:
0 success, 2 usage error, 3 typed computation error.  Identical argv,
input files, and seed produce byte-identical stdout (timing metadata is
off unless ``--timing`` asks for it).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from fractions import Fraction

from .brute import DEFAULT_BRUTE_CAP, MatrixTuple
from .errors import PidppError
from .exact import format_scalar
from .fixtures import banded_random, hamiltonian_gadget, matching_matrices, partition_matrix
from .graphs import parse_bipartite_text, parse_digraph_text
from .inference import (
    DEFAULT_SEED,
    NormalizerOracle,
    Sampler,
    edpp_fractional,
    map_inference,
    z_mk_all,
)
from .matrix import format_matrix_text, load_matrix, sparsity_union
from .treedecomp import (
    decompose,
    format_decomposition,
    make_nice,
    parse_decomposition,
    to_plain,
    validate,
)

ENV_BRUTE_CAP = "PIDPP_MAX_BRUTE_N"


def _brute_cap() -> int:
    raw = os.environ.get(ENV_BRUTE_CAP)
    if raw is None:
        return DEFAULT_BRUTE_CAP
    try:
        return int(raw)
    except ValueError:
        raise PidppError(f"{ENV_BRUTE_CAP} must be an integer, got {raw!r}")


def _oracle(args) -> NormalizerOracle:
    return NormalizerOracle(
        strategy=args.algo,
        brute_cap=_brute_cap(),
        workers=getattr(args, "workers", 1),
    )


def _subset_str(subset) -> str:
    return "{" + ",".join(str(i + 1) for i in sorted(subset)) + "}"


def _emit(args, plain: str, payload: dict, started: float) -> None:
    if args.json:
        if getattr(args, "timing", False):
            payload["wall_time_s"] = round(time.monotonic() - started, 6)
        print(json.dumps(payload, sort_keys=True))
    else:
        print(plain)


def _bound_metadata(bound) -> dict:
    meta = {"strategy": bound.strategy}
    if bound.width is not None:
        meta["width"] = bound.width
    if bound.max_rank is not None:
        meta["max_rank"] = bound.max_rank
    return meta


def _cmd_normalize(args) -> int:
    started = time.monotonic()
    matrices = [load_matrix(path) for path in args.matrices]
    T = MatrixTuple.of(matrices)
    oracle = _oracle(args)
    bound = oracle.bind(T)
    if args.size is not None:
        values = z_mk_all(T, bound)
        if not 0 <= args.size <= T.n:
            raise PidppError(f"--size {args.size} outside [0, {T.n}]")
        value = values[args.size]
        plain = format_scalar(value)
        payload = {
            "result": plain,
            "size": args.size,
            "algorithm": _bound_metadata(bound),
        }
    elif args.exponent is not None:
        if T.m != 1:
            raise PidppError("--exponent applies to a single matrix")
        return _run_edpp(args, matrices[0], started)
    else:
        value = bound.value(T)
        plain = format_scalar(value)
        payload = {"result": plain, "algorithm": _bound_metadata(bound)}
    _emit(args, plain, payload, started)
    return 0


def _run_edpp(args, matrix, started) -> int:
    p = Fraction(args.exponent)
    oracle = _oracle(args)
    estimate = edpp_fractional(matrix, p, oracle)
    if estimate.exact:
        plain = format_scalar(estimate.lo)
    else:
        plain = f"{format_scalar(estimate.lo)} {format_scalar(estimate.hi)}"
    payload = {
        "lo": format_scalar(estimate.lo),
        "hi": format_scalar(estimate.hi),
        "exact": estimate.exact,
        "branch": estimate.branch,
        "exponent": str(estimate.exponent),
        "guarantee_log2": str(estimate.guarantee_log2),
    }
    _emit(args, plain, payload, started)
    return 0


def _cmd_edpp(args) -> int:
    started = time.monotonic()
    matrix = load_matrix(args.matrix)
    return _run_edpp(args, matrix, started)


def _cmd_sample(args) -> int:
    started = time.monotonic()
    matrices = [load_matrix(path) for path in args.matrices]
    T = MatrixTuple.of(matrices)
    oracle = _oracle(args)
    sampler = Sampler(T, oracle)
    draws = []
    for i in range(args.count):
        draws.append(sampler.draw(args.seed + i))
    plain = "\n".join(_subset_str(d) for d in draws)
    payload = {
        "draws": [sorted(i + 1 for i in d) for d in draws],
        "seed": args.seed,
        "algorithm": _bound_metadata(sampler.bound),
    }
    _emit(args, plain, payload, started)
    return 0


def _cmd_map(args) -> int:
    started = time.monotonic()
    matrix = load_matrix(args.matrix)
    oracle = _oracle(args)
    subset, value, certificate = map_inference(
        matrix, oracle, seed=args.seed, trials=args.trials
    )
    plain = f"{_subset_str(subset)} {format_scalar(value)}"
    payload = {
        "subset": sorted(i + 1 for i in subset),
        "value": format_scalar(value),
        "exponent": certificate.exponent,
        "trials": certificate.trials,
        "factor_log2": certificate.factor_log2,
    }
    _emit(args, plain, payload, started)
    return 0


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _cmd_gen(args) -> int:
    kind = args.kind
    out = []
    if kind == "matching":
        graph = parse_bipartite_text(_read_text(args.input))
        a, b = matching_matrices(graph)
        out = [("A", a), ("B", b)]
    elif kind == "hampath":
        graph = parse_digraph_text(_read_text(args.input))
        a, b, c = hamiltonian_gadget(graph)
        out = [("A", a), ("B", b), ("C", c)]
    elif kind == "partition":
        groups = []
        for chunk in args.groups.split("|"):
            groups.append([int(tok) - 1 for tok in chunk.split(",") if tok])
        out = [("B", partition_matrix(groups))]
    elif kind == "banded":
        matrix = banded_random(
            args.n, args.bandwidth, rank=args.rank, seed=args.seed
        )
        out = [("A", matrix)]
    else:  # pragma: no cover - argparse restricts choices
        raise PidppError(f"unknown generator {kind!r}")
    if args.prefix:
        for name, matrix in out:
            path = f"{args.prefix}{name.lower()}.mat"
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(format_matrix_text(matrix))
            print(path)
    else:
        for name, matrix in out:
            print(f"# {name}")
            sys.stdout.write(format_matrix_text(matrix))
    return 0


def _sparsity_from_args(args):
    if args.graph:
        digraph = parse_digraph_text(_read_text(args.graph))
        from .matrix import SparsityGraph

        edges = set()
        for u, v in digraph.edges:
            if u != v:
                edges.add((min(u, v), max(u, v)))
        return SparsityGraph(n=digraph.n, edges=frozenset(edges))
    matrices = [load_matrix(path) for path in args.matrices]
    return sparsity_union(matrices)


def _cmd_tw_decompose(args) -> int:
    graph = _sparsity_from_args(args)
    decomposition = decompose(graph, mode=args.mode)
    nice = make_nice(decomposition, graph)
    sys.stdout.write(format_decomposition(nice))
    return 0


def _cmd_tw_validate(args) -> int:
    graph = _sparsity_from_args(args)
    nice = parse_decomposition(_read_text(args.decomposition))
    report = validate(graph, to_plain(nice))
    if report.ok:
        print("ok")
    else:
        print(f"violation: {report.violation} ({report.detail})")
    return 0


def _cmd_tw_report(args) -> int:
    graph = _sparsity_from_args(args)
    decomposition = decompose(graph, mode=args.mode)
    nice = make_nice(decomposition, graph)
    payload = {
        "n": graph.n,
        "edges": len(graph.edges),
        "width": decomposition.width,
        "nice_width": nice.width,
        "nice_nodes": len(nice.nodes),
    }
    print(json.dumps(payload, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pidpp",
        description="Exact inference for products of determinantal point processes",
    )
    parser.add_argument("--trace", action="store_true", help="debug-level tracing")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--json", action="store_true", help="JSON output")
        p.add_argument("--timing", action="store_true",
                       help="include wall time in JSON output")
        p.add_argument(
            "--algo",
            default="auto",
            choices=["auto", "brute", "rank", "treewidth"],
            help="normalizer strategy",
        )
        p.add_argument("--workers", type=int, default=1,
                       help="worker count for parallel-capable stages")

    p_norm = sub.add_parser("normalize", help="normalizing constants")
    add_common(p_norm)
    p_norm.add_argument("--size", type=int, default=None,
                        help="fixed subset size k")
    p_norm.add_argument("--exponent", default=None,
                        help="exponentiated process exponent p")
    p_norm.add_argument("matrices", nargs="+")
    p_norm.set_defaults(func=_cmd_normalize)

    p_sample = sub.add_parser("sample", help="draw exact samples")
    add_common(p_sample)
    p_sample.add_argument("--count", type=int, default=1)
    p_sample.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_sample.add_argument("matrices", nargs="+")
    p_sample.set_defaults(func=_cmd_sample)

    p_map = sub.add_parser("map", help="randomized approximate MAP inference")
    add_common(p_map)
    p_map.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_map.add_argument("--trials", type=int, default=1)
    p_map.add_argument("matrix")
    p_map.set_defaults(func=_cmd_map)

    p_edpp = sub.add_parser("edpp", help="exponentiated normalizer")
    add_common(p_edpp)
    p_edpp.add_argument("--exponent", required=True)
    p_edpp.add_argument("matrix")
    p_edpp.set_defaults(func=_cmd_edpp)

    p_gen = sub.add_parser("gen", help="fixture generators")
    gen_sub = p_gen.add_subparsers(dest="kind", required=True)
    g_match = gen_sub.add_parser("matching")
    g_match.add_argument("input", help="bipartite graph file (nL nR m header)")
    g_match.add_argument("--prefix", default=None)
    g_ham = gen_sub.add_parser("hampath")
    g_ham.add_argument("input", help="digraph file (n m header)")
    g_ham.add_argument("--prefix", default=None)
    g_part = gen_sub.add_parser("partition")
    g_part.add_argument("groups", help="e.g. '1,2|3,4' (1-based)")
    g_part.add_argument("--prefix", default=None)
    g_band = gen_sub.add_parser("banded")
    g_band.add_argument("--n", type=int, required=True)
    g_band.add_argument("--bandwidth", type=int, required=True)
    g_band.add_argument("--rank", type=int, default=None)
    g_band.add_argument("--seed", type=int, default=0)
    g_band.add_argument("--prefix", default=None)
    p_gen.set_defaults(func=_cmd_gen)

    p_tw = sub.add_parser("tw", help="tree decomposition tools")
    tw_sub = p_tw.add_subparsers(dest="action", required=True)

    def add_tw_inputs(p):
        p.add_argument("--graph", default=None, help="digraph/graph file")
        p.add_argument("matrices", nargs="*")

    t_dec = tw_sub.add_parser("decompose")
    add_tw_inputs(t_dec)
    t_dec.add_argument("--mode", default="heuristic", choices=["heuristic", "exact"])
    t_dec.set_defaults(func=_cmd_tw_decompose)
    t_val = tw_sub.add_parser("validate")
    add_tw_inputs(t_val)
    t_val.add_argument("--decomposition", required=True,
                       help="decomposition file to check")
    t_val.set_defaults(func=_cmd_tw_validate)
    t_rep = tw_sub.add_parser("report")
    add_tw_inputs(t_rep)
    t_rep.add_argument("--mode", default="heuristic", choices=["heuristic", "exact"])
    t_rep.set_defaults(func=_cmd_tw_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.trace:
        logging.basicConfig(level=logging.DEBUG, stream=sys.stderr)
    try:
        return args.func(args)
    except PidppError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Exit codes: 0 success, 2 parse/format error, 3 semantic error, 4 oracle
mismatch, 5 resource guard exceeded.  Data goes to stdout, diagnostics to
stderr.  ``QFG_TOL`` (``"abs"`` or ``"abs,rel"``) overrides the default
tolerance.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
from typing import Sequence

import numpy as np

from . import io as qio
from .errors import ArgumentError, FormatError, QFGError, ResourceError
from .graph import boundary_variables, brute_force_exterior, exterior_function, internal_variables, partition_sum
from .montecarlo import anneal_ladder, augment_conjugate, estimate_Z, sample
from .qec import (
    ErrorSpec,
    from_pauli_coeffs,
    rep3_symbolic_table,
    rep3_syndrome_table,
    render_pauli_numeric,
    render_pauli_symbolic,
    shor_channel_table,
    shor_recover,
    shor_symbolic_table,
)
from .quantum import Measure, build_graph, conditional_next, joint_distribution, validate_measurement
from .tensor import Tolerance, max_abs

EXIT_OK, EXIT_PARSE, EXIT_SEMANTIC, EXIT_ORACLE, EXIT_RESOURCE = 0, 2, 3, 4, 5


class OracleMismatch(Exception):
    pass


def fmt_real(x: float, raw: bool = False) -> str:
    return float(x).hex() if raw else f"{float(x):.12g}"


def fmt_complex(z: complex, raw: bool = False) -> str:
    z = complex(z)
    if raw:
        return f"{z.real.hex()},{z.imag.hex()}"
    if z.imag == 0:
        return f"{z.real:.12g}"
    return f"{z.real:.12g}{z.imag:+.12g}j"


def _print_table(names: Sequence[str], table: np.ndarray, raw: bool, real: bool = False, total: bool = False):
    width = max([len(n) for n in names] + [1])
    print("  ".join(n.rjust(width) for n in names) + "  value")
    for idx in itertools.product(*(range(n) for n in table.shape)):
        v = table[idx]
        s = fmt_real(v, raw) if real else fmt_complex(v, raw)
        print("  ".join(str(i).rjust(width) for i in idx) + "  " + s)
    if total:
        print("total " + (fmt_real(table.sum(), raw) if real else fmt_complex(table.sum(), raw)))


# -- subcommands ------------------------------------------------------------


def cmd_contract(args, tol: Tolerance) -> int:
    kind, doc = qio.load_document(args.file)
    if kind != "graph":
        raise FormatError("contract expects a graph file")
    gf = qio.parse_graph(doc)
    g = gf.graph
    if args.partition_sum:
        value = partition_sum(g)
        if args.oracle:
            ref = complex(brute_force_exterior(g, sum_half_edges=True))
            if abs(value - ref) > tol.bound(abs(ref)):
                raise OracleMismatch(f"partition sum {value} differs from enumeration {ref}")
        print(fmt_complex(value, args.raw))
        return EXIT_OK
    if args.box is None:
        box = None
    elif args.box in gf.boxes:
        box = gf.boxes[args.box]
    else:
        raise ArgumentError(f"unknown box {args.box!r}; available: {sorted(gf.boxes)}")
    order = None
    if args.order == "user":
        if not args.order_vars:
            raise ArgumentError("--order user needs --order-vars")
        order = [int(v) for v in args.order_vars.split(",")]
    elif args.order == "forward":
        order = internal_variables(g, box)
    elif args.order == "backward":
        order = internal_variables(g, box)[::-1]
    ext = exterior_function(g, box, order)
    if args.oracle:
        ref = brute_force_exterior(g, box)
        if max_abs(ext - ref) > tol.bound(max_abs(ref)):
            raise OracleMismatch(f"contraction differs from enumeration by {max_abs(ext - ref):.3g}")
    names = [g.name(v) or f"v{v}" for v in boundary_variables(g, box)]
    if ext.ndim == 0:
        print(fmt_complex(complex(ext), args.raw))
    else:
        _print_table(names, ext, args.raw)
    return EXIT_OK


def _parse_condition(spec: str | None) -> dict[int, int]:
    if not spec:
        return {}
    out = {}
    for part in spec.split(","):
        key, _, val = part.partition("=")
        key = key.strip().lstrip("yY")
        try:
            out[int(key)] = int(val)
        except ValueError as exc:
            raise ArgumentError(f"bad condition {part!r}; use k=value") from exc
    return out


def cmd_joint(args, tol: Tolerance) -> int:
    kind, doc = qio.load_document(args.file)
    if kind != "timeline":
        raise FormatError("joint expects a timeline file")
    t = qio.parse_timeline(doc)
    cond = _parse_condition(args.condition)
    meas = [i for i, s in enumerate(t.steps) if isinstance(s, Measure)]
    steps = list(t.steps)
    for k, y in cond.items():
        if not 1 <= k <= len(meas):
            raise ArgumentError(f"condition refers to measurement {k}, timeline has {len(meas)}")
        steps[meas[k - 1]] = Measure(steps[meas[k - 1]].family, y)
    t = type(t)(t.dimension, t.initial, steps)
    if args.next:
        prefix = [s.observed for s in t.measurements]
        k = next((i for i, y in enumerate(prefix) if y is None), len(prefix))
        if any(y is not None for y in prefix[k:]):
            raise ArgumentError("--next needs the conditioned outcomes to form a prefix")
        dist = conditional_next(t, prefix[:k], tol)
        _print_table([f"Y{k + 1}"], dist, args.raw, real=True, total=True)
        return EXIT_OK
    table = joint_distribution(t, order=args.order, tol=tol)
    names = [f"Y{j + 1}" for j, s in enumerate(t.measurements) if s.observed is None]
    if args.json:
        print(json.dumps({"outcomes": names, "shape": list(table.shape), "p": table.ravel().tolist()}))
        return EXIT_OK
    if table.ndim == 0:
        print(f"total {fmt_real(float(table), args.raw)}")
    else:
        _print_table(names, table, args.raw, real=True, total=True)
    return EXIT_OK


def _parse_error(spec: str, location: int, seed: int | None) -> ErrorSpec:
    if spec == "random":
        rng = np.random.default_rng(seed)
        w = rng.normal(size=4) + 1j * rng.normal(size=4)
    else:
        try:
            w = [complex(p.strip().replace("i", "j")) for p in spec.split(",")]
        except ValueError as exc:
            raise ArgumentError(f"bad --error {spec!r}; give four complex coefficients") from exc
        if len(w) != 4:
            raise ArgumentError("--error needs exactly four coefficients w0,w1,w2,w3")
    return ErrorSpec(location, from_pauli_coeffs(w))


def cmd_qec(args, tol: Tolerance) -> int:
    error = _parse_error(args.error, args.location, args.seed)
    if args.code == "rep3":
        sym = rep3_symbolic_table(args.location, args.hadamard)
        num = rep3_syndrome_table(error, args.hadamard)
        print(f"length-3 code, error at qubit {args.location}" + (", H-wrapped" if args.hadamard else ""))
        print("Y2 Y1  channel (symbolic)  |  channel (numeric)")
        for s in sorted(sym):
            print(f" {s[0]}  {s[1]}  {render_pauli_symbolic(sym[s])}  |  {render_pauli_numeric(num[s])}")
        return EXIT_OK
    pos = (args.location - 1) % 3 + 1
    inner = rep3_symbolic_table(pos, hadamard_wrapped=True)
    print(f"Shor code, error at qubit {args.location} (block {(args.location - 1) // 3 + 1}, position {pos})")
    print("inner block seen by the outer code:")
    print("Y2 Y1  channel")
    for s in sorted(inner):
        print(f" {s[0]}  {s[1]}  {render_pauli_symbolic(inner[s])}")
    if args.syndrome:
        syn = tuple(int(b) for b in args.syndrome.replace(",", ""))
        table = shor_channel_table(error)
        print(f"syndrome {''.join(map(str, syn))}: {render_pauli_numeric(table[syn])}")
    else:
        print("achievable syndromes (blocks 1-3 Y2Y1, outer Y2Y1):")
        for s, coef in shor_symbolic_table(args.location).items():
            print(f" {''.join(map(str, s[:2]))} {''.join(map(str, s[2:4]))} {''.join(map(str, s[4:6]))} {''.join(map(str, s[6:]))}  {render_pauli_symbolic(coef)}")
    if args.recover:
        syn = tuple(int(b) for b in args.syndrome.replace(",", "")) if args.syndrome else None
        rep = shor_recover(error, syn, seed=args.seed, tol=tol)
        print(f"syndrome {''.join(map(str, rep.syndrome))}  correction σ{rep.correction}  fidelity {rep.fidelity:.9f}")
    return EXIT_OK


def cmd_mc(args, tol: Tolerance) -> int:
    kind, doc = qio.load_document(args.file)
    if kind == "timeline":
        g, reg = build_graph(qio.parse_timeline(doc), tol)
        pairs = reg.mirror_pairs
    else:
        gf = qio.parse_graph(doc)
        g, pairs = gf.graph, gf.mirror_pairs
    if args.ladder is not None:
        rhos = [float(r) for r in args.ladder.split(",") if r.strip()]
        rep = anneal_ladder(g, rhos, args.K, args.seed, pairs if args.augment else None, method=args.method)
    else:
        s = sample(g, args.scheme, args.K, args.seed, rho=args.rho, method=args.method)
        if args.augment:
            s = augment_conjugate(s, g, pairs, tol)
        z = args.z
        if z not in (None, "exact", "reciprocal"):
            z = float(z)
        rep = estimate_Z(s, g, z_proposal=z)
    d = rep.to_dict()
    if args.raw:
        d["estimate"] = [rep.estimate.real.hex(), rep.estimate.imag.hex()]
        d["std_error"] = rep.std_error.hex()
    print(json.dumps(d, sort_keys=True))
    return EXIT_OK


def cmd_validate(args, tol: Tolerance) -> int:
    kind, doc = qio.load_document(args.file)
    if kind == "graph":
        gf = qio.parse_graph(doc)
        print(f"graph ok: {len(gf.graph.variables)} variables, {len(gf.graph.factors)} factors")
        return EXIT_OK
    t = qio.parse_timeline(doc)
    status = EXIT_OK
    for j, s in enumerate(t.measurements):
        rep = validate_measurement(s.family, tol)
        print(f"measurement {j + 1}: {'ok' if rep.ok else 'violation'} (max deviation {rep.max_deviation:.3g})")
        if not rep.ok:
            status = EXIT_SEMANTIC
    if status == EXIT_OK:
        t.validate(tol)
        print("timeline ok")
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qfg", description="Complex-valued factor graphs for quantum probabilities.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("contract", help="exterior function or partition sum of a graph file")
    c.add_argument("file")
    c.add_argument("--box", help="name of a box defined in the file (default: whole graph)")
    c.add_argument("--partition-sum", action="store_true")
    c.add_argument("--order", choices=["greedy", "user", "forward", "backward"], default="greedy")
    c.add_argument("--order-vars", help="comma-separated elimination order for --order user")
    c.add_argument("--oracle", action="store_true", help="cross-check against brute-force enumeration")
    c.add_argument("--raw", action="store_true", help="print binary64 hex")
    c.set_defaults(func=cmd_contract)

    j = sub.add_parser("joint", help="joint outcome distribution of a timeline file")
    j.add_argument("file")
    j.add_argument("--condition", help="observed outcomes, e.g. 1=0,2=1 (1-based measurement index)")
    j.add_argument("--next", action="store_true", help="print the distribution of the next outcome only")
    j.add_argument("--order", choices=["greedy", "forward", "backward"], default="greedy")
    j.add_argument("--json", action="store_true")
    j.add_argument("--raw", action="store_true")
    j.set_defaults(func=cmd_joint)

    q = sub.add_parser("qec", help="repetition and Shor code tables")
    q.add_argument("code", choices=["rep3", "shor"])
    q.add_argument("--error", required=True, help="w0,w1,w2,w3 (complex allowed) or 'random'")
    q.add_argument("--location", type=int, required=True)
    q.add_argument("--syndrome", help="syndrome bits, e.g. 00000011")
    q.add_argument("--hadamard", action="store_true", help="rep3: wrap the data line in H")
    q.add_argument("--recover", action="store_true", help="shor: run recovery and report fidelity")
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(func=cmd_qec)

    m = sub.add_parser("mc", help="Monte Carlo partition-sum estimate")
    m.add_argument("file")
    m.add_argument("--scheme", choices=["uniform", "abs_f", "abs_f_annealed"], default="abs_f")
    m.add_argument("--rho", type=float)
    m.add_argument("-K", type=int, default=10_000)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--z", default="exact", help="normalizer of |f|**rho: exact, reciprocal or a number")
    m.add_argument("--ladder", help="comma-separated annealing exponents in (0, 1)")
    m.add_argument("--augment", action="store_true", help="add conjugate mirror samples")
    m.add_argument("--method", choices=["auto", "exact", "metropolis"], default="auto")
    m.add_argument("--raw", action="store_true")
    m.set_defaults(func=cmd_mc)

    v = sub.add_parser("validate", help="schema and measurement-family check")
    v.add_argument("file")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        tol = Tolerance.from_env()
        return args.func(args, tol)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OracleMismatch as exc:
        print(f"oracle mismatch: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except ResourceError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except QFGError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SEMANTIC


if __name__ == "__main__":
    sys.exit(main())

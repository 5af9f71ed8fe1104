"""Command line entry point.

    softqec run FILE [--seed N] [--jobs N] [--out DIR] [--only NAME] [--cache DIR]
    softqec selftest

Exit codes: 0 success, 1 selftest failure, 2 usage error, 3 malformed
experiment file, 4 unresolved name (unknown mode, key or experiment),
5 I/O error.
"""
from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

EXIT_OK = 0
EXIT_SELFTEST = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_UNRESOLVED = 4
EXIT_IO = 5


def _summary_row(exp, res) -> str:
    m, e = res.mean, res.end_mean
    last = -1

    def inf(x):
        return f"{1.0 - x:10.3e}" if np.isfinite(x) else f"{'-':>10}"

    if exp.config.mode == "zeno":
        return (f"{exp.name:<18} zeno {exp.n_realizations:4d}  WM {inf(m['F_a'][last])}  NM {inf(m['F_D'][last])}"
                f"  NP {inf(m['F_NP'][last])}  SP {m['sp'][last]:.4f}")
    if exp.config.mode == "free":
        return f"{exp.name:<18} free {exp.n_realizations:4d}  NP {inf(m['F_NP'][last])}"
    ratio = res.qec_ratio if exp.config.mode == "qec" else math.nan
    return (f"{exp.name:<18} {exp.config.mode:<4} {exp.n_realizations:4d}  F {inf(m['F_a'][last])}  F' {inf(m['Fp_a'][last])}"
            f"  F_D {inf(m['F_D'][last])}  F'_D {inf(m['Fp_D'][last])}"
            f"  end1q {inf(e['F_single'])} / D {inf(e['F_single_D'])}  ratio {ratio:7.3f}")


def cmd_run(args) -> int:
    from .config import ConfigError, UnresolvedName, load_experiments
    from .protocol import run_ensemble, write_ensemble_csv, write_trace_csv

    try:
        exps = load_experiments(args.file)
    except UnresolvedName as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNRESOLVED
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"error: cannot read {args.file}: {exc}", file=sys.stderr)
        return EXIT_IO
    if args.only:
        names = {e.name for e in exps}
        missing = [n for n in args.only if n not in names]
        if missing:
            print(f"error: no experiment named {', '.join(missing)}", file=sys.stderr)
            return EXIT_UNRESOLVED
        exps = [e for e in exps if e.name in args.only]
    if args.seed is not None:
        exps = [e.with_seed(args.seed) for e in exps]
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create {out}: {exc}", file=sys.stderr)
        return EXIT_IO
    rows = []
    for exp in exps:
        t0 = time.time()
        res = run_ensemble(exp.config, exp.n_realizations, exp.exclusion, jobs=args.jobs, cache_dir=args.cache)
        try:
            write_trace_csv(res.traces, out / f"{exp.output}_records.csv")
            write_ensemble_csv(res, out / f"{exp.output}_summary.csv")
        except OSError as exc:
            print(f"error: cannot write results: {exc}", file=sys.stderr)
            return EXIT_IO
        rows.append(_summary_row(exp, res))
        print(f"{exp.name}: {exp.n_realizations} realizations in {time.time() - t0:.0f} s", file=sys.stderr)
    print("final infidelities (last measurement) and end-of-decoding single-qubit values")
    for r in rows:
        print(r)
    return EXIT_OK


# -- selftest ----------------------------------------------------------------


def _check_shapes() -> str | None:
    from .shapes import default_library, residuals

    for name, s in default_library().items():
        r = residuals(s).max_abs(s.order)
        if not r < 1e-10:
            return f"shape {name}: residual {r:.3e}"
    return None


def _check_sequences() -> str | None:
    from fractions import Fraction

    from .network import design_coupling, star_graph
    from .sequences import build_single_qubit_gate, build_zz_sequence, validate_schedule

    g = star_graph(5, design_coupling(5))
    cases = [(build_single_qubit_gate(g, {}), None)]
    cases += [(build_single_qubit_gate(g, {q: ("y", math.pi / 2)}), None) for q in g.qubits]
    cases += [(build_zz_sequence(g, [(k, 6)]), {(k, 6): Fraction(1, 2)}) for k in range(1, 6)]
    cases.append((build_zz_sequence(g, []), None))
    for sched, coupled in cases:
        rep = validate_schedule(sched, g, coupled)
        if not rep.passed:
            return f"{sched.label}: {rep.failures[0]}"
    return None


def _check_code() -> str | None:
    from .code513 import generators, syndrome_table

    gens = generators()
    for i, a in enumerate(gens):
        for b in gens[i + 1:]:
            if not a.commutes_with(b):
                return f"generators {a} and {b} anticommute"
    try:
        syndrome_table(gens)
    except ValueError as exc:
        return str(exc)
    return None


def _check_integrator() -> str | None:
    from .engine import Integrator, ReducedEvolution
    from .gates import cz_gate, compile_circuit, Circuit, ideal_unitary
    from .metrics import fidelity
    from .network import HamiltonianContext, design_coupling, star_graph

    g = star_graph(5, design_coupling(5))
    c = Circuit(((cz_gate(2, 6),),))
    ctx = HamiltonianContext(g, None, compile_circuit(c, g))
    v0 = np.eye(64, dtype=complex)[:, [0, 2, 32, 34]]
    out = []
    for S in (256, 512):
        V = Integrator(ctx, S).advance(ReducedEvolution.from_columns(v0), c.duration())
        out.append(V.matrix)
    diff = float(np.max(np.abs(out[0] - out[1])))
    if diff > 1e-8:
        return f"RK4 step halving changed amplitudes by {diff:.3e}"
    F = fidelity(out[1], ideal_unitary(c, 6) @ v0)
    if 1 - F > 1e-6:
        return f"CZ infidelity {1 - F:.3e}"
    return None


SELFTESTS = (
    ("shape residuals", _check_shapes),
    ("toggling validation", _check_sequences),
    ("code algebra", _check_code),
    ("RK4 convergence", _check_integrator),
)


def cmd_selftest(args=None) -> int:
    ok = True
    for name, fn in SELFTESTS:
        try:
            err = fn()
        except Exception as exc:  # any crash is a failure
            err = f"{type(exc).__name__}: {exc}"
        print(f"{'PASS' if err is None else 'FAIL'}  {name}" + ("" if err is None else f"  ({err})"))
        ok &= err is None
    return EXIT_OK if ok else EXIT_SELFTEST


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="softqec", description="Pulse-level [[5,1,3]] QEC and Zeno simulations")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the experiments in a YAML file")
    r.add_argument("file")
    r.add_argument("--seed", type=int, default=None, help="override every experiment's seed")
    r.add_argument("--jobs", type=int, default=1, help="worker processes")
    r.add_argument("--out", default="results", help="output directory")
    r.add_argument("--only", action="append", help="run only this experiment (repeatable)")
    r.add_argument("--cache", default=None, help="directory for per-realization result cache")
    r.set_defaults(func=cmd_run)
    s = sub.add_parser("selftest", help="fast invariant checks")
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", 1) is not None and getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point: ``lcsft synth|analyze|run|fit|threshold``.

Exit codes: 0 success, 2 invalid input, 3 a self-test check failed.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .experiment import (ConfigError, ExperimentConfig, curve, fit_power_law, parse_gate, pseudothreshold,
                         read_csv, rows_to_csv, run)

EXIT_OK, EXIT_INVALID, EXIT_CHECK = 0, 2, 3
log = logging.getLogger("lcsft")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="experiment config (INI, section [experiment])")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _gate_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gate", default="H0", help="EC, H0..H2, S0..S2, CX01.. or T0..T2")
    p.add_argument("--flavor", default="flagged_with_stabs", choices=("bare", "flagged", "flagged_with_stabs"))


def _spec(args):
    from .synth import GateSpec

    spec = parse_gate(args.gate)
    if spec is None:
        raise ConfigError("this command needs a logical gate, not EC")
    return GateSpec(spec.kind, spec.targets, "bare" if spec.kind == "T" else args.flavor)


def cmd_synth(args) -> int:
    from .code import lcs_15_3_3
    from .synth import synth_logical

    g = synth_logical(lcs_15_3_3(), _spec(args))
    log.info("%s (%s): %d entangling gates, %d flag qubits", g.spec.label, g.spec.flavor,
             g.entangling_count, len(g.flag_qubits))
    _emit(g.circuit.to_text() + "\n", args.out)
    return EXIT_OK


def cmd_analyze(args) -> int:
    if args.self_test:
        return _self_test(args)
    from .code import lcs_15_3_3
    from .faults import check_distinguishability, classify_fault_pairs, counting_policy
    from .synth import synth_logical

    code = lcs_15_3_3()
    spec = _spec(args)
    g = synth_logical(code, spec)
    lines = [f"gate {spec.label} ({spec.flavor})",
             f"entangling gates {g.entangling_count}, flag qubits {len(g.flag_qubits)}"]
    rep = classify_fault_pairs(g.circuit, code, counting_policy(spec.kind))
    lines.append(f"uncorrectable fault pairs {rep.uncorrectable}/{rep.total_pairs}")
    if spec.kind != "T":
        d = check_distinguishability(g.circuit, code)
        lines.append(f"distinguishable at t=1: {d.distinguishable}")
    if args.distance and spec.kind != "T":
        from .faults import circuit_distance
        from .protocols import input_states, memory_circuit

        dist = min(circuit_distance(memory_circuit(code, spec, s).circuit) for s in input_states(code, spec))
        lines.append(f"memory circuit distance {dist}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _self_test(args) -> int:
    """Fast exact checks: fault-pair counts, distinguishability and 1-FT injection."""
    from .code import lcs_15_3_3
    from .faults import check_distinguishability, classify_fault_pairs, counting_policy
    from .protocols import gadget
    from .synth import GateSpec, synth_logical

    code = lcs_15_3_3()
    results = []
    for (kind, tg, flavor), want in {("H", (0,), "bare"): (66, 1953), ("H", (0,), "flagged"): (68, 44850),
                                     ("CX", (0, 1), "bare"): (28, 16290),
                                     ("CX", (0, 1), "flagged"): (36, 69378)}.items():
        c = synth_logical(code, GateSpec(kind, tg, flavor)).circuit
        rep = classify_fault_pairs(c, code, counting_policy(kind))
        results.append((f"pairs {kind}{''.join(map(str, tg))} {flavor}",
                        (rep.uncorrectable, rep.total_pairs) == want))
    specs = [GateSpec("H", (0,)), GateSpec("S", (0,)), GateSpec("CX", (0, 1))]
    for s in specs:
        d = check_distinguishability(synth_logical(code, s).circuit, code)
        results.append((f"distinguishable {s.label}", d.distinguishable))
    for s in [None] + specs:
        _, n_fail, _ = gadget(code, s).inject_all()
        results.append((f"1-FT injection {'EC' if s is None else s.label}", n_fail == 0))
    text = "".join(f"{'PASS' if ok else 'FAIL'} {name}\n" for name, ok in results)
    _emit(text, args.out)
    return EXIT_OK if all(ok for _, ok in results) else EXIT_CHECK


def _load(args) -> ExperimentConfig:
    if not args.config:
        raise ConfigError("--config is required")
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def cmd_run(args) -> int:
    cfg = _load(args)
    if args.jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    rows = run(cfg, args.jobs)
    _emit(rows_to_csv(rows), args.out or cfg.out)
    return EXIT_OK


def _curve_from(args):
    if not args.input:
        raise ConfigError("--input results CSV is required")
    try:
        rows = read_csv(args.input)
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read results: {exc}") from exc
    pts = curve(rows, args.state)
    if not pts:
        raise ConfigError(f"no rows for input {args.state!r}")
    return rows, pts


def cmd_fit(args) -> int:
    _, pts = _curve_from(args)
    try:
        fit = fit_power_law(pts)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _emit(f"{fit}\n", args.out)
    return EXIT_OK


def cmd_threshold(args) -> int:
    rows, pts = _curve_from(args)
    n_g = args.n_g
    if n_g is None:
        spec = parse_gate(rows[0]["gate"]) if not rows[0]["protocol"].startswith("magic") else None
        n_g = 2 if spec is not None and spec.kind == "CX" else 1
    lo, hi = pseudothreshold(pts, n_g)
    _emit(f"p_minus (n_G={n_g}) {lo}\np_plus (3 qubits) {hi}\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lcsft", description="Flag-based fault-tolerant gates on the [[15,3,3]] LCS code")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="emit a synthesized logical gate circuit")
    _common(p)
    _gate_arg(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("analyze", help="fault-pair counts, distinguishability, circuit distance")
    _common(p)
    _gate_arg(p)
    p.add_argument("--distance", action="store_true", help="also compute memory-circuit distances")
    p.add_argument("--self-test", action="store_true", help="run the exact checks; exit 3 on failure")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("run", help="run an experiment config and write CSV")
    _common(p)
    p.set_defaults(func=cmd_run)

    for name, fn, helptext in (("fit", cmd_fit, "fit p_L = a p^nu to a results CSV"),
                               ("threshold", cmd_threshold, "pseudothresholds from a results CSV")):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("--input", help="results CSV written by 'run'")
        p.add_argument("--state", default="avg", help="input-state label of the curve (default avg)")
        if name == "threshold":
            p.add_argument("--n-g", dest="n_g", type=int, help="qubits of the lower reference")
        p.set_defaults(func=fn)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

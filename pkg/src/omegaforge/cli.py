"""Command line surface.

Exit codes: 0 for a computed result (including INVALID machine runs,
which are outcomes, not tool errors), 1 for domain errors (bad
checkpoints, unreachable oracles, malformed theories), 2 for usage
errors. Reports go to stdout as JSON (default) or CSV with a schema
version field; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import complexity as cx
from . import lawful, omega
from .config import Config, parse_threshold, resolve_config
from .explorer import (
    CheckpointError,
    ExplorationStore,
    ExploreBudget,
    checkpoint_filename,
    explore,
    read_checkpoint,
    serialize_checkpoint,
    write_checkpoint,
)
from .machine import MachineLimitError, machine_version_hash, run

SCHEMA = "omegaforge-report/1"

_DOMAIN_ERRORS = (
    ValueError,
    OSError,
    CheckpointError,
    MachineLimitError,
    omega.LedgerError,
    omega.OracleNotConverged,
    cx.ExactnessError,
    cx.MalformedTheoryError,
)


def _bits_arg(text: str) -> str:
    if text.strip("01") != "" and text != "":
        raise argparse.ArgumentTypeError(f"not a bit string: {text!r}")
    return text


def _report(**fields) -> dict:
    base = {"schema": SCHEMA, "machine_version": machine_version_hash()}
    base.update(fields)
    return base


def _budget(cfg: Config) -> ExploreBudget:
    return ExploreBudget(cfg.max_len, cfg.max_steps)


def _checkpoint_path(cfg: Config, budget: ExploreBudget) -> Path:
    return Path(cfg.checkpoint_dir) / checkpoint_filename(budget)


def _load_or_explore(cfg: Config, budget: ExploreBudget | None = None) -> ExplorationStore:
    """The store for a budget, from its canonical checkpoint when present."""
    budget = budget or _budget(cfg)
    path = _checkpoint_path(cfg, budget)
    if path.exists():
        return read_checkpoint(path)
    store = explore(budget, threads=cfg.threads)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_checkpoint(store, path)
    return store


def _ledger_fields(store: ExplorationStore) -> dict:
    ledger = omega.ledger_from_store(store)
    bits = omega.certify_bits(ledger)
    return {
        "budgets": {"max_len": store.budget.max_len, "max_steps": store.budget.max_steps},
        "lower": str(bits.lower),
        "upper": str(bits.upper),
        "certified_bits": bits.certified,
        "unknown_mass": str(ledger.unknown_mass),
    }


def _block_table(bits: str, sizes) -> dict:
    table = {}
    for size in sizes:
        if size > len(bits):
            break
        table[str(size)] = {
            block: {"count": count, "windows": windows, "frequency": f"{count}/{windows}"}
            for block, (count, windows) in omega.block_frequencies(bits, size).items()
        }
    return table


# -- handlers ----------------------------------------------------------------


def _cmd_vm_run(cfg, args):
    res = run(args.bits, cfg.max_steps)
    report = _report(kind=res.kind)
    if res.kind == "HALTED":
        report["output"] = res.output
    if res.proof:
        report["proof"] = res.proof
    report["bits_consumed"] = res.bits_consumed
    report["steps"] = res.steps
    return report


def _cmd_explore(cfg, args):
    budget = _budget(cfg)
    path = _checkpoint_path(cfg, budget)
    resume = None
    if args.resume:
        if not path.exists():
            raise CheckpointError(f"nothing to resume: {path} does not exist")
        resume = read_checkpoint(path)
    store = explore(
        budget, resume=resume, threads=cfg.threads, node_limit=args.max_nodes
    )
    path.parent.mkdir(parents=True, exist_ok=True)
    checksum = write_checkpoint(store, path)
    report = _report(
        checkpoint=str(path),
        checksum=checksum,
        nodes=len(store),
        halting=sum(1 for _ in store.halting()),
        closed=store.is_closed(),
    )
    if store.is_closed():
        report.update(_ledger_fields(store))
    return report


def _cmd_omega_bits(cfg, args):
    store = _load_or_explore(cfg)
    fields = _ledger_fields(store)
    fields["block_frequencies"] = _block_table(fields["certified_bits"], range(1, 5))
    return _report(**fields)


def _cmd_omega_oracle(cfg, args):
    store = _load_or_explore(cfg)
    bits = omega.certify_bits(omega.ledger_from_store(store))
    answer = omega.halting_oracle(bits, args.bits, store=store)
    return _report(
        query=args.bits, answer=answer, certified_bits=bits.certified
    )


def _cmd_omega_progress(cfg, args):
    if args.checkpoints:
        paths = [Path(p) for p in args.checkpoints]
    else:
        paths = sorted(Path(cfg.checkpoint_dir).glob("*.ckpt"))
        if not paths:
            raise CheckpointError(f"no checkpoints under {cfg.checkpoint_dir}")
    return _report(rows=omega.progress_report(paths))


def _cmd_omega_blocks(cfg, args):
    store = _load_or_explore(cfg)
    bits = omega.certify_bits(omega.ledger_from_store(store))
    return _report(
        certified_bits=bits.certified,
        block_frequencies=_block_table(bits.certified, [args.size]),
    )


def _cmd_complexity_of(cfg, args):
    path = _checkpoint_path(cfg, _budget(cfg))
    store = read_checkpoint(path) if path.exists() else None
    bound = cx.complexity_upper(args.bits, store=store)
    return _report(
        subject=bound.subject, kind=bound.kind, value=bound.value, witness=bound.witness
    )


def _cmd_complexity_exact(cfg, args):
    if args.bound > cfg.max_len:
        raise ValueError(
            f"bound {args.bound} exceeds the configured enumeration cap {cfg.max_len}"
        )
    store = _load_or_explore(cfg)
    result = cx.complexity_exact(args.bits, args.bound, store)
    if result is None:
        return _report(subject=args.bits, kind="ABOVE_BOUND", bound=args.bound)
    return _report(
        subject=result.subject,
        kind=result.kind,
        bound=result.bound_len,
        value=result.value,
        witness=result.witness,
    )


def _cmd_invariance(cfg, args):
    path = _checkpoint_path(cfg, _budget(cfg))
    store = read_checkpoint(path) if path.exists() else None
    report = cx.invariance_audit(args.guest, args.bound, store=store)
    return _report(**report)


def _cmd_counting(cfg, args):
    store = _load_or_explore(cfg)
    return _report(**cx.counting_check(args.n, args.m, store))


def _cmd_theory_audit(cfg, args):
    data = json.loads(Path(args.file).read_text())
    try:
        assertions = [(int(k), int(v)) for k, v in data["assertions"]]
        carrier = data.get("carrier")
    except (KeyError, TypeError) as exc:
        raise cx.MalformedTheoryError(f"bad theory file {args.file}") from exc
    if carrier is None:
        theory = cx.make_theory(assertions)
    else:
        theory = cx.TheoryArtifact(tuple(sorted(assertions)), _bits_arg(carrier))
    store = _load_or_explore(cfg)
    bits = omega.certify_bits(omega.ledger_from_store(store))
    report = cx.theory_audit(theory, bits.certified, store=store)
    return _report(certified_bits=bits.certified, **report)


def _cmd_irreducibility(cfg, args):
    bound = args.bound if args.bound is not None else min(cfg.max_len, 14)
    if bound > cfg.max_len:
        raise ValueError(
            f"bound {bound} exceeds the configured enumeration cap {cfg.max_len}"
        )
    store = _load_or_explore(cfg)
    bits = omega.certify_bits(omega.ledger_from_store(store))
    return _report(
        certified_bits=bits.certified,
        bound=bound,
        rows=cx.irreducibility_table(bits.certified, store, bound),
    )


def _cmd_law_interpolate(cfg, args):
    points = lawful.read_points_csv(args.csv)
    curve = lawful.interpolate(points)
    if args.samples_out:
        samples = lawful.curve_samples(curve)
        Path(args.samples_out).write_text(
            "\n".join(f"{x:.12g} {y:.12g}" for x, y in samples) + "\n"
        )
    return _report(
        points=len(points),
        knots=list(curve.knots),
        x_coeffs=list(curve.x_coeffs),
        y_coeffs=list(curve.y_coeffs),
        description_size=lawful.describe_size(curve, cfg.precision_bits),
        max_knot_residual=max(lawful.knot_residuals(curve, points)),
    )


def _cmd_law_classify(cfg, args):
    path = _checkpoint_path(cfg, _budget(cfg))
    store = read_checkpoint(path) if path.exists() else None
    verdict = lawful.classify(
        args.bits, cfg.max_len, store=store, threshold=cfg.classify_threshold
    )
    return _report(
        data_bits=verdict.raw_size,
        rule_size_upper=verdict.rule_size_upper,
        ratio=str(verdict.ratio),
        threshold=str(cfg.classify_threshold),
        verdict=verdict.verdict,
        witness=verdict.witness,
    )


# -- wiring ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="omegaforge",
        description="Exact halting-probability and program-size workbench "
        "on a self-delimiting binary counter machine.",
    )
    parser.add_argument("--config", metavar="FILE", help="key=value config file")
    parser.add_argument("--format", choices=("json", "csv"), dest="output_format")
    parser.add_argument("--checkpoint-dir", type=Path, dest="checkpoint_dir")
    parser.add_argument("--max-len", type=int, dest="max_len")
    parser.add_argument("--max-steps", type=int, dest="max_steps")
    parser.add_argument("--threads", type=int, dest="threads")
    parser.add_argument("--threshold", type=parse_threshold, dest="classify_threshold")
    parser.add_argument("--precision-bits", type=int, dest="precision_bits")
    sub = parser.add_subparsers(dest="command", required=True)

    vm = sub.add_parser("vm", help="run the machine directly")
    vm_sub = vm.add_subparsers(dest="vm_command", required=True)
    vm_run = vm_sub.add_parser("run", help="execute a program bit string")
    vm_run.add_argument("bits", type=_bits_arg)
    vm_run.set_defaults(handler=_cmd_vm_run)

    ex = sub.add_parser("explore", help="enumerate the program tree")
    ex.add_argument("--resume", action="store_true",
                    help="continue from the canonical checkpoint")
    ex.add_argument("--max-nodes", type=int, default=None,
                    help="stop after this many classifications (clean interrupt)")
    ex.set_defaults(handler=_cmd_explore)

    om = sub.add_parser("omega", help="halting-probability queries")
    om_sub = om.add_subparsers(dest="omega_command", required=True)
    om_bits = om_sub.add_parser("bits", help="certified leading bits")
    om_bits.set_defaults(handler=_cmd_omega_bits)
    om_oracle = om_sub.add_parser("oracle", help="halting oracle for a program")
    om_oracle.add_argument("bits", type=_bits_arg)
    om_oracle.set_defaults(handler=_cmd_omega_oracle)
    om_prog = om_sub.add_parser("progress", help="certified bits per checkpoint")
    om_prog.add_argument("checkpoints", nargs="*", help="checkpoint files")
    om_prog.set_defaults(handler=_cmd_omega_progress)
    om_blocks = om_sub.add_parser("blocks", help="block frequency report")
    om_blocks.add_argument("--size", type=int, default=1, help="block size, 1..4")
    om_blocks.set_defaults(handler=_cmd_omega_blocks)

    comp = sub.add_parser("complexity", help="program-size complexity")
    comp_sub = comp.add_subparsers(dest="complexity_command", required=True)
    comp_of = comp_sub.add_parser("of", help="verified upper bound")
    comp_of.add_argument("bits", type=_bits_arg)
    comp_of.set_defaults(handler=_cmd_complexity_of)
    comp_exact = comp_sub.add_parser("exact", help="exact value within a bound")
    comp_exact.add_argument("bits", type=_bits_arg)
    comp_exact.add_argument("--bound", type=int, required=True)
    comp_exact.set_defaults(handler=_cmd_complexity_exact)

    inv = sub.add_parser("invariance", help="guest simulation overhead audit")
    inv.add_argument("--guest", choices=("00", "01"), required=True)
    inv.add_argument("--bound", type=int, required=True)
    inv.set_defaults(handler=_cmd_invariance)

    cnt = sub.add_parser("counting", help="incompressibility counting bound")
    cnt.add_argument("--n", type=int, required=True, help="output length")
    cnt.add_argument("--m", type=int, required=True, help="complexity cap")
    cnt.set_defaults(handler=_cmd_counting)

    th = sub.add_parser("theory", help="audit assertion-list theories")
    th_sub = th.add_subparsers(dest="theory_command", required=True)
    th_audit = th_sub.add_parser("audit", help="audit a theory file")
    th_audit.add_argument("file", help="JSON with assertions (and optional carrier)")
    th_audit.set_defaults(handler=_cmd_theory_audit)

    irr = sub.add_parser("irreducibility", help="H of certified prefixes")
    irr.add_argument("--bound", type=int, default=None)
    irr.set_defaults(handler=_cmd_irreducibility)

    law = sub.add_parser("law", help="interpolation and lawfulness")
    law_sub = law.add_subparsers(dest="law_command", required=True)
    law_interp = law_sub.add_parser("interpolate", help="curve through CSV points")
    law_interp.add_argument("csv")
    law_interp.add_argument("--samples-out", help="write gnuplot samples here")
    law_interp.set_defaults(handler=_cmd_law_interpolate)
    law_cls = law_sub.add_parser("classify", help="lawful/lawless verdict")
    law_cls.add_argument("bits", type=_bits_arg)
    law_cls.set_defaults(handler=_cmd_law_classify)

    return parser


def _flatten(prefix: str, value, rows: list):
    if isinstance(value, dict):
        for key, item in value.items():
            _flatten(f"{prefix}.{key}" if prefix else str(key), item, rows)
    elif isinstance(value, (list, tuple)):
        rows.append((prefix, json.dumps(value)))
    else:
        rows.append((prefix, value))


def emit_report(report: dict, output_format: str, stream=None) -> None:
    stream = stream or sys.stdout
    if output_format == "json":
        print(json.dumps(report, indent=2, default=str), file=stream)
    else:
        rows: list = []
        _flatten("", report, rows)
        print("key,value", file=stream)
        for key, value in rows:
            text = "" if value is None else str(value)
            if "," in text or '"' in text:
                text = '"' + text.replace('"', '""') + '"'
            print(f"{key},{text}", file=stream)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        flag_values = {
            key: getattr(args, key, None)
            for key in (
                "max_len",
                "max_steps",
                "checkpoint_dir",
                "output_format",
                "classify_threshold",
                "precision_bits",
                "threads",
            )
        }
        cfg = resolve_config(flag_values, config_path=args.config)
        report = args.handler(cfg, args)
    except _DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    emit_report(report, cfg.output_format)
    return 0


if __name__ == "__main__":
    sys.exit(main())

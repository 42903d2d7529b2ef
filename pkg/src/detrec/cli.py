"""Command-line front end.

Exit status: 0 all checks pass, 1 violation found, 2 inconclusive, 64 usage
error.  Reports go to stdout and, when ``--output`` is given (or the
``DETREC_OUTPUT_DIR`` environment variable is set), to a file.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any

from detrec import __version__
from detrec.campaign import CampaignConfig, random_campaign, replay_trace
from detrec.checker import FAIL_VERDICT, INCONCLUSIVE
from detrec.errors import BoundsExceeded, ConfigurationError, TraceFormatError
from detrec.explore import enumerate_memory_states, exhaustive
from detrec.objects import MUTATIONS, OBJECTS, ObjectKind, apply_mutation
from detrec.perturb import search_doubly_perturbing_witness, verify_witness, witness_histories
from detrec.seqspec import SPECS, make_spec
from detrec.space import breakdown, space_audit
from detrec.traceio import Trace, history_lines
from detrec import traceio

EXIT_OK, EXIT_VIOLATION, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 1, 2, 64
OUTPUT_ENV = "DETREC_OUTPUT_DIR"


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits with 2 by default
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _domain(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"domain must be comma-separated integers, got {text!r}") from None


def _common(p: argparse.ArgumentParser, *, object_required: bool = True) -> None:
    p.add_argument("--config", help="flat key=value file; flags override it")
    p.add_argument("--output", help="report file path")
    p.add_argument("--format", choices=("structured", "text"), default="structured")
    if object_required:
        p.add_argument("--object", help=f"object kind: {', '.join(sorted(OBJECTS))}")
        p.add_argument("--n", type=int, default=2, help="number of processes")
        p.add_argument("--domain", type=_domain, help="value domain, e.g. 0,1,2")


def _run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-crashes", type=int, default=1)
    p.add_argument("--retries", type=int, default=0, help="re-invocations after a recovery returns fail")
    p.add_argument("--ops", type=int, default=2, help="operations per process")


def _campaign_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int)
    p.add_argument("--schedules", type=int, default=1000)
    p.add_argument("--crash-prob", type=float, default=0.05)
    p.add_argument("--budget", type=int, help="scheduler steps per schedule")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="include wall-clock timingMs in the report")


def build_parser() -> Parser:
    parser = Parser(prog="detrec", description="Detectable recoverable objects: checking and analysis tools.")
    parser.add_argument("--version", action="version", version=f"detrec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    p = sub.add_parser("campaign", help="seeded random schedules")
    _common(p)
    _run_options(p)
    _campaign_options(p)
    p.set_defaults(max_crashes=2)

    p = sub.add_parser("exhaustive", help="all schedules within small bounds")
    _common(p)
    _run_options(p)
    p.add_argument("--op-budget", type=int, help="steps per operation before a path counts as budget-exhausted")

    p = sub.add_parser("spacecount", help="count distinct reachable shared-memory images")
    _common(p)
    _run_options(p)
    p.add_argument("--depth", type=int, default=40)
    p.add_argument("--include-private", action="store_true")
    p.set_defaults(ops=1)

    p = sub.add_parser("audit", help="analytic shared-bit count")
    _common(p)
    p.add_argument("--value-bits", type=int, required=False, default=None)

    p = sub.add_parser("perturb", help="search for a doubly-perturbing witness")
    _common(p, object_required=False)
    p.add_argument("--spec", help=f"sequential spec: {', '.join(sorted(SPECS))}")
    p.add_argument("--domain", type=_domain)
    p.add_argument("--bound", type=int, default=6, help="maximum length of H2")
    p.add_argument("--extension-bound", type=int, default=4)

    p = sub.add_parser("mutate", help="check a mutated object")
    _common(p)
    _run_options(p)
    _campaign_options(p)
    p.add_argument("--mutation", help=f"mutation id: {', '.join(sorted(MUTATIONS))}")
    p.add_argument("--exhaustive", action="store_true", help="explore exhaustively instead of sampling")

    p = sub.add_parser("replay", help="re-execute a counterexample file")
    p.add_argument("file")
    p.add_argument("--format", choices=("structured", "text"), default="structured")
    p.add_argument("--output")
    return parser


def read_config(path: str) -> dict[str, str]:
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    for no, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{no}: expected key=value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def parse_args(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        cfg = read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]  # noqa: SLF001
        actions = {a.dest: a for a in sub._actions}  # noqa: SLF001
        defaults = {}
        for key, raw in cfg.items():
            if key not in actions or key in ("config", "help"):
                raise UsageError(f"unknown config key {key!r} for {args.command}")
            action = actions[key]
            if action.const is True and action.nargs == 0:
                defaults[key] = raw.lower() in ("1", "true", "yes", "on")
            else:
                conv = action.type or str
                try:
                    defaults[key] = conv(raw)
                except (ValueError, argparse.ArgumentTypeError) as exc:
                    raise UsageError(f"config key {key}: {exc}") from None
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def _kind(args, mutation: str | None = None) -> ObjectKind:
    if not args.object:
        raise UsageError(f"--object is required; choose from {', '.join(sorted(OBJECTS))}")
    try:
        kind = ObjectKind.parse(args.object)
        if mutation:
            kind = apply_mutation(kind, mutation)
    except ConfigurationError as exc:
        raise UsageError(str(exc)) from None
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    return kind


def _output_dir(args) -> Path | None:
    if getattr(args, "output", None):
        return Path(args.output).parent
    env = os.environ.get(OUTPUT_ENV)
    return Path(env) if env else None


def _flatten(prefix: str, value: Any, out: list[str]) -> None:
    if isinstance(value, dict):
        for k in sorted(value):
            _flatten(f"{prefix}.{k}" if prefix else str(k), value[k], out)
    elif isinstance(value, list) and value and not all(isinstance(v, (int, float, bool)) for v in value):
        for i, v in enumerate(value):
            _flatten(f"{prefix}[{i}]", v, out)
    else:
        out.append(f"{prefix}: {json.dumps(value, ensure_ascii=False) if not isinstance(value, str) else value}")


def render(report: dict, fmt: str) -> str:
    if fmt == "structured":
        return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    lines: list[str] = []
    _flatten("", report, lines)
    return "\n".join(lines) + "\n"


def emit(args, report: dict) -> None:
    text = render(report, args.format)
    sys.stdout.write(text)
    target = None
    if getattr(args, "output", None):
        target = Path(args.output)
    elif os.environ.get(OUTPUT_ENV):
        ext = "json" if args.format == "structured" else "txt"
        target = Path(os.environ[OUTPUT_ENV]) / f"{args.command}-report.{ext}"
    if target is not None:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8")


def write_counterexample(args, trace: Trace, name: str) -> str:
    directory = _output_dir(args) or Path(".")
    return str(trace.write(directory / name))


def _config(args, **extra) -> dict:
    skip = {"config", "output", "format", "command", "timing", "workers"}
    cfg = {k: (list(v) if isinstance(v, tuple) else v) for k, v in vars(args).items() if k not in skip}
    cfg.update(extra)
    return cfg


def _base(args, **extra) -> dict:
    return {"command": args.command, "version": __version__, "config": _config(args, **extra)}


def cmd_campaign(args, mutation: str | None = None) -> int:
    kind = _kind(args, mutation)
    if args.seed is None:
        raise UsageError("--seed is required for campaigns (reproducibility)")
    cfg = CampaignConfig(schedules=args.schedules, seed=args.seed, ops_per_process=args.ops,
                         max_crashes=args.max_crashes, crash_prob=args.crash_prob, budget=args.budget,
                         retries=args.retries, domain=args.domain, workers=args.workers)
    rep = random_campaign(kind, args.n, cfg, timing=args.timing)
    report = {"command": args.command, **rep.to_dict()}
    files = []
    for i, trace in enumerate(rep.counterexamples):
        files.append(write_counterexample(args, trace, f"counterexample-{kind}-{i}.jsonl".replace(":", "_")))
    report["counterexampleFiles"] = files
    emit(args, report)
    return {FAIL_VERDICT: EXIT_VIOLATION, INCONCLUSIVE: EXIT_INCONCLUSIVE}.get(rep.verdict, EXIT_OK)


def cmd_exhaustive(args, mutation: str | None = None) -> int:
    kind = _kind(args, mutation)
    try:
        rep = exhaustive(kind, args.n, args.ops, args.max_crashes, args.domain, retries=args.retries,
                         op_budget=getattr(args, "op_budget", None))
    except BoundsExceeded as exc:
        raise UsageError(str(exc)) from None
    report = _base(args, object=str(kind)) | {"totals": rep.to_dict(), "counterexamples": []}
    files = []
    for i, v in enumerate(rep.counterexamples):
        verdict = {"verdict": FAIL_VERDICT, "durable": v.durable.verdict, "detectability": v.detect.verdict,
                   "explanation": v.detect.explanation or v.durable.explanation}
        trace = Trace(kind, args.n, args.domain, v.schedule, v.history, args.retries, args.max_crashes,
                      getattr(args, "op_budget", None), {}, verdict)
        report["counterexamples"].append({"history": [str(e) for e in v.history], **verdict})
        files.append(write_counterexample(args, trace, f"counterexample-{kind}-{i}.jsonl".replace(":", "_")))
    report["counterexampleFiles"] = files
    emit(args, report)
    return {FAIL_VERDICT: EXIT_VIOLATION, INCONCLUSIVE: EXIT_INCONCLUSIVE}.get(rep.verdict, EXIT_OK)


def cmd_spacecount(args) -> int:
    kind = _kind(args)
    res = enumerate_memory_states(kind, args.n, args.depth, domain=args.domain, ops=args.ops,
                                  max_crashes=args.max_crashes, include_private=args.include_private)
    bound = 2 ** (args.n - 1)
    emit(args, _base(args) | {"totals": {
        "count": res.count, "complete": res.complete, "capped": res.capped, "depth": res.depth,
        "lowerBound": bound, "meetsLowerBound": res.count >= bound}})
    return EXIT_OK


def cmd_audit(args) -> int:
    kind = _kind(args)
    if args.value_bits is None:
        raise UsageError("--value-bits is required")
    bits = space_audit(kind, args.n, args.value_bits)
    emit(args, _base(args) | {"totals": {"sharedBits": bits, "byCell": breakdown(kind, args.n, args.value_bits)}})
    return EXIT_OK


def cmd_perturb(args) -> int:
    if not args.spec:
        raise UsageError(f"--spec is required; choose from {', '.join(sorted(SPECS))}")
    try:
        spec = make_spec(args.spec, args.domain)
    except ConfigurationError as exc:
        raise UsageError(str(exc)) from None
    res = search_doubly_perturbing_witness(spec, args.bound, args.extension_bound)
    totals: dict[str, Any] = {"found": res.found, "bound": res.bound, "extensionBound": res.extension_bound,
                              "exhaustedAtBound": res.exhausted_at_bound, "statesExamined": res.states}
    if res.witness is not None:
        totals["witness"] = res.witness.to_dict()
        totals["verified"] = verify_witness(spec, res.witness)
        totals["histories"] = {k: history_lines(v) for k, v in witness_histories(spec, res.witness).items()}
    emit(args, _base(args) | {"totals": totals})
    return EXIT_OK


def cmd_mutate(args) -> int:
    if not args.mutation:
        raise UsageError(f"--mutation is required; choose from {', '.join(sorted(MUTATIONS))}")
    if args.exhaustive:
        return cmd_exhaustive(args, args.mutation)
    return cmd_campaign(args, args.mutation)


def cmd_replay(args) -> int:
    try:
        trace = traceio.read(args.file)
    except OSError as exc:
        raise UsageError(f"cannot read {args.file}: {exc.strerror}") from None
    res = replay_trace(trace)
    report = {
        "command": "replay",
        "version": __version__,
        "config": {"file": args.file, "object": str(trace.kind), "n": trace.n},
        "totals": {"verdict": res.verdict["verdict"], "matchesRecording": res.matches,
                   "recordedVerdict": (res.recorded_verdict or {}).get("verdict")},
        "verdict": res.verdict,
        "history": history_lines(res.history),
    }
    emit(args, report)
    if not res.matches:
        print("replayed history differs from the recorded history", file=sys.stderr)
        return EXIT_VIOLATION
    return {FAIL_VERDICT: EXIT_VIOLATION, INCONCLUSIVE: EXIT_INCONCLUSIVE}.get(res.verdict["verdict"], EXIT_OK)


COMMANDS = {
    "campaign": cmd_campaign,
    "exhaustive": cmd_exhaustive,
    "spacecount": cmd_spacecount,
    "audit": cmd_audit,
    "perturb": cmd_perturb,
    "mutate": cmd_mutate,
    "replay": cmd_replay,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    except (UsageError, ConfigurationError) as exc:
        print(f"detrec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TraceFormatError as exc:
        print(f"detrec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""Seeded random schedule campaigns and counterexample replay."""

from __future__ import annotations

import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any

from detrec import __version__
from detrec.checker import (
    FAIL_VERDICT,
    INCONCLUSIVE,
    PASS,
    CheckResult,
    check_detectability,
    check_durable_linearizability,
    combined_verdict,
)
from detrec.history import Directive, Schedule
from detrec.objects import ObjectKind, build
from detrec.system import System, run_schedule
from detrec.traceio import Trace, history_lines

BUDGET_EXHAUSTED = "budget_exhausted"
VERDICTS = (PASS, FAIL_VERDICT, INCONCLUSIVE, BUDGET_EXHAUSTED)


@dataclass
class CampaignConfig:
    schedules: int = 1000
    seed: int = 0
    ops_per_process: int = 2
    max_crashes: int = 2
    crash_prob: float = 0.05
    budget: int | None = None  # scheduler steps per schedule
    retries: int = 0
    domain: tuple | None = None
    workers: int = 1
    keep: int = 3  # counterexamples kept in the report

    def effective_budget(self, n: int) -> int:
        if self.budget is not None:
            return self.budget
        return 10 * n * self.ops_per_process * (1 + self.max_crashes)


@dataclass
class Outcome:
    index: int
    verdict: str
    steps: int
    trace: Trace | None = None  # kept for failing and inconclusive schedules


@dataclass
class CampaignReport:
    object: str
    n: int
    config: CampaignConfig
    counts: dict = field(default_factory=lambda: dict.fromkeys(VERDICTS, 0))
    steps: int = 0
    counterexamples: list[Trace] = field(default_factory=list)
    timing_ms: int | None = None

    @property
    def verdict(self) -> str:
        if self.counts[FAIL_VERDICT]:
            return FAIL_VERDICT
        if self.counts[INCONCLUSIVE]:
            return INCONCLUSIVE
        return PASS

    def to_dict(self) -> dict:
        cfg = asdict(self.config)
        cfg["domain"] = None if self.config.domain is None else list(self.config.domain)
        cfg.pop("workers")  # does not influence results
        cfg["object"] = self.object
        cfg["n"] = self.n
        cfg["budget"] = self.config.effective_budget(self.n)
        out: dict[str, Any] = {
            "version": __version__,
            "config": cfg,
            "totals": {"schedules": sum(self.counts.values()), "steps": self.steps, "verdict": self.verdict},
            "perVerdict": dict(self.counts),
            "counterexamples": [
                {"header": t.header(), "schedule": [str(d) for d in t.schedule.directives],
                 "scripts": [[str(op) for op in s] for s in t.schedule.scripts],
                 "history": [str(ev) for ev in t.history], "verdict": t.verdict}
                for t in self.counterexamples
            ],
        }
        if self.timing_ms is not None:
            out["timingMs"] = self.timing_ms
        return out


def evaluate(history, spec) -> tuple[CheckResult, CheckResult]:
    return check_durable_linearizability(history, spec), check_detectability(history, spec)


def verdict_record(durable: CheckResult, detect: CheckResult, exhausted: bool = False) -> dict:
    verdict = combined_verdict(durable, detect)
    if verdict == PASS and exhausted:
        verdict = BUDGET_EXHAUSTED
    return {
        "verdict": verdict,
        "durable": durable.verdict,
        "detectability": detect.verdict,
        "explanation": detect.explanation or durable.explanation,
    }


def random_schedule(system_obj, n: int, cfg: CampaignConfig, rng: random.Random) -> tuple[System, Schedule, Any]:
    alphabet = system_obj.alphabet()
    scripts = [[rng.choice(alphabet) for _ in range(cfg.ops_per_process)] for _ in range(n)]
    system = System(system_obj, scripts=scripts, max_crashes=cfg.max_crashes, retries=cfg.retries)
    budget = cfg.effective_budget(n)
    state = system.initial()
    directives: list[Directive] = []
    while len(directives) < budget:
        moves = system.moves(state)
        if not moves:
            break
        crash = [m for m in moves if m.kind == "crash"]
        rest = [m for m in moves if m.kind != "crash"]
        if crash and (not rest or rng.random() < cfg.crash_prob):
            mv = crash[0]
        else:
            mv = rng.choice(rest)
        directives.append(mv.directive())
        state = system.apply(state, mv).state
    return system, Schedule(scripts, directives), state


def run_one(kind: ObjectKind, n: int, cfg: CampaignConfig, index: int, options: dict) -> Outcome:
    rng = random.Random(cfg.seed * 1_000_003 + index)
    obj = build(kind, n, cfg.domain, **options)
    system, schedule, final = random_schedule(obj, n, cfg, rng)
    run = run_schedule(system, schedule, trace=False)
    exhausted = not system.terminal(run.final)
    durable, detect = evaluate(run.history, obj.seqspec())
    rec = verdict_record(durable, detect, exhausted)
    trace = None
    if rec["verdict"] in (FAIL_VERDICT, INCONCLUSIVE):
        trace = Trace(kind, n, cfg.domain, schedule, run.history, cfg.retries, cfg.max_crashes, None, options, rec)
    return Outcome(index, rec["verdict"], len(schedule.directives), trace)


def _run_range(args) -> list[Outcome]:
    kind, n, cfg, start, stop, options = args
    return [run_one(kind, n, cfg, i, options) for i in range(start, stop)]


def random_campaign(kind, n: int, cfg: CampaignConfig, *, timing: bool = False,
                    object_options: dict | None = None) -> CampaignReport:
    """Run ``cfg.schedules`` seeded random schedules and check every history.

    Schedule ``i`` draws from its own generator seeded by ``(seed, i)``, so the
    report does not depend on ``workers``.
    """
    if isinstance(kind, str):
        kind = ObjectKind.parse(kind)
    options = dict(object_options or {})
    started = time.perf_counter()
    if cfg.workers > 1 and cfg.schedules > 1:
        chunk = -(-cfg.schedules // (cfg.workers * 4))
        jobs = [(kind, n, cfg, s, min(s + chunk, cfg.schedules), options) for s in range(0, cfg.schedules, chunk)]
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = [o for part in pool.map(_run_range, jobs) for o in part]
    else:
        outcomes = _run_range((kind, n, cfg, 0, cfg.schedules, options))
    outcomes.sort(key=lambda o: o.index)
    report = CampaignReport(str(kind), n, cfg)
    for o in outcomes:
        report.counts[o.verdict] += 1
        report.steps += o.steps
        if o.trace is not None and len(report.counterexamples) < cfg.keep:
            report.counterexamples.append(o.trace)
    if timing:
        report.timing_ms = round((time.perf_counter() - started) * 1000)
    return report


@dataclass
class ReplayResult:
    history: list
    verdict: dict
    matches: bool  # replayed history equals the recorded one, line for line
    recorded_verdict: dict | None


def replay_trace(trace: Trace) -> ReplayResult:
    obj = build(trace.kind, trace.n, trace.domain, **trace.options)
    system = System(obj, scripts=trace.schedule.scripts, max_crashes=trace.max_crashes, retries=trace.retries,
                    op_budget=trace.op_budget)
    run = run_schedule(system, trace.schedule, trace=False)
    durable, detect = evaluate(run.history, obj.seqspec())
    exhausted = run.budget_exhausted or not system.terminal(run.final)
    rec = verdict_record(durable, detect, exhausted)
    same = history_lines(run.history) == history_lines(trace.history)
    return ReplayResult(run.history, rec, same, trace.verdict)

import pytest

from detrec.history import CRASH_DIRECTIVE, Schedule, recover_step, step
from detrec.nvm import Op
from detrec.objects import build
from detrec.system import System, run_schedule


def W(v):
    return Op("write", (v,))


def CAS(a, b):
    return Op("cas", (a, b))


READ = Op("read")


def run(kind, scripts, directives, *, domain=None, retries=0, **options):
    obj = build(kind, len(scripts), domain, **options)
    system = System(obj, scripts=scripts, max_crashes=10, retries=retries)
    return run_schedule(system, Schedule(scripts, directives))


def solo(pid, count):
    return [step(pid)] * count


def recover(pid, count):
    return [recover_step(pid)] * count


CRASH = CRASH_DIRECTIVE


def responses(history):
    return [(e.instance, e.kind, e.value) for e in history if e.kind in ("respond", "recoverRespond")]


@pytest.fixture
def mem_of():
    def view(result, kind, n, **options):
        return build(kind, n, **options).layout.as_dict(result.final.mem)
    return view


def recover_fully(kind, scripts, directives, pid, **kw):
    """Append recover steps for ``pid`` until its recovery responds."""
    directives = list(directives)
    while True:
        res = run(kind, scripts, directives, **kw)
        if res.final.procs[pid].status not in ("crashed", "recovering"):
            return res, directives
        directives.append(recover_step(pid))
        if len(directives) > 500:
            raise AssertionError("recovery did not finish")

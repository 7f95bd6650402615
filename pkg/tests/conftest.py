import os
import sys

import mpmath
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=300,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

mpmath.mp.dps = 60


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid in sorted(results, key=lambda c: int(c[1:])):
        items = results[cid]
        ran = [ok for ok, _ in items if ok is not None]
        verdict = "SKIP" if not ran else ("PASS" if all(ran) else "FAIL")
        notes = "; ".join(d for ok, d in items if ok is not True) or "; ".join(d for _, d in items)
        tr.write_line(f"{verdict} {cid}: {notes}")

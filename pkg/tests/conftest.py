import sys

import numpy as np
import pytest

from wotrolab.rng import make_rng


@pytest.fixture
def rng():
    return make_rng(20260)


def sigma(p, trials):
    return float(np.sqrt(p * (1 - p) / trials))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.TITLES):
        parts = mod.RESULTS.get(n)
        if not parts:
            terminalreporter.write_line(f"FAIL criterion {n}: {mod.TITLES[n]} (not reached)")
            continue
        ok = all(p for _, p in parts)
        detail = "; ".join(f"{'' if p else '[fail] '}{s}" for s, p in parts)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {mod.TITLES[n]}: {detail}")

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from frobayes.diagram import ObjectRef

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_density(rng, n, rank=None, real=False):
    rank = n if rank is None else rank
    x = rng.normal(size=(n, rank))
    if not real:
        x = x + 1j * rng.normal(size=(n, rank))
    rho = x @ x.conj().T
    return rho / np.trace(rho).real


def random_probs(rng, n, zeros=0):
    p = rng.dirichlet(np.ones(n))
    if zeros:
        p[rng.choice(n, size=zeros, replace=False)] = 0.0
        p /= p.sum()
    return p


def cobj(name, d):
    return ObjectRef(name, "classical", d)


def qobj(name, d):
    return ObjectRef(name, "quantum", d)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if not acceptance_log.LINES:
        return
    import time

    elapsed = time.perf_counter() - acceptance_log.SESSION_START
    terminalreporter.section("acceptance criteria")
    for n in sorted(acceptance_log.LINES):
        terminalreporter.write_line(acceptance_log.LINES[n])
    verdict = "PASS" if elapsed < 120 else "FAIL"
    terminalreporter.write_line(f"session runtime: {elapsed:.1f} s ({verdict} against the 120 s budget)")

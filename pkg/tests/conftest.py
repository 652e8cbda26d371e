import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_psd(rng, d):
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return A @ A.conj().T


def random_op(rng, d):
    return rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))


def nondegenerate(rng, n, lo=0.05, hi=np.pi - 0.05):
    """Angles uniformly drawn away from 0, pi/2 and pi."""
    z = rng.uniform(lo, hi, n)
    z[np.abs(z - np.pi / 2) < 0.05] += 0.1
    return z


# ---- acceptance summary: one PASS/FAIL line per criterion ----

_ACCEPTANCE = {}


def _criterion(nodeid):
    """Criterion number from a test named ``test_criterion_NN_...`` in test_acceptance.py."""
    if "test_acceptance.py::test_criterion_" not in nodeid:
        return None
    return int(nodeid.split("test_criterion_")[1][:2])


def pytest_runtest_logreport(report):
    n = _criterion(report.nodeid)
    if n is None:
        return
    if report.when == "call" or report.failed:
        _ACCEPTANCE.setdefault(n, []).append((report.nodeid.split("::")[-1], report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        results = _ACCEPTANCE[n]
        status = "PASS" if all(ok for _, ok in results) else "FAIL"
        failed = [name for name, ok in results if not ok]
        extra = f" (failed: {', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"criterion {n:2d}: {status}{extra}")

import numpy as np
import pytest

from discrim_embed import LabeledDataset, SolverConfig


def make_blobs(d=8, n=40, c=4, seed=0, spread=2.0):
    """Gaussian classes with equal counts; class means drawn at scale ``spread``."""
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % c
    means = spread * rng.standard_normal((d, c))
    x = means[:, labels] + rng.standard_normal((d, n))
    return LabeledDataset(x, labels, c, name=f"blobs{seed}")


def random_orthogonal(rng, d):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


@pytest.fixture
def blobs():
    return make_blobs()


@pytest.fixture
def cfg():
    return SolverConfig()


_CRITERIA = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(n, ok, detail)``; ``ok=None`` logs only."""
    def record(n, ok, detail=""):
        _CRITERIA[n] = (ok, detail)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, detail = _CRITERIA[n]
        status = "LOGGED" if ok is None else ("PASS" if ok else "FAIL")
        terminalreporter.write_line(f"criterion {n:2d}: {status:6s} {detail}")

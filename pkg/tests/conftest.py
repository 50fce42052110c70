import numpy as np
import pytest

from iksel import load_model
from iksel.modelfile import BUNDLED_MODELS

# (criterion, passed, detail) lines collected by test_acceptance.py
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def planar():
    return load_model("planar_2r")


@pytest.fixture(scope="session")
def ur3():
    return load_model("ur3")


@pytest.fixture(scope="session")
def arm7():
    return load_model("redundant_7r")


@pytest.fixture(scope="session", params=BUNDLED_MODELS)
def bundled(request):
    return load_model(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_configs(model, n, rng):
    return rng.uniform(model.lower, model.upper, size=(n, model.dof))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


@pytest.fixture(scope="session")
def ur3_medium(ur3):
    from iksel import build_database
    return build_database(ur3, "medium")


def brute_force(keys, x):
    """Linear-scan oracle: (indices, squared distances) ordered by distance then index."""
    d2 = ((keys - x) ** 2).sum(axis=1)
    order = np.argsort(d2, kind="stable")
    return order, d2[order]

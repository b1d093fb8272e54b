import numpy as np
import pytest
from hypothesis import settings

from handelyap.geometry import Polytope, decompose
from handelyap.poly import Polynomial, VectorField, van_der_pol

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def linear_1d(a: float) -> VectorField:
    """x' = a x."""
    return VectorField((Polynomial(1, {(1,): a}),))


@pytest.fixture
def stable_1d():
    return linear_1d(-1.0)


@pytest.fixture
def unstable_1d():
    return linear_1d(1.0)


@pytest.fixture
def interval_pieces():
    P = Polytope.hypercube(1)
    return P, decompose(P, "orthant")


@pytest.fixture
def vdp():
    return van_der_pol()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criteria: tests record parts, one line per criterion is printed at the end
_ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}


class AcceptanceRecorder:
    def __call__(self, criterion: int, ok: bool, detail: str) -> bool:
        _ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))
        return bool(ok)


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceRecorder()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        parts = _ACCEPTANCE[k]
        ok = all(p for p, _ in parts)
        detail = "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'} ({detail})")

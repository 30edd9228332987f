import numpy as np
import pytest

from pat.geometry import generate_disk_mesh
from pat.fem import P2BubbleSpace
from pat.operators import OperatorSetup
from pat.wavesolver import TimeGrid


@pytest.fixture(scope="session")
def mesh_02():
    return generate_disk_mesh(1.0, 0.2)


@pytest.fixture(scope="session")
def mesh_01():
    return generate_disk_mesh(1.0, 0.1)


@pytest.fixture(scope="session")
def space_01(mesh_01):
    return P2BubbleSpace(mesh_01)


@pytest.fixture(scope="session")
def coarse_setup(mesh_02):
    """c = 1, h = 0.2, T = 1: a small but complete forward/adjoint bundle."""
    return OperatorSetup(mesh_02, 1.0, TimeGrid.from_step(1.0, 0.2 / 15))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one summary line per acceptance criterion, printed whatever the capture mode
_CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def criterion():
    def record(number: int, ok: bool, detail: str) -> bool:
        _CRITERIA[number] = (bool(ok), detail)
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

import numpy as np
import pytest
from hypothesis import settings

from spacelike import corpus
from spacelike.ambient import DISK, POLAR
from spacelike.rotational import AnnulusStart, profile_to_patch, shoot
from spacelike.surface import SurfacePatch

ACCEPTANCE: dict[int, str] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    """Store the one-line verdict for an acceptance criterion."""
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[key])


settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

ROT_K = -0.5
ROT_DOMAIN = (0.4, 0.95, 0.0, 1.0)


@pytest.fixture(scope="session")
def corpus_patches():
    return corpus.load()


@pytest.fixture(scope="session")
def rot_profile():
    return shoot(AnnulusStart(1.0, 0.0, 0.2), ROT_K, (1e-3, 1.0), max_step=0.01)


@pytest.fixture(scope="session")
def rot_patch(rot_profile):
    return profile_to_patch(rot_profile, ROT_DOMAIN[:2], ROT_DOMAIN[2:])


@pytest.fixture
def slice_patch():
    return SurfacePatch.slice(DISK, (-0.5, 0.5, -0.5, 0.5), 0.7)


@pytest.fixture
def wavy_patch():
    return SurfacePatch.graph(DISK, (-0.5, 0.5, -0.5, 0.5), "0.2*sinh(u)*cos(v)")


@pytest.fixture
def polar_patch():
    return SurfacePatch.graph(POLAR, (0.5, 1.5, 0.0, 2.0), "0.3*u^2 + 0.1*sin(v)*u")


@pytest.fixture
def rng():
    return np.random.default_rng(7)

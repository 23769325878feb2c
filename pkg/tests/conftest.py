import sys

import numpy as np
import pytest

from ptband import PotentialSpec


def isin2x() -> PotentialSpec:
    return PotentialSpec(1, {1: np.array([[0.5]]), -1: np.array([[-0.5]])})


def sin2x() -> PotentialSpec:
    return PotentialSpec(1, {1: np.array([[-0.5j]]), -1: np.array([[0.5j]])})


def random_pt(rng: np.random.Generator, m: int, n_max: int, scale: float = 0.5) -> PotentialSpec:
    return PotentialSpec(m, {n: scale * rng.standard_normal((m, m)) for n in range(-n_max, n_max + 1)})


@pytest.fixture
def q_isin():
    return isin2x()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.VERDICTS):
        terminalreporter.write_line(mod.VERDICTS[n])

import numpy as np
import pytest

from conftest import isin2x
from ptband import PotentialSpec
from ptband.averaged import jordan_analyze
from ptband.localization import (complement_decomposition, disk_containment, estimate_constants,
                                 exclusion_sets, gap_bound_check, index_set_A)
from ptband.sweep import run_sweep, t_grid


@pytest.fixture(scope="module")
def isin_sweep():
    return run_sweep(isin2x(), K=48, ts=t_grid(61))


def test_index_sets():
    assert index_set_A(3, 0.5) == {3}
    assert index_set_A(3, 0.1) == {3, -3}
    assert index_set_A(3, 0.9) == {3, -4}
    assert index_set_A(3, -0.9) == {3, -2}
    assert index_set_A(3, 1 / 3) == {3}


def test_gap_bound():
    assert gap_bound_check(10, t_grid(101)).ok
    assert abs((2.5) ** 2 - (4.5) ** 2) == 14


def test_zero_potential_constants():
    sw = run_sweep(PotentialSpec.zero(1), K=24, ts=t_grid(11))
    cfg = estimate_constants(sw, k_max=16)
    assert cfg.B == 0 and cfg.c_hat == 0
    assert all(v == 0 for v in cfg.eps.eps_hat.values())
    assert disk_containment(sw, cfg).ok


def test_constant_potential_eps_zero_and_containment():
    spec = PotentialSpec.constant(np.array([[0.3, 1.0], [-0.5, -0.2]]))
    sw = run_sweep(spec, K=32, ts=t_grid(21))
    cfg = estimate_constants(sw, k_max=20)
    assert max(cfg.eps.eps_hat.values()) < 1e-9
    assert cfg.c_hat >= max(abs(b.mu) for b in sw.jd.blocks)
    assert disk_containment(sw, cfg, k_max=20).ok


def test_isin_constants(isin_sweep):
    cfg = estimate_constants(isin_sweep, k_max=40)
    assert cfg.M_hat >= 1 / np.sqrt(np.pi)
    assert cfg.B == pytest.approx(np.sqrt(np.pi / 2))
    assert cfg.N1_found
    rep = disk_containment(isin_sweep, cfg, k_max=40)
    assert rep.ok and rep.max_ratio < 1


def test_isin_bound_holds(isin_sweep):
    cfg = estimate_constants(isin_sweep, k_max=40)
    assert cfg.eps.bound_holds(cfg.norms, isin_sweep.jd, 0)


def test_exclusion_sets():
    jd = jordan_analyze(np.diag([0.0, 2.0]))
    U = exclusion_sets(jd, 10, 0.1, 0)
    assert any(a == pytest.approx(-0.1 / 80) and b == pytest.approx(0.1 / 80) for a, b in U)
    assert any(a == pytest.approx(0.02375) and b == pytest.approx(0.02625) for a, b in U)
    assert exclusion_sets(jd, 10, 0.0, 0) == []
    with pytest.raises(ValueError):
        exclusion_sets(jordan_analyze(np.pi * np.array([[0.0, 1], [-1, 0]])), 3, 0.1, 0)


def test_exclusion_shrinks_to_full_measure():
    jd = jordan_analyze(np.diag([0.0, 2.0, 3.5]))
    sizes = [sum(b - a for a, b in complement_decomposition(exclusion_sets(jd, 7, d, 1)))
             for d in (1.0, 0.1, 1e-4)]
    assert sizes[0] < sizes[1] < sizes[2] == pytest.approx(2, abs=1e-4)


def test_complement_decomposition_pieces():
    assert complement_decomposition([]) == [(-1.0, 1.0)]
    comp = complement_decomposition([(-0.5, -0.4), (0.0, 0.1), (0.6, 0.65)])
    assert len(comp) == 4
    assert sum(b - a for a, b in comp) == pytest.approx(2 - 0.25)

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from conftest import isin2x, random_pt
from ptband import PotentialSpec
from ptband.averaged import jordan_analyze
from ptband.bloch import (build_galerkin, conjugation_check, galerkin_eigvals, local_eigvals,
                          monodromy, refine_with_monodromy, chain_identity_residual, solve_bloch,
                          trust_window)
from ptband.potential import mean_matrix

# lowest t = 0 eigenvalue of -y'' + i sin(2x) y, from a K = 128 run
ISIN_T0_LOWEST = 0.12863011534224544


def test_free_matrix_is_diagonal():
    g = build_galerkin(PotentialSpec.zero(1), 0.3, 2)
    assert np.allclose(g.matrix, np.diag((2 * np.arange(-2, 3) + 0.3) ** 2))
    assert np.allclose(np.diag(g.matrix)[1:4], [2.89, 0.09, 5.29])


def test_isin_couplings():
    g = build_galerkin(isin2x(), 0.0, 4)
    M = g.matrix - np.diag(np.diag(g.matrix))
    assert np.allclose(np.diag(M, -1), 0.5)
    assert np.allclose(np.diag(M, 1), -0.5)
    assert np.count_nonzero(M) == 2 * 8


def test_constant_potential_blocks():
    A0 = np.array([[1.0, 2.0], [-1.0, 0.5]])
    g = build_galerkin(PotentialSpec.constant(A0), 0.2, 3)
    for i, k in enumerate(range(-3, 4)):
        blk = g.matrix[2 * i: 2 * i + 2, 2 * i: 2 * i + 2]
        assert np.allclose(blk, (2 * k + 0.2) ** 2 * np.eye(2) + A0)
    assert not g.matrix[np.kron(np.eye(7), np.ones((2, 2))) == 0].any()


def test_bad_arguments():
    with pytest.raises(ValueError):
        build_galerkin(isin2x(), 0.0, 2)
    with pytest.raises(ValueError):
        build_galerkin(isin2x(), -1.0, 8)


def test_free_eigenvalues_and_multiplicity():
    pts = solve_bloch(PotentialSpec.zero(2), 0.4, 16)
    for p in pts:
        k = round((np.sqrt(p.lam.real) - 0.4) / 2) if p.lam.real > 1 else 0
        assert min(abs(p.lam - (2 * n + 0.4) ** 2) for n in (k, -k - 1, -k, k - 1, k + 1)) < 1e-12
        assert p.mult == 2


def test_constant_diag_eigenvalues():
    spec = PotentialSpec.constant(np.diag([1.0, 2.0]))
    lo, hi = trust_window(spec, 0.5, 24)
    expected = sorted((2 * k + 0.5) ** 2 + mu for k in range(-24, 25) for mu in (1, 2))
    expected = [e for e in expected if lo <= e <= hi]
    got = sorted(p.lam.real for p in solve_bloch(spec, 0.5, 24))
    assert np.allclose(got, expected, atol=1e-10)


def test_self_convergence_against_high_K():
    for K in (8, 16, 32):
        ev = galerkin_eigvals(isin2x(), 0.0, K)
        assert np.min(np.abs(ev - ISIN_T0_LOWEST)) < 1e-12


def test_local_eigvals_match_full():
    spec = isin2x()
    full = galerkin_eigvals(spec, 0.37, 64)
    for k in (5, 12, 30):
        loc = local_eigvals(spec, 0.37, k)
        target = loc[np.argmin(np.abs(loc - (2 * k + 0.37) ** 2))]
        assert np.min(np.abs(full - target)) < 1e-9


def test_row_residuals_small():
    for p in solve_bloch(isin2x(), 0.3, 32):
        assert p.residual_rows < 1e-8


def test_monodromy_free_multipliers():
    lam = 7.3
    res = monodromy(PotentialSpec.zero(2), lam)
    expected = np.exp(1j * np.sqrt(lam) * np.pi * np.array([1, 1, -1, -1]))
    cost = np.abs(res.multipliers[:, None] - expected[None, :])
    rows, cols = linear_sum_assignment(cost)
    assert cost[rows, cols].max() < 1e-9
    t = 0.3
    hit = monodromy(PotentialSpec.zero(1), (2 + t) ** 2)
    assert np.min(np.abs(hit.multipliers - np.exp(1j * np.pi * t))) < 1e-9


@pytest.mark.parametrize("lam", [-3.0, 0.5, 40.0 + 2j, 400.0])
def test_monodromy_liouville(rng, lam):
    spec = random_pt(rng, 2, 3)
    assert abs(monodromy(spec, lam).detM - 1) < 1e-8


def test_monodromy_charpoly_is_palindromic_at_ends():
    res = monodromy(isin2x(), 3.0)
    assert res.charpoly_coeffs[0] == pytest.approx(1)
    assert res.charpoly_coeffs[-1] == pytest.approx(1)


def test_refine_free_seed_is_fixed_point():
    spec = PotentialSpec.zero(1)
    p = solve_bloch(spec, 0.3, 8)[3]
    r = refine_with_monodromy(spec, 0.3, p)
    assert r.refined and r.lam == p.lam


def test_refine_constant():
    spec = PotentialSpec.constant(np.diag([1.0, 3.0]))
    for p in solve_bloch(spec, 0.25, 8)[:6]:
        r = refine_with_monodromy(spec, 0.25, p)
        k_val = min(abs(r.lam - ((2 * k + 0.25) ** 2 + mu)) for k in range(-8, 9) for mu in (1, 3))
        assert k_val < 1e-10


def test_refine_moves_low_K_towards_oracle():
    spec = isin2x()
    p = min(solve_bloch(spec, 0.0, 3), key=lambda q: q.lam.real)
    r = refine_with_monodromy(spec, 0.0, p)
    assert abs(r.lam - ISIN_T0_LOWEST) <= abs(p.lam - ISIN_T0_LOWEST)
    assert abs(r.lam - ISIN_T0_LOWEST) < 1e-9


def test_chain_identity_constant_and_zero():
    for spec in (PotentialSpec.zero(1), PotentialSpec.constant(np.array([[0.0, 1.0], [0.0, 0.0]]))):
        jd = jordan_analyze(mean_matrix(spec))
        for p in solve_bloch(spec, 0.3, 12)[:5]:
            for n in range(-12, 13):
                for r in range(jd.blocks[0].r):
                    assert chain_identity_residual(spec, jd, p, n, 0, 0, r) < 1e-10


def test_chain_identity_rejects_long_order():
    spec = isin2x()
    jd = jordan_analyze(mean_matrix(spec))
    p = solve_bloch(spec, 0.3, 12)[0]
    with pytest.raises(IndexError):
        chain_identity_residual(spec, jd, p, 0, 0, 0, 1)


def test_conjugation_pairs():
    assert conjugation_check(solve_bloch(isin2x(), 0.2, 32)).ok
    non_pt = PotentialSpec(1, {0: np.array([[0.5j]]), 1: np.array([[0.3]])})
    assert not conjugation_check(solve_bloch(non_pt, 0.2, 32)).ok

import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import isin2x, sin2x
from ptband.potential import (PotentialError, PotentialSpec, RealityError, averaged_matrix,
                              compute_norms, evaluate_Q, harmonic_set, mean_matrix, validate_pt)


def test_isin_is_pt():
    ok, offenders = validate_pt(isin2x())
    assert ok and offenders == []


def test_sin_is_not_pt():
    ok, offenders = validate_pt(sin2x())
    assert not ok
    assert (1, 0, 0) in offenders


def test_real_constant_is_pt():
    assert validate_pt(PotentialSpec.constant([[1.0, -2.0], [3.0, 0.5]]))[0]


def test_evaluate_identity_and_periodicity():
    q = PotentialSpec.constant(np.eye(2))
    assert np.allclose(evaluate_Q(q, 0.7), np.eye(2))
    s = isin2x()
    assert evaluate_Q(s, np.pi / 4)[0, 0] == pytest.approx(1j)
    assert evaluate_Q(s, np.pi / 4 + np.pi)[0, 0] == pytest.approx(1j)


def test_averaged_matrix_examples():
    assert np.allclose(averaged_matrix(isin2x()), 0)
    rot = np.array([[0.0, 1.0], [-1.0, 0.0]])
    assert np.allclose(averaged_matrix(PotentialSpec.constant(rot)), np.pi * rot)
    c0 = np.diag([2.0, 3.0]) / np.pi
    spec = PotentialSpec(2, {0: c0, 1: np.ones((2, 2)), -1: -np.ones((2, 2))})
    assert np.allclose(averaged_matrix(spec), np.diag([2.0, 3.0]))
    assert np.allclose(mean_matrix(spec), c0)


def test_averaged_matrix_rejects_complex_mean():
    with pytest.raises(RealityError):
        averaged_matrix(PotentialSpec(1, {0: np.array([[0.3j]])}))


def test_averaged_matrix_matches_quadrature(rng):
    from conftest import random_pt
    spec = random_pt(rng, 2, 3)
    x = np.linspace(0, np.pi, 4001)
    Q = evaluate_Q(spec, x)
    assert np.allclose(np.trapezoid(Q, x, axis=0).real, averaged_matrix(spec), atol=1e-9)


def test_norms():
    zero = compute_norms(PotentialSpec.zero(1))
    assert zero.B == 0 and all(v == 0 for v in zero.q.values())
    n = compute_norms(isin2x())
    assert n.B == pytest.approx(np.sqrt(np.pi / 2))
    assert set(harmonic_set(1)) == {2, -2, 3, -3, 1, -1}
    assert n.q[1] == pytest.approx(np.sqrt(np.pi) / 2)
    assert n.q[5] == 0


def test_json_round_trip(tmp_path):
    spec = PotentialSpec(2, {0: np.eye(2), -2: np.array([[1, 2j], [0, 1]])})
    path = tmp_path / "q.json"
    spec.dump(path)
    back = PotentialSpec.load(path)
    assert back.m == 2 and set(back.harmonics) == {0, -2}
    assert np.array_equal(back.coeff(-2), spec.coeff(-2))
    assert np.array_equal(back.coeff(7), np.zeros((2, 2)))


def test_load_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(PotentialError):
        PotentialSpec.load(bad)
    wrong = tmp_path / "wrong.json"
    wrong.write_text(json.dumps({"m": 2, "harmonics": [{"n": 0, "re": [[1.0]]}]}))
    with pytest.raises(PotentialError):
        PotentialSpec.load(wrong)


def test_nmax_cap():
    with pytest.raises(PotentialError):
        PotentialSpec(1, {100: np.array([[1.0]])})


def test_from_samples_recovers_harmonics():
    spec = PotentialSpec(1, {0: np.array([[0.2]]), 2: np.array([[0.5]]), -2: np.array([[0.5]])})
    x = np.pi * np.arange(64) / 64
    back = PotentialSpec.from_samples(evaluate_Q(spec, x), n_max=4)
    assert np.allclose(back.coeff(2), 0.5) and np.allclose(back.coeff(1), 0, atol=1e-14)


coeff = st.floats(-2, 2, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(st.lists(coeff, min_size=5, max_size=5), st.floats(0, np.pi))
def test_pt_flip_identity(cs, x):
    # real coefficients give conj(q(-x)) = q(x)
    spec = PotentialSpec(1, {n: np.array([[c]]) for n, c in zip(range(-2, 3), cs)})
    assert validate_pt(spec)[0]
    assert np.conj(evaluate_Q(spec, -x)) == pytest.approx(evaluate_Q(spec, x), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(coeff, min_size=3, max_size=3), st.floats(-10, 10))
def test_periodicity_and_parseval(cs, x):
    spec = PotentialSpec(1, {n: np.array([[c]]) for n, c in zip((-1, 0, 2), cs)})
    assert evaluate_Q(spec, x + np.pi) == pytest.approx(evaluate_Q(spec, x), abs=1e-10)
    grid = np.pi * np.arange(256) / 256
    vals = evaluate_Q(spec, grid)[:, 0, 0]
    l2 = np.sqrt(np.pi * np.mean(np.abs(vals) ** 2))
    assert l2 == pytest.approx(compute_norms(spec).B, rel=1e-10, abs=1e-12)

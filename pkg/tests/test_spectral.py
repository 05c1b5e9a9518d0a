import csv

import numpy as np
import pytest

from quadlind.errors import DiagonalizationError, InvalidModelError, StructuralError
from quadlind.lyapunov import solve_Q, steady_state
from quadlind.model import (
    ChainParams,
    LadderParams,
    QuadraticLindbladModel,
    bath_superoperator_matrix,
    build_chain,
    build_ladder,
    drift_matrix,
    random_stable_model,
)
from quadlind.spectral import (
    assemble_W1,
    check_trace_identity,
    eigendecompose_P,
    rapidities,
    verify_pairing,
    write_spectrum_csv,
)
from quadlind._linalg import greedy_match, norm2, x_matrix, y_matrix, z_matrix


def test_structural_matrices():
    L = 3
    Z, X, Y = z_matrix(L), x_matrix(L), y_matrix(L)
    I = np.eye(2 * L)
    np.testing.assert_array_equal(Z @ Z, I)
    np.testing.assert_array_equal(X @ X, I)
    np.testing.assert_allclose(Y @ Y, I)
    np.testing.assert_allclose(Y, Y.conj().T)


def test_M_is_X_symmetric(rng):
    for L in (1, 3, 6):
        M = bath_superoperator_matrix(random_stable_model(L, rng))
        X = x_matrix(L)
        np.testing.assert_allclose(X @ M @ X, M.conj().T, atol=1e-14)


def test_eigensystem_biorthonormal_and_sorted(rng):
    es = eigendecompose_P(drift_matrix(random_stable_model(7, rng)))
    np.testing.assert_allclose(es.W_P_left @ es.W_P, np.eye(7), atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(es.W_P, axis=0), 1.0)
    re = es.eigenvalues.real
    assert np.all(np.diff(re) <= 1e-14)
    assert es.residual < 1e-12


def test_unstable_P_rejected():
    with pytest.raises(InvalidModelError):
        eigendecompose_P(np.array([[0.5, 0], [0, -1.0]]))
    es = eigendecompose_P(np.array([[0.5, 0], [0, -1.0]]), require_stable=False)
    assert es.eigenvalues[0] == pytest.approx(0.5)


def test_defective_P_rejected():
    with pytest.raises(DiagonalizationError):
        eigendecompose_P(np.array([[-1.0, 1.0], [0.0, -1.0]]))


def test_nonsquare_P():
    with pytest.raises(StructuralError):
        eigendecompose_P(np.zeros((2, 3)))


def test_single_site_rapidity():
    es = eigendecompose_P(drift_matrix(build_chain(ChainParams(1, gamma_1=2.0))))
    rap = rapidities(es)
    assert rap.eigenvalues[0] == pytest.approx(-1.0)
    assert rap.gap == pytest.approx(1.0)
    assert rap.liouvillian_eigenvalues[0] == pytest.approx(-2.0)


def test_dark_mode_detected():
    # site 2 is decoupled and undamped
    m = QuadraticLindbladModel(2, np.zeros((2, 2)), np.zeros((2, 2)), np.diag([1.0, 0.0]))
    rap = rapidities(eigendecompose_P(drift_matrix(m)))
    assert rap.has_dark_modes and rap.dark_mode_indices == (0,)
    assert rap.gap == pytest.approx(0.5)


def test_all_dark():
    m = QuadraticLindbladModel(2, [[0, 1], [1, 0]], np.zeros((2, 2)), np.zeros((2, 2)))
    rap = rapidities(eigendecompose_P(drift_matrix(m)))
    assert rap.all_dark and rap.gap is None


def test_rapidities_independent_of_nbar():
    base = None
    for nbar in (0.0, 1.0, 10.0):
        w = eigendecompose_P(drift_matrix(build_chain(ChainParams(9, 1.0, 0.7, 1.3, nbar, nbar / 2)))).eigenvalues
        if base is None:
            base = w
        np.testing.assert_allclose(w, base, atol=1e-13)


def test_trace_identity_chain():
    p = ChainParams(8, J=1.0, gamma_1=0.8, gamma_L=1.5)
    m = build_chain(p)
    es = eigendecompose_P(drift_matrix(m))
    assert check_trace_identity(m, es) < 1e-12
    assert 2 * es.eigenvalues.real.sum() == pytest.approx(-(0.8 + 1.5))


def test_pairing_chain_and_ladder(rng):
    models = [
        build_chain(ChainParams(8, 1.0, 0.3, 2.0, 0.4, 1.1)),
        build_ladder(LadderParams(5, phi=0.37, nbar_first=0.5)),
        random_stable_model(6, rng),
    ]
    for m in models:
        es = eigendecompose_P(drift_matrix(m))
        rep = verify_pairing(bath_superoperator_matrix(m), es)
        assert rep.ok, rep.violations
        assert rep.spectrum_distance < 1e-9


def test_pairing_detects_wrong_M(rng):
    m = random_stable_model(4, rng)
    es = eigendecompose_P(drift_matrix(m))
    M = bath_superoperator_matrix(m).copy()
    M[0, 0] += 0.5
    assert not verify_pairing(M, es).ok


def test_pairing_shape_error(rng):
    es = eigendecompose_P(drift_matrix(random_stable_model(3, rng)))
    with pytest.raises(StructuralError):
        verify_pairing(np.zeros((4, 4)), es)


def test_W1_single_site_example():
    m = QuadraticLindbladModel(1, [[0]], [[1]], [[3]])
    es = eigendecompose_P(drift_matrix(m))
    Q = solve_Q(es, m.lambda_plus)
    w = assemble_W1(es, Q)
    sign = es.W_P[0, 0]  # eigenvector phase is arbitrary
    assert abs(sign) == pytest.approx(1.0)
    w_fixed = assemble_W1(type(es)(es.P, es.W_P / sign, es.W_P_left * sign, es.eigenvalues, 1.0, 0.0), Q * abs(sign) ** 2)
    np.testing.assert_allclose(w_fixed.W1, [[1, -0.5], [1, -1.5]], atol=1e-14)
    np.testing.assert_allclose(w_fixed.W1_inv, [[1.5, -0.5], [1, -1]], atol=1e-14)
    np.testing.assert_allclose(w.W1 @ w.W1_inv, np.eye(2), atol=1e-14)


def test_W1_inverse_for_any_hermitian_Q(rng):
    es = eigendecompose_P(drift_matrix(random_stable_model(5, rng)))
    A = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    w = assemble_W1(es, A + A.conj().T)
    np.testing.assert_allclose(w.W1 @ w.W1_inv, np.eye(10), atol=1e-10)
    with pytest.raises(ValueError):
        assemble_W1(es, A)


def test_W1_diagonalizes_ZM(rng):
    for L in (1, 4, 9):
        m = random_stable_model(L, rng)
        es, ss = steady_state(m)
        w = assemble_W1(es, ss.Q)
        ZM = z_matrix(L) @ bath_superoperator_matrix(m)
        lam = es.eigenvalues
        D = w.W1_inv @ ZM @ w.W1
        target = np.diag(np.concatenate([lam, -lam.conj()]))
        assert norm2(D - target) < 1e-10 * norm2(ZM)


def test_greedy_match_unique():
    a, d = greedy_match(np.array([0, 0.1]), np.array([0.05, 0.0, 5.0]))
    assert list(a) == [1, 0]
    np.testing.assert_allclose(d, [0.0, 0.05])


def test_spectrum_csv(tmp_path):
    rap = rapidities(eigendecompose_P(drift_matrix(build_chain(ChainParams(4)))))
    path = tmp_path / "s.csv"
    write_spectrum_csv(path, rap)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["k", "re_lambda", "im_lambda", "is_dark"]
    assert len(rows) == 5
    assert complex(float(rows[1][1]), float(rows[1][2])) == rap.eigenvalues[0]


def test_closed_single_site_is_dark():
    m = QuadraticLindbladModel(1, [[0.8]], [[0.0]], [[0.0]])
    rap = rapidities(eigendecompose_P(drift_matrix(m)))
    assert rap.eigenvalues[0] == pytest.approx(-0.4j)
    assert rap.all_dark and rap.dark_mode_indices == (0,)


def test_sorting_example():
    es = eigendecompose_P(np.diag([-2 + 3j, -1.0]))
    np.testing.assert_allclose(es.eigenvalues, [-1.0, -2 + 3j])
    es = eigendecompose_P(np.array([[-1.0]]))
    np.testing.assert_allclose(es.W_P, [[1.0]])

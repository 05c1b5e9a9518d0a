import json
import warnings

import numpy as np
import pytest
import scipy.linalg as sla

from quadlind._linalg import norm2, z_matrix
from quadlind.errors import AccuracyError, SingularMatrixError
from quadlind.lyapunov import steady_state
from quadlind.model import (
    ChainParams,
    LadderParams,
    QuadraticLindbladModel,
    bath_superoperator_matrix,
    build_chain,
    build_ladder,
    random_stable_model,
)
from quadlind.spectral import assemble_W1
from quadlind.transform import (
    BranchCutWarning,
    generator_matrix,
    principal_log,
    verify_transform_action,
    write_generator_json,
)


def _pipeline(model):
    es, ss = steady_state(model)
    return es, assemble_W1(es, ss.Q), bath_superoperator_matrix(model)


def test_single_site_example_on_branch_cut():
    W1 = np.array([[1.0, -0.5], [1.0, -1.5]])
    with pytest.warns(BranchCutWarning):
        gc = generator_matrix(W1)
    assert gc.branch_cut and gc.block_consistency is None
    np.testing.assert_allclose(sla.expm(-z_matrix(1) @ gc.W), W1, atol=1e-12)


def test_single_site_model_transform():
    m = QuadraticLindbladModel(1, [[0]], [[1]], [[3]])
    es, w1, M = _pipeline(m)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BranchCutWarning)
        gc = generator_matrix(w1)
    check = verify_transform_action(gc, es, M)
    assert check.worst < 1e-12


def test_principal_log_matches_scipy(rng):
    A = np.eye(4) + 0.3 * (rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    L, cut = principal_log(A)
    assert not cut
    np.testing.assert_allclose(L, sla.logm(A), atol=1e-10)


def test_singular_W1():
    with pytest.raises(SingularMatrixError):
        generator_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))


def test_wrong_shape():
    with pytest.raises(ValueError):
        generator_matrix(np.eye(3))


@pytest.mark.parametrize(
    "model",
    [
        build_chain(ChainParams(2, 1.0, 1.0, 1.0, 0.3, 0.0)),
        build_chain(ChainParams(10, 1.0, 5.0, 0.2, 1.0, 0.0)),
        build_chain(ChainParams(20, 0.7, 0.4, 1.9, 0.5, 2.0)),
        build_ladder(LadderParams(4, phi=0.3, nbar_first=0.8)),
        build_ladder(LadderParams(10, phi=0.5398, nbar_first=1.0)),
    ],
    ids=["chain2", "chain10", "chain20", "ladder4", "ladder10"],
)
def test_round_trip_and_block_diagonalization(model):
    es, w1, M = _pipeline(model)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BranchCutWarning)
        gc = generator_matrix(w1)
    assert gc.round_trip_error <= 1e-8
    assert norm2(gc.transformed_W1() - w1.W1) <= 1e-8 * norm2(w1.W1)
    check = verify_transform_action(gc, es, M)
    assert check.sls_residual <= 1e-8 and check.eigen_residual <= 1e-8
    L = model.L
    assert gc.U.shape == gc.V.shape == gc.I.shape == gc.J.shape == (L, L)


def test_block_consistency_off_branch_cut(rng):
    for _ in range(5):
        m = random_stable_model(4, rng)
        es, w1, M = _pipeline(m)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BranchCutWarning)
            gc = generator_matrix(w1)
        if not gc.branch_cut and gc.block_consistency is not None:
            assert gc.block_consistency < 1e-8


def test_inconsistent_M_is_caught(rng):
    m = random_stable_model(3, rng)
    es, w1, M = _pipeline(m)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BranchCutWarning)
        gc = generator_matrix(w1)
    with pytest.raises(AccuracyError):
        verify_transform_action(gc, es, M + 0.1 * np.eye(6))


def test_generator_json(tmp_path):
    es, w1, _ = _pipeline(build_chain(ChainParams(3, nbar_1=1.0)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BranchCutWarning)
        gc = generator_matrix(w1)
    write_generator_json(tmp_path / "g.json", gc)
    doc = json.loads((tmp_path / "g.json").read_text())
    assert doc["L"] == 3 and doc["round_trip_error"] == gc.round_trip_error

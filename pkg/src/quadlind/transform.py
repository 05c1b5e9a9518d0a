"""Similarity transform that maps the vacuum onto the steady state.

``S = exp(T)`` with ``T`` quadratic in the doubled-space mode operators;
``T`` is fixed by the ``2L x 2L`` coefficient matrix
``W = -Z log(W1)``.  Nothing here builds Fock-space operators.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from ._linalg import norm2, z_matrix
from .errors import AccuracyError, SingularMatrixError
from .model import encode_matrix
from .spectral import EigenSystem, StructuredW1

ROUND_TRIP_RTOL = 1e-8
EIG_LOG_MAX_COND = 1e10


class BranchCutWarning(RuntimeWarning):
    """``W1`` has eigenvalues on the negative real axis."""


def _negative_real(ev, rtol=1e-12):
    return (ev.real < 0) & (np.abs(ev.imag) <= rtol * np.abs(ev))


def principal_log(A):
    """Principal matrix logarithm.

    Eigenvalues on the negative real axis are taken from the upper
    half plane (``log|x| + i pi``).  Uses the eigendecomposition when
    it is well conditioned and falls back to ``scipy.linalg.logm``.

    Returns ``(log A, on_branch_cut)``.
    """
    A = np.asarray(A, dtype=complex)
    ev, V = np.linalg.eig(A)
    if np.min(np.abs(ev), initial=np.inf) == 0 or np.min(np.abs(ev)) < 1e-14 * max(norm2(A), 1.0):
        raise SingularMatrixError("matrix has a zero eigenvalue; logarithm undefined")
    cut = _negative_real(ev)
    if np.linalg.cond(V) < EIG_LOG_MAX_COND:
        logs = np.log(np.abs(ev)) + 1j * np.angle(ev)
        logs[cut] = np.log(np.abs(ev[cut])) + 1j * np.pi
        return V @ np.diag(logs) @ np.linalg.inv(V), bool(cut.any())
    out = sla.logm(A)
    if isinstance(out, tuple):
        out = out[0]
    return np.asarray(out, dtype=complex), bool(cut.any())


@dataclass(frozen=True, eq=False)
class GeneratorCoefficients:
    W: np.ndarray
    round_trip_error: float
    branch_cut: bool
    block_consistency: float | None

    @property
    def L(self):
        return self.W.shape[0] // 2

    def _block(self, r, c):
        L = self.L
        return self.W[r * L:(r + 1) * L, c * L:(c + 1) * L]

    @property
    def U(self):
        return self._block(0, 0)

    @property
    def V(self):
        return self._block(0, 1)

    @property
    def I(self):  # noqa: E743
        return self._block(1, 0)

    @property
    def J(self):
        return self._block(1, 1)

    def transformed_W1(self):
        """``exp(-Z W)``, which reproduces ``W1``."""
        return sla.expm(-z_matrix(self.L) @ self.W)


def generator_matrix(w1) -> GeneratorCoefficients:
    """``W = -Z log(W1)`` with round-trip check ``exp(-Z W) = W1``.

    ``w1`` is a :class:`StructuredW1` or a plain ``2L x 2L`` array.
    """
    W1 = w1.W1 if isinstance(w1, StructuredW1) else np.asarray(w1, dtype=complex)
    n = W1.shape[0]
    if W1.shape != (n, n) or n % 2:
        raise ValueError(f"W1 must be 2L x 2L, got {W1.shape}")
    L = n // 2
    Z = z_matrix(L)
    log_w1, cut = principal_log(W1)
    if cut:
        warnings.warn(
            "W1 has eigenvalues on the negative real axis; principal branch used",
            BranchCutWarning,
            stacklevel=2,
        )
    W = -Z @ log_w1
    back = sla.expm(-Z @ W)
    err = norm2(back - W1) / max(norm2(W1), 1.0)
    if err > ROUND_TRIP_RTOL:
        raise AccuracyError(f"exp(-Z W) differs from W1 by {err:.3e}", err)

    block = None
    if not cut:
        # log(W1~) Z + Z log(W2~) = 0 with W2~ = Z W1~^{-1} Z
        W2 = Z @ np.linalg.inv(back) @ Z
        log_w2, cut2 = principal_log(W2)
        if not cut2:
            block = norm2(log_w1 @ Z + Z @ log_w2) / max(norm2(log_w1), 1.0)
    return GeneratorCoefficients(W, err, cut, block)


@dataclass(frozen=True)
class TransformCheck:
    """Residuals of the conjugation identities, relative to ``||M||``.

    ``sls_residual``: ``Z W1^{-1} Z M W1`` against ``diag(Lambda, conj(Lambda))``.
    ``eigen_residual``: ``W1^{-1} (Z M) W1`` against ``diag(Lambda, -conj(Lambda))``.
    """

    sls_residual: float
    eigen_residual: float
    off_diagonal: float

    @property
    def worst(self):
        return max(self.sls_residual, self.eigen_residual)


def verify_transform_action(gc: GeneratorCoefficients, es: EigenSystem, M, tol=1e-8) -> TransformCheck:
    """Check that the transform built from ``W`` block-diagonalizes ``M``.

    Raises :class:`AccuracyError` if either residual exceeds ``tol``.
    """
    M = np.asarray(M, dtype=complex)
    L = es.L
    Z = z_matrix(L)
    W1 = gc.transformed_W1()
    W1_inv = np.linalg.inv(W1)
    lam = es.eigenvalues
    scale = max(norm2(M), np.finfo(float).tiny)

    sls = Z @ W1_inv @ Z @ M @ W1
    target = np.diag(np.concatenate([lam, np.conj(lam)]))
    eig = W1_inv @ Z @ M @ W1
    eig_target = np.diag(np.concatenate([lam, -np.conj(lam)]))
    r_sls = norm2(sls - target) / scale
    r_eig = norm2(eig - eig_target) / scale
    off = max(norm2(sls[:L, L:]), norm2(sls[L:, :L])) / scale
    check = TransformCheck(r_sls, r_eig, off)
    if check.worst > tol:
        raise AccuracyError(
            f"transform does not diagonalize M (residual {check.worst:.3e}); W1 assembly is inconsistent",
            check.worst,
        )
    return check


def write_generator_json(path, gc: GeneratorCoefficients) -> None:
    doc = {
        "L": gc.L,
        "W": encode_matrix(gc.W),
        "round_trip_error": gc.round_trip_error,
        "branch_cut": gc.branch_cut,
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")

"""Spectral analysis of the drift matrix.

The rapidities of a quadratic model are the eigenvalues of ``P``; the
``2L x 2L`` matrix ``Z M`` has spectrum ``{lambda} u {-conj(lambda)}``
with right eigenvectors ``[W_P; W_P]`` for the first family.  The
functions here compute the biorthonormal eigensystem of ``P``, extract
the relaxation gap, and check the structural identities numerically.

Gaps are reported in units of ``lambda_P``; Liouvillian decay rates are
twice as large.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._linalg import dagger, greedy_match, norm2, x_matrix, y_matrix, z_matrix
from .errors import (
    AccuracyError,
    DiagonalizationError,
    InvalidModelError,
    SingularMatrixError,
    StructuralError,
)

DEFAULT_TOL_EIG = 1e-9
DEFAULT_DARK_TOL = 1e-10
MAX_EIGVEC_COND = 1e12
NONPOSITIVE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Biorthonormal eigensystem of ``P``.

    Columns of ``W_P`` are right eigenvectors (unit norm), rows of
    ``W_P_left`` the matching left eigenvectors with
    ``W_P_left @ W_P = I``.  Eigenvalues are sorted by descending real
    part, then ascending imaginary part.
    """

    P: np.ndarray
    W_P: np.ndarray
    W_P_left: np.ndarray
    eigenvalues: np.ndarray
    condition: float
    residual: float

    @property
    def L(self):
        return len(self.eigenvalues)

    @property
    def norm(self):
        return norm2(self.P)


def _sort_order(w):
    # real parts equal up to round-off count as ties, broken by imag part
    scale = max(np.abs(w).max(initial=0.0), np.finfo(float).tiny)
    return np.lexsort((w.imag, -np.round(w.real / scale, 10)))


def eigendecompose_P(P, tol_eig=DEFAULT_TOL_EIG, *, require_stable=True) -> EigenSystem:
    """Eigendecompose ``P`` and normalize the left/right bases.

    Parameters
    ----------
    P
        Square complex matrix.
    tol_eig
        Relative tolerance for the right residual and for
        ``W_left W_P = I``.
    require_stable
        If true, an eigenvalue with real part above ``1e-12 ||P||``
        raises :class:`InvalidModelError`.

    Raises
    ------
    DiagonalizationError
        If the eigenvector matrix has condition number above 1e12.
    AccuracyError
        If a residual check fails.
    """
    P = np.asarray(P, dtype=complex)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise StructuralError(f"P must be square, got shape {P.shape}")
    if not tol_eig > 0:
        raise ValueError("tol_eig must be positive")
    w, V = np.linalg.eig(P)
    order = _sort_order(w)
    w = w[order]
    V = V[:, order]

    cond = float(np.linalg.cond(V))
    if not np.isfinite(cond) or cond > MAX_EIGVEC_COND:
        raise DiagonalizationError(
            f"eigenvector matrix has condition number {cond:.3e}; P is numerically defective"
        )
    W_left = np.linalg.inv(V)

    scale = max(norm2(P), np.finfo(float).tiny)
    residual = norm2(P @ V - V * w) / scale
    if residual > tol_eig:
        raise AccuracyError(f"eigen residual {residual:.3e} exceeds {tol_eig:.1e}", residual)
    bio = norm2(W_left @ V - np.eye(len(w)))
    if bio > tol_eig * max(1.0, cond):
        raise AccuracyError(f"biorthonormality defect {bio:.3e}", bio)
    if require_stable and len(w) and w.real.max() > NONPOSITIVE_RTOL * scale:
        raise InvalidModelError(
            f"P has eigenvalue with positive real part {w.real.max():.3e}; model is unstable"
        )
    for arr in (P, V, W_left, w):
        arr.setflags(write=False)
    return EigenSystem(P, V, W_left, w, cond, residual)


@dataclass(frozen=True)
class Rapidities:
    """Eigenvalues of ``P`` with gap and dark-mode bookkeeping.

    ``gap`` is ``None`` when every mode is dark.
    """

    eigenvalues: np.ndarray
    gap: float | None
    dark_mode_indices: tuple
    dark_tol: float

    @property
    def all_dark(self):
        return self.gap is None

    @property
    def has_dark_modes(self):
        return bool(self.dark_mode_indices)

    @property
    def liouvillian_eigenvalues(self):
        """Single-excitation Liouvillian eigenvalues, ``2 * lambda_P``."""
        return 2 * self.eigenvalues


def rapidities(es: EigenSystem, dark_tol=DEFAULT_DARK_TOL) -> Rapidities:
    """Classify dark modes and compute the relaxation gap."""
    w = es.eigenvalues
    thresh = dark_tol * es.norm
    dark = np.flatnonzero(np.abs(w.real) <= thresh)
    live = np.setdiff1d(np.arange(len(w)), dark)
    gap = float(np.min(-w.real[live])) if len(live) else None
    return Rapidities(w, gap, tuple(int(i) for i in dark), dark_tol)


@dataclass
class PairingReport:
    """Outcome of :func:`verify_pairing`; ``ok`` is true iff all four checks pass."""

    spectrum_distance: float
    right_residual: float
    left_residual: float
    biorthogonality_defect: float
    unmatched: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    tol: float = 0.0

    @property
    def ok(self):
        return not self.violations


def zm_matrix(M):
    M = np.asarray(M, dtype=complex)
    L = M.shape[0] // 2
    return z_matrix(L) @ M


def verify_pairing(M, es: EigenSystem, tol=DEFAULT_TOL_EIG, match_rtol=1e-8) -> PairingReport:
    """Check how the spectrum of ``Z M`` relates to the eigensystem of ``P``.

    Four checks, all relative to ``||M||``:

    (a) eigenvalues of ``Z M`` equal ``{lambda} u {-conj(lambda)}``
        (greedy matching, tolerance ``match_rtol``);
    (b) ``[W_P; W_P]`` are right eigenvectors for ``lambda``;
    (c) rows of ``[W_P^+, -W_P^+]`` are left eigenvectors for ``-conj(lambda)``;
    (d) ``x_i^+ Y x_j = 0`` whenever ``omega_i + conj(omega_j) != 0``.

    Check (d) uses the exact identity
    ``(conj(omega_i) + omega_j) x_i^+ Y x_j = 0`` and so bounds
    ``|x_i^+ Y x_j| * |omega_i + conj(omega_j)|`` by ``tol * ||M||``.
    """
    M = np.asarray(M, dtype=complex)
    L = es.L
    if M.shape != (2 * L, 2 * L):
        raise StructuralError(f"M has shape {M.shape}, expected {(2 * L, 2 * L)}")
    ZM = zm_matrix(M)
    scale = max(norm2(M), np.finfo(float).tiny)
    lam = es.eigenvalues
    W = es.W_P
    violations = []

    omega, X = np.linalg.eig(ZM)
    expected = np.concatenate([lam, -np.conj(lam)])
    assign, dist = greedy_match(expected, omega)
    spec_dist = float(dist.max()) if len(dist) else 0.0
    unmatched = [int(i) for i in np.flatnonzero(dist > match_rtol * scale)]
    if unmatched:
        violations.append(f"(a) {len(unmatched)} eigenvalues of Z M unmatched, max dist {spec_dist:.3e}")

    stacked = np.vstack([W, W])
    right = norm2(ZM @ stacked - stacked * lam) / scale
    if right > tol:
        violations.append(f"(b) right-eigenvector residual {right:.3e}")

    row = np.hstack([dagger(W), -dagger(W)])
    left = norm2(row @ ZM + np.conj(lam)[:, None] * row) / scale
    if left > tol:
        violations.append(f"(c) left-eigenvector residual {left:.3e}")

    X = X / np.linalg.norm(X, axis=0)
    G = dagger(X) @ y_matrix(L) @ X
    sep = np.abs(omega[:, None] + np.conj(omega)[None, :])
    weighted = np.abs(G) * sep
    mask = sep > match_rtol * scale
    bio = float(weighted[mask].max()) / scale if mask.any() else 0.0
    if bio > tol:
        bad = np.argwhere(mask & (weighted > tol * scale))
        violations.append(f"(d) biorthogonality violated for pairs {bad[:5].tolist()}")

    return PairingReport(spec_dist, right, left, bio, unmatched, violations, tol)


def check_trace_identity(model, es: EigenSystem) -> float:
    """``|sum_i 2 Re lambda_i - tr(lambda_plus - lambda_minus^T)|``."""
    lhs = 2 * np.sum(es.eigenvalues.real)
    rhs = np.trace(model.lambda_plus - model.lambda_minus.T)
    return float(abs(lhs - rhs))


@dataclass(frozen=True, eq=False)
class StructuredW1:
    """Block form of the matrix diagonalizing ``Z M``.

    ``W1 = [[W_P, C], [W_P, D]]`` with ``C = W_P Q`` and
    ``D = C - (W_P^+)^{-1}``; ``W1_inv = [[-D^+, C^+], [W_P^+, -W_P^+]]``.
    """

    W_P: np.ndarray
    C: np.ndarray
    D: np.ndarray
    Q: np.ndarray
    W1: np.ndarray
    W1_inv: np.ndarray

    @property
    def L(self):
        return self.W_P.shape[0]

    @property
    def W2(self):
        X = x_matrix(self.L)
        return -X @ np.conj(self.W1) @ X


def assemble_W1(es: EigenSystem, Q, *, herm_tol=1e-10, inverse_tol=1e-10) -> StructuredW1:
    """Build ``W1`` and its closed-form inverse from ``W_P`` and Hermitian ``Q``."""
    Q = np.asarray(Q, dtype=complex)
    W = es.W_P
    L = es.L
    if Q.shape != (L, L):
        raise StructuralError(f"Q has shape {Q.shape}, expected {(L, L)}")
    qscale = max(norm2(Q), 1.0)
    if norm2(Q - dagger(Q)) > herm_tol * qscale:
        raise ValueError("Q is not Hermitian")
    if es.condition > MAX_EIGVEC_COND:
        raise SingularMatrixError("W_P is numerically singular")
    W_inv_dag = dagger(es.W_P_left)
    C = W @ Q
    D = C - W_inv_dag
    W1 = np.block([[W, C], [W, D]])
    W1_inv = np.block([[-dagger(D), dagger(C)], [dagger(W), -dagger(W)]])
    err = norm2(W1 @ W1_inv - np.eye(2 * L))
    if err > inverse_tol * max(1.0, es.condition):
        raise AccuracyError(f"W1 W1^-1 deviates from identity by {err:.3e}", err)
    return StructuredW1(W, C, D, Q, W1, W1_inv)


def write_spectrum_csv(path, rap: Rapidities) -> None:
    """Columns ``k, re_lambda, im_lambda, is_dark`` with ``k`` 1-based."""
    dark = set(rap.dark_mode_indices)
    with Path(path).open("w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["k", "re_lambda", "im_lambda", "is_dark"])
        for k, lam in enumerate(rap.eigenvalues):
            out.writerow([k + 1, f"{lam.real:.17g}", f"{lam.imag:.17g}", int(k in dark)])

"""Steady-state two-point correlations.

The steady state solves the Lyapunov equation ``P Omega + Omega P^+ = Lp``
and the observable matrix is ``O[i, j] = <a_i^+ a_j> = -Omega[j, i]``.
:func:`solve_Q` does this in O(L^3) through the eigenbasis of ``P``;
:func:`kronecker_oracle` solves the vectorized L^2 x L^2 system directly
and exists only to cross-check it.

Currents are reported as particle flow, positive from site ``j`` to
``j + 1``.  For a bond with ``H`` containing ``-t a_j^+ a_{j+1} + h.c.``
the flow is ``2 Im(t O[j, j+1])``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._linalg import dagger, norm2
from .errors import (
    AccuracyError,
    DarkModeError,
    InstabilityError,
    PhysicalityError,
    StructuralError,
)
from .model import ChainParams, LadderParams, SiteIndexMap, leg_hopping
from .spectral import EigenSystem

HERMITIAN_RTOL = 1e-10
RESIDUAL_RTOL = 1e-8
KRONECKER_MAX_L = 64


def solve_Q(es: EigenSystem, lambda_plus, denom_tol=None) -> np.ndarray:
    """Steady-state coefficients in the eigenbasis of ``P``.

    ``Q[m, n] = (W_l Lp W_l^+)[m, n] / (lambda_m + conj(lambda_n))``.

    Raises
    ------
    InstabilityError
        If some ``|lambda_m + conj(lambda_n)|`` is below ``denom_tol``
        (default ``1e-12 ||P||``); this includes every dark mode.
    """
    lp = np.asarray(lambda_plus, dtype=complex)
    if lp.shape != (es.L, es.L):
        raise StructuralError(f"lambda_plus has shape {lp.shape}, expected {(es.L, es.L)}")
    if denom_tol is None:
        denom_tol = 1e-12 * es.norm
    lam = es.eigenvalues
    denom = lam[:, None] + np.conj(lam)[None, :]
    small = np.abs(denom) < denom_tol
    if small.any():
        m, n = (int(i) for i in np.argwhere(small)[0])
        raise InstabilityError(
            f"|lambda_{m} + conj(lambda_{n})| = {abs(denom[m, n]):.3e} below {denom_tol:.3e}; "
            "P has (near-)dark modes and the steady state is not unique",
            pair=(m, n),
        )
    Wl = es.W_P_left
    Q = (Wl @ lp @ dagger(Wl)) / denom
    defect = norm2(Q - dagger(Q))
    if defect > HERMITIAN_RTOL * max(norm2(Q), 1.0):
        raise AccuracyError(f"Q is not Hermitian (defect {defect:.3e})", defect)
    return Q


@dataclass(frozen=True, eq=False)
class SteadyStateCorrelations:
    Q: np.ndarray
    Omega: np.ndarray
    O: np.ndarray
    residual: float

    @property
    def L(self):
        return self.O.shape[0]


def lyapunov_residual(P, Omega, lambda_plus):
    return norm2(P @ Omega + Omega @ dagger(P) - lambda_plus)


def correlations(es: EigenSystem, Q, lambda_plus) -> SteadyStateCorrelations:
    """Assemble ``Omega = W_P Q W_P^+`` and ``O = -Omega^T``.

    The Lyapunov residual must be below ``1e-8 ||Lp||`` (or
    ``1e-8 ||P|| ||Omega||`` when ``Lp = 0``).
    """
    lp = np.asarray(lambda_plus, dtype=complex)
    W = es.W_P
    Omega = W @ Q @ dagger(W)
    O = -Omega.T
    res = lyapunov_residual(es.P, Omega, lp)
    scale = norm2(lp)
    bound = RESIDUAL_RTOL * (scale if scale > 0 else es.norm * norm2(Omega))
    if res > bound:
        raise AccuracyError(f"Lyapunov residual {res:.3e} exceeds {bound:.3e}", res)
    for name, mat in (("Omega", Omega), ("O", O)):
        defect = norm2(mat - dagger(mat))
        if defect > HERMITIAN_RTOL * max(norm2(mat), 1.0):
            raise AccuracyError(f"{name} is not Hermitian (defect {defect:.3e})", defect)
    return SteadyStateCorrelations(Q, Omega, O, res)


def steady_state(model, tol_eig=None):
    """Convenience pipeline model -> ``(EigenSystem, SteadyStateCorrelations)``."""
    from .model import drift_matrix
    from .spectral import DEFAULT_TOL_EIG, eigendecompose_P

    es = eigendecompose_P(drift_matrix(model), tol_eig or DEFAULT_TOL_EIG)
    Q = solve_Q(es, model.lambda_plus)
    return es, correlations(es, Q, model.lambda_plus)


def kronecker_oracle(P, lambda_plus) -> np.ndarray:
    """Solve ``P Omega + Omega P^+ = Lp`` as one dense linear system.

    Uses column-major ``vec``:
    ``(I (x) P + conj(P) (x) I) vec(Omega) = vec(Lp)``.
    Memory and time scale as L^4 and L^6, so ``L <= 64``.
    """
    P = np.asarray(P, dtype=complex)
    lp = np.asarray(lambda_plus, dtype=complex)
    L = P.shape[0]
    if L > KRONECKER_MAX_L:
        raise StructuralError(f"kronecker_oracle limited to L <= {KRONECKER_MAX_L}, got {L}")
    eye = np.eye(L)
    A = np.kron(eye, P) + np.kron(np.conj(P), eye)
    if np.linalg.cond(A) > 1e13:
        raise DarkModeError("vectorized Lyapunov operator is singular; P has dark modes")
    vec = np.linalg.solve(A, lp.reshape(-1, order="F"))
    return vec.reshape((L, L), order="F")


def densities(ss: SteadyStateCorrelations) -> np.ndarray:
    d = np.diag(ss.O)
    if np.abs(d.imag).max(initial=0.0) > 1e-10 * max(1.0, np.abs(d).max(initial=0.0)):
        raise AccuracyError("densities have non-negligible imaginary parts")
    n = d.real.copy()
    if n.min(initial=0.0) < -1e-8:
        raise PhysicalityError(f"negative density {n.min():.3e}")
    return n


@dataclass(frozen=True, eq=False)
class CurrentProfile:
    """Bond currents (particle flow along increasing site index).

    For a chain ``bonds`` has shape ``(L-1,)``; for a ladder it has
    shape ``(L-1, 2)`` with column ``p-1`` holding leg ``p``, ``rungs``
    holds the flow from leg 1 to leg 2 at each rung and ``chiral`` is
    ``sum_j (J_{j,1} - J_{j,2}) / L``.
    """

    bonds: np.ndarray
    rungs: np.ndarray | None = None
    chiral: float | None = None


def _flow(t, O, a, b):
    return 2 * np.imag(t * O[a, b])


def chain_bond_currents(ss: SteadyStateCorrelations, params: ChainParams) -> CurrentProfile:
    O = ss.O
    j = np.arange(params.L - 1)
    bonds = 2 * params.J * np.imag(O[j, j + 1])
    return CurrentProfile(bonds)


def leg_currents(ss: SteadyStateCorrelations, params: LadderParams) -> CurrentProfile:
    L = params.L
    sites = SiteIndexMap(L)
    if ss.L != sites.size:
        raise StructuralError(f"correlations are {ss.L}x{ss.L}, ladder needs {sites.size}")
    O = ss.O
    legs = np.empty((L - 1, 2))
    for p in (1, 2):
        t = leg_hopping(params, p)
        for j in range(1, L):
            legs[j - 1, p - 1] = _flow(t, O, sites.flat(j, p), sites.flat(j + 1, p))
    rungs = np.array(
        [_flow(params.J_perp, O, sites.flat(j, 1), sites.flat(j, 2)) for j in range(1, L + 1)]
    )
    chiral = float(np.sum(legs[:, 0] - legs[:, 1]) / L)
    return CurrentProfile(legs, rungs, chiral)


def bath_injection(ss: SteadyStateCorrelations, model) -> np.ndarray:
    """Rate at which the baths add particles to each site.

    ``2 Lp_ss - 2 Re[((Lp - Lm^T) Omega)_ss]``; for diagonal rates this
    is ``2 Lp_s (n_s + 1) - 2 Lm_s n_s``.
    """
    G = model.lambda_plus - model.lambda_minus.T
    return 2 * np.real(np.diag(model.lambda_plus)) - 2 * np.real(np.diag(G @ ss.Omega))


def write_observables_csv(path, ss: SteadyStateCorrelations) -> None:
    with Path(path).open("w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["i", "j", "re_O", "im_O"])
        for i in range(ss.L):
            for j in range(ss.L):
                z = ss.O[i, j]
                out.writerow([i, j, f"{z.real:.17g}", f"{z.imag:.17g}"])


def write_densities_csv(path, n) -> None:
    with Path(path).open("w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["site", "density"])
        for i, v in enumerate(n):
            out.writerow([i, f"{v:.17g}"])


def write_currents_csv(path, profile: CurrentProfile) -> None:
    with Path(path).open("w", newline="") as fh:
        out = csv.writer(fh)
        if profile.bonds.ndim == 1:
            out.writerow(["bond", "current"])
            for j, v in enumerate(profile.bonds):
                out.writerow([j, f"{v:.17g}"])
        else:
            out.writerow(["rung", "leg", "current"])
            for j in range(profile.bonds.shape[0]):
                for p in (1, 2):
                    out.writerow([j + 1, p, f"{profile.bonds[j, p - 1]:.17g}"])

"""Closed-form spectrum of the boundary-driven uniform chain.

For the chain the drift matrix is tridiagonal Toeplitz (``iJ/2`` off the
diagonal) bordered by ``-gamma_1/2`` and ``-gamma_L/2`` in the corners.
Its eigenvalues are ``lambda = iJ cos(theta)`` with complex ``theta``
solving a secular equation.  When ``J**2 == gamma_1 * gamma_L`` the
large-L approximation gives every mode but one explicitly:

    alpha_k = k pi / L,     s_k = 2 sqrt(kappa) sin(alpha_k) / (kappa + 1),
    beta_k  = ln((1 - s_k) / (1 + s_k)) / (2L),
    lambda_k = J [sin(alpha_k) sinh(beta_k) + i cos(alpha_k) cosh(beta_k)],

for ``k = 1 .. L-1`` and ``kappa = J**2 / gamma_1**2``.  The remaining
eigenvalue belongs to a boundary mode and is not produced.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ._linalg import greedy_match
from .errors import RegimeError
from .model import ChainParams, build_chain, drift_matrix
from .spectral import eigendecompose_P

REGIME_RTOL = 1e-9


@dataclass(frozen=True)
class ChainThetaSolution:
    k: int
    alpha: float
    beta: float
    theta: complex
    lam: complex
    kappa: float


def _check_regime(params: ChainParams):
    J2 = params.J**2
    if params.L < 2:
        raise RegimeError("closed form needs L >= 2")
    if J2 == 0 or abs(J2 - params.gamma_1 * params.gamma_L) > REGIME_RTOL * J2:
        raise RegimeError(
            f"closed form requires J^2 = gamma_1 gamma_L (got J^2={J2:.6g}, "
            f"gamma_1 gamma_L={params.gamma_1 * params.gamma_L:.6g}); "
            "use numeric eigendecomposition instead"
        )


def _s(kappa, alpha):
    return 2 * np.sqrt(kappa) / (kappa + 1) * np.sin(alpha)


def analytic_spectrum(params: ChainParams) -> list[ChainThetaSolution]:
    """Closed-form modes ``k = 1 .. L-1``, ordered by ``k``.

    For ``kappa = 1`` and even ``L`` the middle mode ``k = L/2`` has
    ``s = 1`` and a divergent ``beta``; it is omitted, so ``L - 2``
    modes are returned.
    """
    _check_regime(params)
    L, J = params.L, params.J
    kappa = params.kappa
    out = []
    for k in range(1, L):
        alpha = k * np.pi / L
        s = _s(kappa, alpha)
        if s >= 1 - 1e-14:
            continue
        beta = np.log((1 - s) / (1 + s)) / (2 * L)
        lam = J * (np.sin(alpha) * np.sinh(beta) + 1j * np.cos(alpha) * np.cosh(beta))
        out.append(ChainThetaSolution(k, alpha, beta, complex(alpha, beta), complex(lam), kappa))
    return out


def analytic_eigenvector(theta, params: ChainParams) -> np.ndarray:
    """Unit-norm ``u`` with ``u_j ~ sin(j theta) - i (gamma_1/J) sin((j-1) theta)``."""
    theta = complex(theta)
    st = np.sin(theta)
    if abs(st) < 1e-12:
        raise ValueError(f"sin(theta) = {st} is degenerate")
    j = np.arange(1, params.L + 1)
    u = (np.sin(j * theta) - 1j * (params.gamma_1 / params.J) * np.sin((j - 1) * theta)) / st
    return u / np.linalg.norm(u)


def secular_residual(theta, params: ChainParams) -> complex:
    theta = complex(theta)
    L, J = params.L, params.J
    g1, gL = params.gamma_1, params.gamma_L
    return (
        -(J**2) * np.sin((L + 1) * theta)
        + 1j * J * (g1 + gL) * np.sin(L * theta)
        + g1 * gL * np.sin((L - 1) * theta)
    )


def secular_scale(theta, params: ChainParams) -> float:
    """Sum of term magnitudes; normalizes :func:`secular_residual`."""
    theta = complex(theta)
    L, J = params.L, params.J
    g1, gL = params.gamma_1, params.gamma_L
    return float(
        J**2 * abs(np.sin((L + 1) * theta))
        + J * (g1 + gL) * abs(np.sin(L * theta))
        + g1 * gL * abs(np.sin((L - 1) * theta))
    )


def theta_from_eigenvalue(lam, J) -> complex:
    """Invert ``lambda = iJ cos(theta)``, folding ``Re theta`` into [0, pi]."""
    theta = np.arccos(complex(lam) / (1j * J))
    if theta.real < 0:
        theta = -theta
    return complex(theta)


@dataclass(frozen=True)
class GapResult:
    exact: float
    asymptote: float


def closed_form_gap(params: ChainParams) -> GapResult:
    """Slowest relaxation rate: full closed form and its ``1/L**3`` asymptote."""
    _check_regime(params)
    L, J, kappa = params.L, params.J, params.kappa
    s = _s(kappa, np.pi / L)
    exact = J * np.sin(np.pi / L) * np.sinh(np.log((1 + s) / (1 - s)) / (2 * L))
    asym = 2 * np.pi**2 * np.sqrt(kappa) * J / ((kappa + 1) * L**3)
    return GapResult(float(exact), float(asym))


@dataclass
class MatchReport:
    L: int
    n_analytic: int
    n_numeric: int
    max_distance: float
    mean_distance: float
    unmatched: list
    tol_match: float

    @property
    def passed(self):
        return self.max_distance <= self.tol_match

    def to_dict(self):
        d = asdict(self)
        d["unmatched"] = [[z.real, z.imag] for z in self.unmatched]
        d["passed"] = self.passed
        return d


def compare_with_numeric(params: ChainParams, tol_match=0.01, *, numeric=None) -> MatchReport:
    """Match each closed-form eigenvalue to a distinct numeric one.

    ``numeric`` may carry precomputed eigenvalues of the chain's ``P``.
    """
    modes = analytic_spectrum(params)
    if numeric is None:
        numeric = eigendecompose_P(drift_matrix(build_chain(params))).eigenvalues
    numeric = np.asarray(numeric)
    analytic = np.array([m.lam for m in modes])
    assign, dist = greedy_match(analytic, numeric)
    left = np.setdiff1d(np.arange(len(numeric)), assign)
    return MatchReport(
        params.L,
        len(analytic),
        len(numeric),
        float(dist.max()),
        float(dist.mean()),
        [complex(numeric[i]) for i in left],
        tol_match,
    )


def write_analytic_csv(path, modes) -> None:
    with Path(path).open("w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["k", "alpha", "beta", "re_lambda", "im_lambda"])
        for m in modes:
            out.writerow(
                [m.k, f"{m.alpha:.17g}", f"{m.beta:.17g}", f"{m.lam.real:.17g}", f"{m.lam.imag:.17g}"]
            )


def write_match_json(path, report: MatchReport) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2) + "\n")

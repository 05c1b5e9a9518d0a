"""Brute-force steady state on a truncated Fock space.

Builds the full Lindblad superoperator for ``L`` modes with at most
``n_max`` bosons per mode and finds its null vector.  Used only as an
independent check of the quadratic reduction; cost grows as
``(n_max + 1)**(2L)``.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import AccuracyError, StructuralError, TruncationError

MAX_LIOUVILLE_DIM = 9**6
TOP_LEVEL_TOL = 1e-2


def _mode_operators(L, d):
    a1 = sp.diags(np.sqrt(np.arange(1, d)), 1, shape=(d, d), format="csr", dtype=complex)
    eye = sp.identity(d, format="csr", dtype=complex)
    ops = []
    for k in range(L):
        factors = [eye] * L
        factors[k] = a1
        op = factors[0]
        for f in factors[1:]:
            op = sp.kron(op, f, format="csr")
        ops.append(op)
    return ops


def _spre(A, eye):
    return sp.kron(eye, A, format="csr")


def _spost(B, eye):
    return sp.kron(B.T, eye, format="csr")


def _sprepost(A, B):
    # vec(A X B) = (B^T kron A) vec(X), column-major vec
    return sp.kron(B.T, A, format="csr")


def liouvillian(model, n_max):
    """Sparse superoperator acting on column-major ``vec(rho)``."""
    L, d = model.L, n_max + 1
    N = d**L
    a = _mode_operators(L, d)
    ad = [op.conj().T.tocsr() for op in a]
    eye = sp.identity(N, format="csr", dtype=complex)

    H = sp.csr_matrix((N, N), dtype=complex)
    for m in range(L):
        for n in range(L):
            if model.h[m, n] != 0:
                H = H + model.h[m, n] * (ad[m] @ a[n])
    sup = -1j * (_spre(H, eye) - _spost(H, eye))

    # the "+ h.c." doubles the jump term and symmetrizes the anticommutator
    for i in range(L):
        for j in range(L):
            lp = model.lambda_plus[i, j]
            if lp != 0:
                aa = a[j] @ ad[i]
                sup = sup + lp * (2 * _sprepost(ad[i], a[j]) - _spre(aa, eye) - _spost(aa, eye))
            lm = model.lambda_minus[i, j]
            if lm != 0:
                aa = ad[j] @ a[i]
                sup = sup + lm * (2 * _sprepost(a[i], ad[j]) - _spre(aa, eye) - _spost(aa, eye))
    return sup.tocsc(), a, ad


def truncated_fock_oracle(model, n_max, *, shift=1e-9, iterations=8, return_rho=False):
    """Return ``O[i, j] = <a_i^+ a_j>`` from the truncated-space steady state.

    The null vector comes from shifted inverse iteration on the
    superoperator; the trace fixes its scale.

    Raises
    ------
    TruncationError
        If some mode has more than 1% population in its top retained level.
    """
    L, d = model.L, n_max + 1
    if n_max < 1:
        raise StructuralError("n_max must be at least 1")
    if d ** (2 * L) > MAX_LIOUVILLE_DIM:
        raise StructuralError(
            f"Liouville space dimension {d ** (2 * L)} exceeds {MAX_LIOUVILLE_DIM}"
        )
    sup, a, ad = liouvillian(model, n_max)
    N = d**L
    scale = max(abs(sup).max(), 1.0)
    lu = spla.splu(sup - shift * scale * sp.identity(N * N, format="csc"))

    x = np.ones(N * N, dtype=complex) / N
    for _ in range(iterations):
        x = lu.solve(x)
        x /= np.linalg.norm(x)
    rho = x.reshape((N, N), order="F")
    rho = rho / np.trace(rho)
    res = np.linalg.norm(sup @ rho.reshape(-1, order="F")) / scale
    if res > 1e-8:
        raise AccuracyError(f"Fock steady state residual {res:.3e}", res)

    diag = np.real(np.diag(rho)).reshape((d,) * L)
    for k in range(L):
        marginal = diag.sum(axis=tuple(m for m in range(L) if m != k))
        if marginal[-1] > TOP_LEVEL_TOL:
            raise TruncationError(
                f"mode {k} has population {marginal[-1]:.3e} in level n_max={n_max}"
            )

    O = np.empty((L, L), dtype=complex)
    for i in range(L):
        for j in range(L):
            O[i, j] = (ad[i] @ a[j]).multiply(rho.T).sum()
    if return_rho:
        return O, rho
    return O

import numpy as np


def norm2(a):
    """Spectral norm; 0 for empty input."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    if a.ndim == 1:
        return float(np.linalg.norm(a))
    return float(np.linalg.norm(a, 2))


def dagger(a):
    return np.conj(np.swapaxes(a, -1, -2))


def hermitian_defect(a):
    """Return ||A - A^dagger||_2."""
    return norm2(a - dagger(a))


def z_matrix(L):
    return np.diag(np.concatenate([np.ones(L), -np.ones(L)])).astype(complex)


def x_matrix(L):
    eye = np.eye(L, dtype=complex)
    zero = np.zeros((L, L), dtype=complex)
    return np.block([[zero, eye], [eye, zero]])


def y_matrix(L):
    eye = np.eye(L, dtype=complex)
    zero = np.zeros((L, L), dtype=complex)
    return -1j * np.block([[zero, eye], [-eye, zero]])


def greedy_match(targets, candidates):
    """Assign each target the nearest still-free candidate.

    Targets are processed in index order; ties go to the lower candidate
    index.  Returns ``(assignment, distances)`` where ``assignment[i]`` is
    the candidate index used for target ``i``.
    """
    targets = np.asarray(targets, dtype=complex)
    candidates = np.asarray(candidates, dtype=complex)
    if len(targets) > len(candidates):
        raise ValueError("more targets than candidates")
    free = np.ones(len(candidates), dtype=bool)
    assignment = np.empty(len(targets), dtype=int)
    distances = np.empty(len(targets))
    for i, t in enumerate(targets):
        d = np.abs(candidates - t)
        d[~free] = np.inf
        j = int(np.argmin(d))
        assignment[i] = j
        distances[i] = d[j]
        free[j] = False
    return assignment, distances

"""Quadratic, number-conserving bosonic Lindblad models.

A model on ``L`` modes is fixed by three ``L x L`` matrices: the
single-particle Hamiltonian ``h`` and the gain/loss rate matrices
``lambda_plus`` and ``lambda_minus``.  The master equation is

    d rho/dt = -i [H, rho] + sum_ij [ Lp_ij (a_i^+ rho a_j - a_j a_i^+ rho)
                                    + Lm_ij (a_i rho a_j^+ - a_j^+ a_i rho) + h.c. ]

with ``H = sum_mn h_mn a_m^+ a_n`` and hbar = 1, so energies are angular
frequencies.  Everything downstream works from two derived matrices:
the ``L x L`` drift matrix ``P`` and the ``2L x 2L`` matrix ``M``.

Ladder flux ``phi`` is stored in units of pi throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._linalg import dagger, hermitian_defect, norm2
from .errors import InvalidModelError, ModelParseError, StructuralError

HERMITIAN_RTOL = 1e-12
PSD_RTOL = 1e-12

_MATRIX_FIELDS = ("h", "lambda_plus", "lambda_minus")


def _frozen_matrix(value, name, L):
    try:
        arr = np.array(value, dtype=complex)
    except (TypeError, ValueError) as exc:
        raise StructuralError(f"{name} is not a numeric matrix: {exc}") from None
    if arr.shape != (L, L):
        raise StructuralError(f"{name} has shape {arr.shape}, expected ({L}, {L})")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class QuadraticLindbladModel:
    """The triple ``(h, lambda_plus, lambda_minus)`` on ``L`` modes.

    Matrices are copied to read-only complex arrays on construction;
    shape problems raise :class:`StructuralError`.  Physical invariants
    are *not* enforced here, see :func:`validate_model`.
    """

    L: int
    h: np.ndarray
    lambda_plus: np.ndarray
    lambda_minus: np.ndarray
    label: str = ""

    def __post_init__(self):
        if isinstance(self.L, bool) or not isinstance(self.L, (int, np.integer)) or self.L < 1:
            raise StructuralError(f"L must be a positive integer, got {self.L!r}")
        object.__setattr__(self, "L", int(self.L))
        for name in _MATRIX_FIELDS:
            object.__setattr__(self, name, _frozen_matrix(getattr(self, name), name, self.L))

    def check(self):
        """Raise :class:`InvalidModelError` if any invariant is violated."""
        report = validate_model(self)
        if not report.ok:
            raise InvalidModelError("; ".join(report.errors))
        return self


@dataclass(frozen=True)
class ChainParams:
    """Boundary-driven uniform chain.

    ``gamma_1``/``gamma_L`` are the net loss rates at the two ends and
    ``nbar_1``/``nbar_L`` the densities the baths would impose on an
    isolated site.
    """

    L: int
    J: float = 1.0
    gamma_1: float = 1.0
    gamma_L: float = 1.0
    nbar_1: float = 0.0
    nbar_L: float = 0.0

    def __post_init__(self):
        if self.L < 1:
            raise ValueError(f"L must be >= 1, got {self.L}")
        if not (self.gamma_1 > 0 and self.gamma_L > 0):
            raise ValueError(
                f"gamma_1 and gamma_L must be positive, got {self.gamma_1}, {self.gamma_L}"
            )
        if self.nbar_1 < 0 or self.nbar_L < 0:
            raise ValueError("boundary densities must be non-negative")

    @property
    def kappa(self):
        """``J**2 / gamma_1**2``."""
        return self.J**2 / self.gamma_1**2


@dataclass(frozen=True)
class LadderParams:
    """Two-leg flux ladder driven at both ends of leg 1; ``phi`` in units of pi."""

    L: int
    J_par: float = 1.0
    J_perp: float = 1.7
    phi: float = 0.0
    gamma: float = 1.0
    nbar_first: float = 1.0
    nbar_last: float = 0.0

    def __post_init__(self):
        if self.L < 2:
            raise ValueError(f"ladder needs L >= 2 rungs, got {self.L}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not 0.0 <= self.phi <= 1.0:
            raise ValueError(f"phi must lie in [0, 1] (units of pi), got {self.phi}")
        if self.nbar_first < 0 or self.nbar_last < 0:
            raise ValueError("boundary densities must be non-negative")


@dataclass(frozen=True)
class SiteIndexMap:
    """Bijection between ladder sites ``(j, p)`` (1-based) and flat indices."""

    L: int

    @property
    def size(self):
        return 2 * self.L

    def flat(self, j, p):
        if not (1 <= j <= self.L and p in (1, 2)):
            raise IndexError(f"site ({j}, {p}) outside ladder of {self.L} rungs")
        return 2 * (j - 1) + (p - 1)

    def site(self, i):
        if not 0 <= i < self.size:
            raise IndexError(f"flat index {i} outside [0, {self.size})")
        return i // 2 + 1, i % 2 + 1


@dataclass
class ValidationReport:
    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.errors

    def __bool__(self):
        return self.ok


def validate_model(model: QuadraticLindbladModel) -> ValidationReport:
    """Check hermiticity of ``h`` and hermiticity/positivity of the rates.

    Dimension problems were already caught when the model was built and
    surface as :class:`StructuralError`.
    """
    if not isinstance(model, QuadraticLindbladModel):
        raise StructuralError(f"expected QuadraticLindbladModel, got {type(model).__name__}")
    report = ValidationReport()
    for name in _MATRIX_FIELDS:
        mat = getattr(model, name)
        scale = max(norm2(mat), 1.0)
        defect = hermitian_defect(mat)
        if defect > HERMITIAN_RTOL * scale:
            report.errors.append(f"{name} is not Hermitian (||A - A^+|| = {defect:.3e})")
            continue
        if name == "h":
            continue
        lo = float(np.linalg.eigvalsh((mat + dagger(mat)) / 2).min())
        if lo < -PSD_RTOL * scale:
            report.errors.append(f"{name} has negative eigenvalue {lo:.6g}")

    if report.ok:
        if norm2(model.lambda_plus) == 0 and norm2(model.lambda_minus) == 0:
            report.warnings.append("no dissipation: every mode is dark")
        else:
            net = model.lambda_minus.T - model.lambda_plus
            lo = float(np.linalg.eigvalsh((net + dagger(net)) / 2).min())
            if lo < -PSD_RTOL * max(norm2(net), 1.0):
                report.warnings.append(
                    f"lambda_minus^T - lambda_plus has eigenvalue {lo:.6g} < 0: "
                    "no normalizable steady state"
                )
    return report


def build_chain(params: ChainParams) -> QuadraticLindbladModel:
    """Uniform chain with hopping ``-J`` and baths on sites 1 and L."""
    L = params.L
    h = np.zeros((L, L), dtype=complex)
    idx = np.arange(L - 1)
    h[idx, idx + 1] = -params.J
    h[idx + 1, idx] = -params.J
    lp = np.zeros((L, L))
    lm = np.zeros((L, L))
    # for L == 1 only the first bath is kept
    lp[L - 1, L - 1] = params.gamma_L * params.nbar_L
    lm[L - 1, L - 1] = params.gamma_L * (params.nbar_L + 1)
    lp[0, 0] = params.gamma_1 * params.nbar_1
    lm[0, 0] = params.gamma_1 * (params.nbar_1 + 1)
    label = (
        f"chain L={L} J={params.J} gamma_1={params.gamma_1} gamma_L={params.gamma_L} "
        f"nbar_1={params.nbar_1} nbar_L={params.nbar_L}"
    )
    return QuadraticLindbladModel(L, h, lp, lm, label)


def leg_hopping(params: LadderParams, p: int) -> complex:
    """Hopping amplitude ``t`` with ``H`` containing ``-t a_{j,p}^+ a_{j+1,p}``."""
    sign = 1 if p == 1 else -1
    return params.J_par * np.exp(1j * sign * params.phi * np.pi / 2)


def build_ladder(params: LadderParams) -> QuadraticLindbladModel:
    """Flux ladder with baths on sites (1, 1) and (L, 1).

    The rates are ``2*gamma*nbar`` (gain) and ``2*gamma*(nbar + 1)``
    (loss), which puts ``-gamma`` on the corresponding diagonal entries
    of the drift matrix.
    """
    L = params.L
    sites = SiteIndexMap(L)
    n = sites.size
    h = np.zeros((n, n), dtype=complex)
    for j in range(1, L + 1):
        a, b = sites.flat(j, 1), sites.flat(j, 2)
        h[a, b] = h[b, a] = -params.J_perp
        if j < L:
            for p in (1, 2):
                t = leg_hopping(params, p)
                u, v = sites.flat(j, p), sites.flat(j + 1, p)
                h[u, v] = -t
                h[v, u] = -np.conj(t)
    lp = np.zeros((n, n))
    lm = np.zeros((n, n))
    for j, nbar in ((1, params.nbar_first), (L, params.nbar_last)):
        i = sites.flat(j, 1)
        lp[i, i] = 2 * params.gamma * nbar
        lm[i, i] = 2 * params.gamma * (nbar + 1)
    label = (
        f"ladder L={L} J_par={params.J_par} J_perp={params.J_perp} phi={params.phi} "
        f"gamma={params.gamma} nbar_first={params.nbar_first} nbar_last={params.nbar_last}"
    )
    return QuadraticLindbladModel(n, h, lp, lm, label)


def drift_matrix(model: QuadraticLindbladModel) -> np.ndarray:
    """``P = (-i h + lambda_plus - lambda_minus^T) / 2``."""
    return (-1j * model.h + model.lambda_plus - model.lambda_minus.T) / 2


def k_matrix(model: QuadraticLindbladModel) -> np.ndarray:
    return (-1j * model.h - model.lambda_plus - model.lambda_minus.T) / 2


def bath_superoperator_matrix(model: QuadraticLindbladModel) -> np.ndarray:
    """The ``2L x 2L`` matrix ``M = [[K, Lp], [Lm^T, K^+]]``."""
    K = k_matrix(model)
    return np.block([[K, model.lambda_plus], [model.lambda_minus.T, dagger(K)]])


def random_stable_model(L, rng, *, scale=1.0, gain_rank=None, label="random"):
    """Random model with ``lambda_minus^T - lambda_plus`` positive definite.

    Such a model has no dark modes and a unique steady state.
    """
    rng = np.random.default_rng(rng)

    def cplx(shape):
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    a = cplx((L, L))
    h = scale * (a + dagger(a)) / 2
    rank = L if gain_rank is None else gain_rank
    g = cplx((L, rank)) / np.sqrt(2 * max(rank, 1))
    lp = scale * g @ dagger(g)
    b = cplx((L, L)) / np.sqrt(2 * L)
    excess = scale * (b @ dagger(b) + 0.1 * np.eye(L))
    lm = np.conj(lp + excess)
    lp = (lp + dagger(lp)) / 2
    lm = (lm + dagger(lm)) / 2
    return QuadraticLindbladModel(L, h, lp, lm, label)


# --- serialization ---------------------------------------------------------

def _encode_matrix(mat):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(mat)]


def model_to_dict(model: QuadraticLindbladModel) -> dict:
    out = {"L": model.L, "label": model.label}
    for name in _MATRIX_FIELDS:
        out[name] = _encode_matrix(getattr(model, name))
    return out


def encode_matrix(mat):
    """Nested ``[re, im]`` list form used by model and generator files."""
    return _encode_matrix(mat)


def decode_matrix(value, name, L=None):
    """Inverse of :func:`encode_matrix` with field-named parse errors."""
    if not isinstance(value, list):
        raise ModelParseError("matrix must be a list of rows", field=name)
    rows = len(value)
    if L is not None and rows != L:
        raise StructuralError(f"{name} has {rows} rows but L = {L}")
    out = np.empty((rows, rows), dtype=complex)
    for r, row in enumerate(value):
        if not isinstance(row, list) or len(row) != rows:
            got = len(row) if isinstance(row, list) else type(row).__name__
            raise StructuralError(f"{name} row {r} has {got} entries, expected {rows}")
        for c, entry in enumerate(row):
            if (
                not isinstance(entry, list)
                or len(entry) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry)
            ):
                raise ModelParseError(
                    f"entry [{r}][{c}] must be a [re, im] pair of numbers", field=name
                )
            out[r, c] = complex(entry[0], entry[1])
    return out


def model_from_dict(doc: dict) -> QuadraticLindbladModel:
    if not isinstance(doc, dict):
        raise ModelParseError("top level must be an object")
    if "L" not in doc:
        raise ModelParseError("missing required field", field="L")
    L = doc["L"]
    if isinstance(L, bool) or not isinstance(L, int) or L < 1:
        raise ModelParseError(f"L must be a positive integer, got {L!r}", field="L")
    mats = {}
    for name in _MATRIX_FIELDS:
        if name not in doc:
            raise ModelParseError("missing required field", field=name)
        mats[name] = decode_matrix(doc[name], name, L)
    label = doc.get("label", "")
    if not isinstance(label, str):
        raise ModelParseError("label must be a string", field="label")
    return QuadraticLindbladModel(L, mats["h"], mats["lambda_plus"], mats["lambda_minus"], label)


def save_model(model: QuadraticLindbladModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n")


def load_model(path) -> QuadraticLindbladModel:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    return model_from_dict(doc)

"""Scenario runners: chain spectrum match, gap scaling, chiral phase diagram.

Every runner writes CSV files into ``out_dir`` and returns a result
object.  Floats are written with 17 significant digits in a fixed
order, so repeated runs give byte-identical files.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.optimize import bisect

from .analytic_chain import (
    MatchReport,
    analytic_spectrum,
    compare_with_numeric,
    write_analytic_csv,
    write_match_json,
)
from .errors import NumericalError, QuadLindError, RegimeError, StructuralError
from .lyapunov import leg_currents, steady_state
from .model import ChainParams, LadderParams, build_chain, build_ladder, drift_matrix
from .spectral import eigendecompose_P, rapidities, write_spectrum_csv

log = logging.getLogger(__name__)

DEFAULT_CHAIN_LS = (50, 100, 200, 400)
DEFAULT_LADDER_LS = tuple(int(round(x)) for x in np.geomspace(20, 300, 8))
DEFAULT_FIT_MIN_L = 20


def _fmt(x) -> str:
    return "" if x is None or not np.isfinite(x) else f"{x:.17g}"


# --- phase boundaries -------------------------------------------------------


@dataclass(frozen=True)
class PhaseBoundaries:
    """Transition fluxes in units of pi; ``None`` where no solution exists."""

    j_perp: float
    phi_bar: float | None
    phi_tilde: float | None

    def __iter__(self):
        return iter((self.phi_bar, self.phi_tilde))


def phase_boundaries(r: float) -> PhaseBoundaries:
    """Boundaries for rung/leg ratio ``r = J_perp / J_par``.

    ``phi_bar = (2/pi) arccos(r/2)`` exists for ``0 < r < 2``.
    ``phi_tilde`` solves ``2 tan(x) sin(x) = r`` with ``x = phi pi / 2``;
    the left side grows monotonically from 0 to infinity on
    ``(0, pi/2)``, so any ``r > 0`` has exactly one root.
    """
    r = float(r)
    phi_bar = None
    if 0 < r <= 2:
        phi_bar = float(2 / np.pi * np.arccos(r / 2))
    phi_tilde = None
    if r > 0:
        f = lambda x: 2 * np.tan(x) * np.sin(x) - r  # noqa: E731
        hi = np.pi / 2 - 1e-15
        x = bisect(f, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        phi_tilde = float(2 * x / np.pi)
    return PhaseBoundaries(r, phi_bar, phi_tilde)


# --- power-law fits ---------------------------------------------------------


@dataclass(frozen=True)
class PowerLawFit:
    slope: float
    intercept: float
    r2: float

    def __iter__(self):
        return iter((self.slope, self.intercept, self.r2))


def fit_power_law(points) -> PowerLawFit:
    """Least squares line through ``(ln L, ln Delta)``."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise ValueError("need at least two (L, Delta) points")
    if np.any(pts <= 0) or not np.all(np.isfinite(pts)):
        raise ValueError("power-law fit needs finite positive values")
    x, y = np.log(pts[:, 0]), np.log(pts[:, 1])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return PowerLawFit(float(slope), float(intercept), float(r2))


# --- spectrum scenario ------------------------------------------------------


@dataclass
class SpectrumResult:
    numeric_gap: float | None
    report: MatchReport | None
    notice: str = ""

    @property
    def passed(self):
        return self.report is None or self.report.passed


def run_spectrum_scenario(params: ChainParams, out_dir=None, tol_match=0.01) -> SpectrumResult:
    """Numeric spectrum of the chain, plus closed-form comparison when solvable.

    Writes ``spectrum_numeric.csv``, and when ``J**2 = gamma_1 gamma_L``
    also ``spectrum_analytic.csv`` and ``match.json``.
    """
    es = eigendecompose_P(drift_matrix(build_chain(params)))
    rap = rapidities(es)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_spectrum_csv(out / "spectrum_numeric.csv", rap)
    try:
        modes = analytic_spectrum(params)
    except RegimeError as exc:
        log.info("analytic branch skipped: %s", exc)
        return SpectrumResult(rap.gap, None, f"numeric spectrum only: {exc}")
    report = compare_with_numeric(params, tol_match, numeric=rap.eigenvalues)
    if out is not None:
        write_analytic_csv(out / "spectrum_analytic.csv", modes)
        write_match_json(out / "match.json", report)
    return SpectrumResult(rap.gap, report)


# --- gap scaling ------------------------------------------------------------


@dataclass
class ScalingSeries:
    family: str
    points: list
    excluded: list = field(default_factory=list)
    fit_slope: float | None = None
    fit_intercept: float | None = None
    fit_r2: float | None = None
    fit_min_L: int = DEFAULT_FIT_MIN_L

    def to_dict(self):
        return {
            "family": self.family,
            "points": [[L, d] for L, d in self.points],
            "excluded": [[L, why] for L, why in self.excluded],
            "fit_min_L": self.fit_min_L,
            "fit_slope": self.fit_slope,
            "fit_intercept": self.fit_intercept,
            "fit_r2": self.fit_r2,
        }


def _with_length(params, L):
    return replace(params, L=int(L))


def _build(params):
    return build_ladder(params) if isinstance(params, LadderParams) else build_chain(params)


def _gap_task(params):
    """``(L, gap, reason)``; ``gap`` is None when the point is unusable."""
    try:
        es = eigendecompose_P(drift_matrix(_build(params)))
        rap = rapidities(es)
    except QuadLindError as exc:
        return params.L, None, f"{type(exc).__name__}: {exc}"
    if rap.has_dark_modes:
        return params.L, None, f"dark modes {list(rap.dark_mode_indices)}"
    return params.L, rap.gap, ""


def _map(fn, items, workers):
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def run_gap_scaling(
    family: str,
    L_list=None,
    params=None,
    out_dir=None,
    *,
    fit_min_L=DEFAULT_FIT_MIN_L,
    fit_max_L=None,
    workers=1,
) -> ScalingSeries:
    """Relaxation gap for each ``L`` and a power-law fit of ``Delta(L)``.

    Points with dark modes or failed diagonalization are excluded and
    listed in ``excluded``.  The fit uses ``fit_min_L <= L <= fit_max_L``
    and needs at least two points.
    """
    if family not in ("chain", "ladder"):
        raise StructuralError(f"unknown family {family!r}")
    if params is None:
        params = ChainParams(2) if family == "chain" else LadderParams(2)
    if L_list is None:
        L_list = DEFAULT_CHAIN_LS if family == "chain" else DEFAULT_LADDER_LS
    Ls = [int(L) for L in L_list]
    if Ls != sorted(set(Ls)):
        raise StructuralError("L_list must be strictly increasing")

    results = _map(_gap_task, [_with_length(params, L) for L in Ls], workers)
    series = ScalingSeries(family, [], fit_min_L=fit_min_L)
    for L, gap, why in results:
        if gap is None or gap <= 0:
            series.excluded.append((L, why or "zero gap"))
        else:
            series.points.append((L, gap))

    window = [
        (L, d) for L, d in series.points
        if L >= fit_min_L and (fit_max_L is None or L <= fit_max_L)
    ]
    if len(window) >= 2:
        fit = fit_power_law(window)
        series.fit_slope, series.fit_intercept, series.fit_r2 = fit

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with (out / f"gap_{family}.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["L", "Delta"])
            for L, d in series.points:
                w.writerow([L, _fmt(d)])
        (out / f"gap_{family}_fit.json").write_text(json.dumps(series.to_dict(), indent=2) + "\n")
    return series


# --- phase diagram ----------------------------------------------------------


@dataclass
class PhaseDiagramGrid:
    j_perp: np.ndarray
    phi: np.ndarray
    J_c: np.ndarray  # shape (len(j_perp), len(phi)), nan for failed points
    phi_bar: np.ndarray
    phi_tilde: np.ndarray
    failures: list = field(default_factory=list)


def _chiral_task(params):
    try:
        _, ss = steady_state(build_ladder(params))
        return leg_currents(ss, params).chiral, ""
    except (QuadLindError, NumericalError) as exc:
        return float("nan"), f"{type(exc).__name__}: {exc}"


def run_phase_diagram(
    j_perp_values,
    phi_values,
    L=100,
    params: LadderParams | None = None,
    out_dir=None,
    *,
    workers=1,
    svg=False,
) -> PhaseDiagramGrid:
    """Chiral current on a ``(J_perp / J_par, phi)`` grid.

    ``params`` supplies the remaining ladder parameters; ``J_perp`` is
    given in units of ``params.J_par``.  Failed points become NaN and
    are listed in ``failures``.
    """
    base = params or LadderParams(L)
    base = replace(base, L=int(L))
    jp = np.asarray(j_perp_values, dtype=float).ravel()
    ph = np.asarray(phi_values, dtype=float).ravel()
    tasks = [replace(base, J_perp=r * base.J_par, phi=p) for r in jp for p in ph]
    results = _map(_chiral_task, tasks, workers)

    Jc = np.array([v for v, _ in results], dtype=float).reshape(len(jp), len(ph))
    failures = [
        (float(t.J_perp / base.J_par), float(t.phi), why)
        for t, (_, why) in zip(tasks, results) if why
    ]
    bounds = [phase_boundaries(r) for r in jp]
    nan = float("nan")
    phi_bar = np.array([b.phi_bar if b.phi_bar is not None else nan for b in bounds])
    phi_tilde = np.array([b.phi_tilde if b.phi_tilde is not None else nan for b in bounds])
    grid = PhaseDiagramGrid(jp, ph, Jc, phi_bar, phi_tilde, failures)

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with (out / "phase_diagram.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["J_perp", "phi", "J_c"])
            for i, r in enumerate(jp):
                for k, p in enumerate(ph):
                    w.writerow([_fmt(r), _fmt(p), _fmt(Jc[i, k])])
        for name, curve in (("phi_bar", phi_bar), ("phi_tilde", phi_tilde)):
            with (out / f"{name}.csv").open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["J_perp", name])
                for r, v in zip(jp, curve):
                    w.writerow([_fmt(r), _fmt(v)])
        if svg:
            write_phase_diagram_svg(out / "phase_diagram.svg", grid)
    return grid


def write_phase_diagram_svg(path, grid: PhaseDiagramGrid) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 4))
    if grid.J_c.size > 1 and min(grid.J_c.shape) > 1:
        mesh = ax.pcolormesh(grid.j_perp, grid.phi, grid.J_c.T, shading="nearest")
        fig.colorbar(mesh, ax=ax, label="J_c")
    else:
        ax.scatter(np.repeat(grid.j_perp, len(grid.phi)), np.tile(grid.phi, len(grid.j_perp)),
                   c=grid.J_c.ravel())
    ax.plot(grid.j_perp, grid.phi_bar, "k--", label="phi_bar")
    ax.plot(grid.j_perp, grid.phi_tilde, "k-.", label="phi_tilde")
    ax.set_xlabel("J_perp / J_par")
    ax.set_ylabel("phi / pi")
    ax.legend(loc="upper right")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def write_gap_svg(path, series: ScalingSeries) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    pts = np.asarray(series.points, dtype=float)
    fig, ax = plt.subplots(figsize=(5, 4))
    if len(pts):
        ax.loglog(pts[:, 0], pts[:, 1], "o")
        if series.fit_slope is not None:
            ax.loglog(pts[:, 0], np.exp(series.fit_intercept) * pts[:, 0] ** series.fit_slope, "-",
                      label=f"slope {series.fit_slope:.3f}")
            ax.legend()
    ax.set_xlabel("L")
    ax.set_ylabel("Delta")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)

"""Command-line entry point.

Exit codes: 0 all checks passed, 2 a tolerance or numerical check
failed, 1 bad input or any other structural problem.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .errors import NumericalError, QuadLindError
from .lyapunov import (
    bath_injection,
    chain_bond_currents,
    densities,
    kronecker_oracle,
    leg_currents,
    steady_state,
    write_currents_csv,
    write_densities_csv,
    write_observables_csv,
)
from .model import (
    ChainParams,
    LadderParams,
    bath_superoperator_matrix,
    build_chain,
    build_ladder,
    load_model,
)
from .spectral import assemble_W1, verify_pairing
from .transform import generator_matrix, verify_transform_action, write_generator_json

EXIT_OK, EXIT_STRUCTURAL, EXIT_TOLERANCE = 0, 1, 2

log = logging.getLogger("quadlind")


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _add_model_flags(p, *, chain=True, ladder=True, model_file=True):
    if model_file:
        p.add_argument("--model", type=Path, help="JSON model file")
    if chain:
        g = p.add_argument_group("chain builder")
        g.add_argument("--chain-L", type=int)
        g.add_argument("--J", type=float, default=1.0)
        g.add_argument("--gamma1", type=float, default=1.0)
        g.add_argument("--gammaL", type=float, default=1.0)
        g.add_argument("--nbar1", type=float, default=0.0)
        g.add_argument("--nbarL", type=float, default=0.0)
    if ladder:
        g = p.add_argument_group("ladder builder")
        g.add_argument("--ladder-L", type=int)
        g.add_argument("--Jpar", type=float, default=1.0)
        g.add_argument("--Jperp", type=float, default=1.7)
        g.add_argument("--phi", type=float, default=0.0, help="flux in units of pi")
        g.add_argument("--gamma", type=float, default=1.0)
        g.add_argument("--nbar-first", type=float, default=1.0)
        g.add_argument("--nbar-last", type=float, default=0.0)


def _chain_params(a, L=None):
    return ChainParams(L if L is not None else a.chain_L, a.J, a.gamma1, a.gammaL, a.nbar1, a.nbarL)


def _ladder_params(a, L=None):
    return LadderParams(
        L if L is not None else a.ladder_L, a.Jpar, a.Jperp, a.phi, a.gamma, a.nbar_first, a.nbar_last
    )


def _resolve_model(a):
    """``(model, params)`` from ``--model`` or exactly one builder."""
    chosen = [x for x in (a.model, getattr(a, "chain_L", None), getattr(a, "ladder_L", None)) if x is not None]
    if len(chosen) != 1:
        raise SystemExit("give exactly one of --model, --chain-L, --ladder-L")
    if a.model is not None:
        return load_model(a.model), None
    if getattr(a, "chain_L", None) is not None:
        p = _chain_params(a)
        return build_chain(p), p
    p = _ladder_params(a)
    return build_ladder(p), p


def _out(a):
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _report(payload):
    print(json.dumps(payload, indent=2, default=float))


# --- subcommands ------------------------------------------------------------


def cmd_spectrum(a):
    params = ChainParams(a.chain_L or 100, a.J, a.gamma1, a.gammaL, a.nbar1, a.nbarL)
    res = ex.run_spectrum_scenario(params, _out(a), tol_match=a.tol_match)
    payload = {"L": params.L, "gap": res.numeric_gap}
    if res.report is None:
        payload["notice"] = res.notice
    else:
        payload.update(res.report.to_dict())
        payload["unmatched"] = len(res.report.unmatched)
    _report(payload)
    return EXIT_OK if res.passed else EXIT_TOLERANCE


def cmd_gap_scaling(a):
    if a.family == "chain":
        params = _chain_params(a, L=2)
    else:
        params = _ladder_params(a, L=2)
    series = ex.run_gap_scaling(
        a.family,
        a.L_list,
        params,
        _out(a),
        fit_min_L=a.fit_min_L,
        fit_max_L=a.fit_max_L,
        workers=a.workers,
    )
    if a.svg:
        ex.write_gap_svg(Path(a.out) / f"gap_{a.family}.svg", series)
    _report(series.to_dict())
    if series.fit_slope is None:
        log.error("fewer than two usable points in the fit window")
        return EXIT_TOLERANCE
    if a.expect_slope is not None and abs(series.fit_slope - a.expect_slope) > a.slope_tol:
        log.error("slope %.4f outside %.3f +- %.3f", series.fit_slope, a.expect_slope, a.slope_tol)
        return EXIT_TOLERANCE
    return EXIT_OK


def cmd_phase_diagram(a):
    jp = a.jperp_values if a.jperp_values else np.linspace(a.jperp_min, a.jperp_max, a.jperp_n)
    ph = a.phi_values if a.phi_values else np.linspace(a.phi_min, a.phi_max, a.phi_n)
    base = _ladder_params(a, L=a.ladder_L or 100)
    grid = ex.run_phase_diagram(jp, ph, base.L, base, _out(a), workers=a.workers, svg=a.svg)
    _report({
        "shape": list(grid.J_c.shape),
        "failures": [list(f) for f in grid.failures],
        "J_c_min": float(np.nanmin(grid.J_c)) if np.isfinite(grid.J_c).any() else None,
        "J_c_max": float(np.nanmax(grid.J_c)) if np.isfinite(grid.J_c).any() else None,
    })
    return EXIT_TOLERANCE if grid.failures else EXIT_OK


def cmd_steady_state(a):
    model, params = _resolve_model(a)
    es, ss = steady_state(model)
    out = _out(a)
    write_observables_csv(out / "observables.csv", ss)
    n = densities(ss)
    write_densities_csv(out / "densities.csv", n)
    payload = {"L": model.L, "lyapunov_residual": ss.residual}
    if isinstance(params, ChainParams) and params.L > 1:
        prof = chain_bond_currents(ss, params)
        write_currents_csv(out / "currents.csv", prof)
        payload["current"] = float(prof.bonds.mean())
    elif isinstance(params, LadderParams):
        prof = leg_currents(ss, params)
        write_currents_csv(out / "currents.csv", prof)
        payload["chiral_current"] = prof.chiral
    payload["bath_injection"] = bath_injection(ss, model).tolist()

    status = EXIT_OK
    if a.oracle == "kronecker":
        Om = kronecker_oracle(es.P, model.lambda_plus)
        err = float(np.linalg.norm(Om - ss.Omega, 2) / max(np.linalg.norm(ss.Omega, 2), 1e-300))
        payload["kronecker_relative_error"] = err
        if err > a.oracle_tol:
            status = EXIT_TOLERANCE
    elif a.oracle == "fock":
        from .fock import truncated_fock_oracle

        O = truncated_fock_oracle(model, a.n_max)
        err = float(np.abs(O - ss.O).max())
        payload["fock_max_error"] = err
        if err > a.oracle_tol:
            status = EXIT_TOLERANCE
    _report(payload)
    return status


def cmd_transform_check(a):
    model, _ = _resolve_model(a)
    es, ss = steady_state(model)
    M = bath_superoperator_matrix(model)
    pairing = verify_pairing(M, es)
    w1 = assemble_W1(es, ss.Q)
    gc = generator_matrix(w1)
    out = _out(a)
    write_generator_json(out / "generator.json", gc)
    payload = {
        "L": model.L,
        "round_trip_error": gc.round_trip_error,
        "branch_cut": gc.branch_cut,
        "block_consistency": gc.block_consistency,
        "pairing_violations": pairing.violations,
    }
    check = verify_transform_action(gc, es, M, tol=a.tol)
    payload["sls_residual"] = check.sls_residual
    payload["eigen_residual"] = check.eigen_residual
    _report(payload)
    return EXIT_OK if pairing.ok else EXIT_TOLERANCE


# --- parser -----------------------------------------------------------------


def build_parser():
    ap = argparse.ArgumentParser(prog="quadlind", description="Quadratic bosonic Lindblad solver")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, svg=False, workers=False):
        p.add_argument("--out", default=".", help="output directory")
        if workers:
            p.add_argument("--workers", type=int, default=1)
        if svg:
            p.add_argument("--svg", action="store_true", help="also write SVG renderings")

    p = sub.add_parser("spectrum", help="chain spectrum vs closed form")
    _add_model_flags(p, ladder=False, model_file=False)
    p.add_argument("--tol-match", type=float, default=0.01)
    common(p)
    p.set_defaults(func=cmd_spectrum, J=1.0, gamma1=5.0, gammaL=0.2)

    p = sub.add_parser("gap-scaling", help="relaxation gap versus length")
    p.add_argument("--family", choices=("chain", "ladder"), default="chain")
    p.add_argument("--L-list", type=_ints, help="comma-separated lengths")
    p.add_argument("--fit-min-L", type=int, default=ex.DEFAULT_FIT_MIN_L)
    p.add_argument("--fit-max-L", type=int)
    p.add_argument("--expect-slope", type=float)
    p.add_argument("--slope-tol", type=float, default=0.15)
    _add_model_flags(p, model_file=False)
    common(p, svg=True, workers=True)
    p.set_defaults(func=cmd_gap_scaling)

    p = sub.add_parser("phase-diagram", help="chiral current on a (J_perp, phi) grid")
    p.add_argument("--jperp-values", type=_floats)
    p.add_argument("--jperp-min", type=float, default=0.2)
    p.add_argument("--jperp-max", type=float, default=3.0)
    p.add_argument("--jperp-n", type=int, default=15)
    p.add_argument("--phi-values", type=_floats)
    p.add_argument("--phi-min", type=float, default=0.0)
    p.add_argument("--phi-max", type=float, default=1.0)
    p.add_argument("--phi-n", type=int, default=21)
    _add_model_flags(p, chain=False, model_file=False)
    common(p, svg=True, workers=True)
    p.set_defaults(func=cmd_phase_diagram)

    p = sub.add_parser("steady-state", help="steady-state correlations and currents")
    _add_model_flags(p)
    p.add_argument("--oracle", choices=("none", "kronecker", "fock"), default="none")
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--oracle-tol", type=float, default=1e-10)
    common(p)
    p.set_defaults(func=cmd_steady_state)

    p = sub.add_parser("transform-check", help="similarity-transform round trip")
    _add_model_flags(p)
    p.add_argument("--tol", type=float, default=1e-8)
    common(p)
    p.set_defaults(func=cmd_transform_check)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_STRUCTURAL if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return a.func(a)
    except NumericalError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_TOLERANCE
    except (QuadLindError, ValueError, OSError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_STRUCTURAL
    except SystemExit as exc:
        if isinstance(exc.code, str):
            log.error("%s", exc.code)
            return EXIT_STRUCTURAL
        return exc.code or EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

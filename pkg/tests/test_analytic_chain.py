import json

import numpy as np
import pytest

from quadlind.analytic_chain import (
    analytic_eigenvector,
    analytic_spectrum,
    closed_form_gap,
    compare_with_numeric,
    secular_residual,
    secular_scale,
    theta_from_eigenvalue,
    write_analytic_csv,
    write_match_json,
)
from quadlind.errors import RegimeError
from quadlind.model import ChainParams, build_chain, drift_matrix
from quadlind.spectral import eigendecompose_P, rapidities

FIG1 = ChainParams(100, J=1.0, gamma_1=5.0, gamma_L=0.2)


def test_L4_kappa1_first_mode():
    modes = analytic_spectrum(ChainParams(4, J=1.0, gamma_1=1.0, gamma_L=1.0))
    m = modes[0]
    assert m.k == 1 and m.alpha == pytest.approx(np.pi / 4)
    assert m.beta == pytest.approx(-0.220343, abs=1e-6)
    assert m.lam == pytest.approx(-0.15707 + 0.72434j, abs=1e-5)
    assert m.theta == complex(m.alpha, m.beta)
    assert m.kappa == 1.0


def test_kappa1_even_L_middle_mode_omitted():
    ks = [m.k for m in analytic_spectrum(ChainParams(4))]
    assert ks == [1, 3]
    assert len(analytic_spectrum(ChainParams(5))) == 4


def test_mode_count_and_alpha():
    modes = analytic_spectrum(FIG1)
    assert [m.k for m in modes] == list(range(1, 100))
    for m in modes:
        assert m.alpha == m.k * np.pi / 100
        assert np.isfinite(m.beta) and m.beta < 0
        assert m.lam.real <= 0


def test_conjugation_symmetry():
    modes = analytic_spectrum(FIG1)
    L = FIG1.L
    by_k = {m.k: m for m in modes}
    for k in range(1, L):
        a, b = by_k[k], by_k[L - k]
        assert a.beta == pytest.approx(b.beta, abs=1e-12)
        assert a.lam.real == pytest.approx(b.lam.real, abs=1e-12)
        assert a.lam.imag == pytest.approx(-b.lam.imag, abs=1e-12)


def test_band_edge_limit():
    p = ChainParams(2000, J=1.0, gamma_1=5.0, gamma_L=0.2)
    m = analytic_spectrum(p)[0]
    assert abs(m.beta) < 1e-4
    assert m.lam == pytest.approx(1j * np.cos(np.pi / 2000), abs=1e-4)


def test_regime_gate():
    with pytest.raises(RegimeError):
        analytic_spectrum(ChainParams(10, J=1.0, gamma_1=2.0, gamma_L=1.0))
    with pytest.raises(RegimeError):
        analytic_spectrum(ChainParams(10, J=0.0, gamma_1=1.0, gamma_L=1.0))
    with pytest.raises(RegimeError):
        compare_with_numeric(ChainParams(10, J=0.0))


@pytest.mark.parametrize(
    "p",
    [FIG1, ChainParams(4), ChainParams(13, 1.0, 2.0, 0.5), ChainParams(7, 1.0, 0.3, 1.7),
     ChainParams(9, 0.6, 0.2, 3.0)],
)
def test_secular_equation_exact_at_numeric_eigenvalues(p):
    es = eigendecompose_P(drift_matrix(build_chain(p)))
    for lam in es.eigenvalues:
        th = theta_from_eigenvalue(lam, p.J)
        assert 0 <= th.real <= np.pi
        assert p.J * 1j * np.cos(th) == pytest.approx(lam, abs=1e-12)
        assert abs(secular_residual(th, p)) <= 1e-8 * secular_scale(th, p)


def test_secular_residual_of_closed_form_fig1():
    # closed forms are asymptotic; observed max relative residual ~1.9e-3 at L=100
    for m in analytic_spectrum(FIG1):
        assert abs(secular_residual(m.theta, FIG1)) <= 1e-2 * secular_scale(m.theta, FIG1)


@pytest.mark.parametrize("p", [ChainParams(4), ChainParams(6, 1.0, 2.0, 0.5), ChainParams(9, 1.0, 0.4, 1.3)])
def test_eigenvector_formula(p):
    es = eigendecompose_P(drift_matrix(build_chain(p)))
    for k, lam in enumerate(es.eigenvalues):
        u = analytic_eigenvector(theta_from_eigenvalue(lam, p.J), p)
        assert np.linalg.norm(u) == pytest.approx(1.0)
        assert abs(np.vdot(u, es.W_P[:, k])) >= 1 - 1e-6


def test_eigenvector_degenerate_theta():
    with pytest.raises(ValueError):
        analytic_eigenvector(0.0, ChainParams(4))


def test_closed_form_gap_fig1():
    g = closed_form_gap(FIG1)
    assert g.asymptote == pytest.approx(2 * np.pi**2 * (0.2 / 1.04) * 1e-6, rel=1e-12)
    assert round(g.asymptote, 8) == 3.80e-6
    numeric = rapidities(eigendecompose_P(drift_matrix(build_chain(FIG1)))).gap
    assert abs(numeric - g.exact) <= 1e-3 * g.exact


def test_closed_form_gap_kappa1():
    g = closed_form_gap(ChainParams(10))
    assert g.exact == pytest.approx(np.pi**2 / 1000, rel=0.02)
    assert g.asymptote == pytest.approx(np.pi**2 / 1000, rel=1e-12)
    big = closed_form_gap(ChainParams(2000))
    assert big.exact == pytest.approx(big.asymptote, rel=1e-5)


def test_compare_fig1(tmp_path):
    rep = compare_with_numeric(FIG1, 0.01)
    assert rep.passed and rep.max_distance <= 0.01
    assert rep.n_analytic == 99 and rep.n_numeric == 100
    assert len(rep.unmatched) == 1
    assert rep.unmatched[0].real < -1.0  # the boundary mode sits far from the arc
    write_match_json(tmp_path / "m.json", rep)
    doc = json.loads((tmp_path / "m.json").read_text())
    assert doc["passed"] and len(doc["unmatched"]) == 1
    write_analytic_csv(tmp_path / "a.csv", analytic_spectrum(FIG1))
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0] == "k,alpha,beta,re_lambda,im_lambda" and len(lines) == 100


def test_compare_small_L():
    rep = compare_with_numeric(ChainParams(4))
    assert rep.n_analytic == 2 and len(rep.unmatched) == 2
    assert rep.max_distance < 0.1

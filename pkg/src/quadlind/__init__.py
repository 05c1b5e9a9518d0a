"""Steady states and relaxation spectra of quadratic bosonic Lindblad models.

A number-conserving quadratic model with ``L`` modes is fixed by the
hopping matrix ``h`` and the bath rate matrices ``lambda_plus`` (gain)
and ``lambda_minus`` (loss).  Everything follows from the ``L x L``
drift matrix ``P``: its eigenvalues are the rapidities, and the
two-point correlations solve a Lyapunov equation in ``P``.
"""

from .analytic_chain import (
    ChainThetaSolution,
    MatchReport,
    analytic_eigenvector,
    analytic_spectrum,
    closed_form_gap,
    compare_with_numeric,
    secular_residual,
    theta_from_eigenvalue,
)
from .errors import *  # noqa: F401,F403
from .experiments import (
    PhaseDiagramGrid,
    ScalingSeries,
    fit_power_law,
    phase_boundaries,
    run_gap_scaling,
    run_phase_diagram,
    run_spectrum_scenario,
)
from .fock import truncated_fock_oracle
from .lyapunov import (
    CurrentProfile,
    SteadyStateCorrelations,
    bath_injection,
    chain_bond_currents,
    correlations,
    densities,
    kronecker_oracle,
    leg_currents,
    solve_Q,
    steady_state,
)
from .model import (
    ChainParams,
    LadderParams,
    QuadraticLindbladModel,
    SiteIndexMap,
    ValidationReport,
    bath_superoperator_matrix,
    build_chain,
    build_ladder,
    drift_matrix,
    load_model,
    random_stable_model,
    save_model,
    validate_model,
)
from .spectral import (
    EigenSystem,
    PairingReport,
    Rapidities,
    StructuredW1,
    assemble_W1,
    check_trace_identity,
    eigendecompose_P,
    rapidities,
    verify_pairing,
)
from .transform import GeneratorCoefficients, generator_matrix, verify_transform_action

__version__ = "0.1.0"

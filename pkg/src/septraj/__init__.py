"""Product-constrained quantum dynamics next to the plain Schroedinger flow.

The library propagates composite systems two ways: the standard linear
evolution of the joint state, and a constrained evolution that keeps the
state an exact tensor product at all times by driving each factor with the
partial reduction of the Hamiltonian against the others.  Built-in
closed-form references for the exchange (swap) model certify both
integrators, and the CLI wraps runs, checks, and parameter sweeps around
declarative scenario files.
"""

__version__ = "0.1.0"

from .analysis import (
    ComparisonReport,
    SchmidtResult,
    SeeSolution,
    action,
    analytic_schmidt_swap,
    bloch_coords,
    compare_trajectories,
    estimate_period,
    lagrangian_values,
    phase_space_coords,
    schmidt_coefficients,
    see_solve,
)
from .cli import RunRecord, main
from .dynamics import (
    IntegratorConfig,
    TimeGrid,
    Trajectory,
    evolve_se,
    evolve_sse_bipartite,
    evolve_sse_multipartite,
    gauge_fix,
    party_labels,
)
from .hamiltonians import (
    PAULI_0,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    BosonicModeSpec,
    HamiltonianDecomposition,
    assemble,
    build_annihilation,
    build_beam_splitter_approx,
    build_spin_spin,
    build_swap,
    coherent_state,
    effective_hamiltonian,
)
from .oracle import SwapScenario, analytic_se_swap, analytic_sse_swap, conserved_C
from .scenario import (
    HamiltonianSpec,
    ScenarioConfig,
    ScenarioError,
    config_from_data,
    parse_scenario,
)
from .statespace import (
    ProductState,
    TensorSpace,
    as_ket,
    as_operator,
    assert_hermitian,
    fidelity_up_to_phase,
    partial_reduce,
    reduced_density,
    tensor_product,
)

__all__ = [
    "__version__",
    "ComparisonReport",
    "SchmidtResult",
    "SeeSolution",
    "action",
    "analytic_schmidt_swap",
    "bloch_coords",
    "compare_trajectories",
    "estimate_period",
    "lagrangian_values",
    "phase_space_coords",
    "schmidt_coefficients",
    "see_solve",
    "RunRecord",
    "main",
    "IntegratorConfig",
    "TimeGrid",
    "Trajectory",
    "evolve_se",
    "evolve_sse_bipartite",
    "evolve_sse_multipartite",
    "gauge_fix",
    "party_labels",
    "PAULI_0",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "BosonicModeSpec",
    "HamiltonianDecomposition",
    "assemble",
    "build_annihilation",
    "build_beam_splitter_approx",
    "build_spin_spin",
    "build_swap",
    "coherent_state",
    "effective_hamiltonian",
    "SwapScenario",
    "analytic_se_swap",
    "analytic_sse_swap",
    "conserved_C",
    "HamiltonianSpec",
    "ScenarioConfig",
    "ScenarioError",
    "config_from_data",
    "parse_scenario",
    "ProductState",
    "TensorSpace",
    "as_ket",
    "as_operator",
    "assert_hermitian",
    "fidelity_up_to_phase",
    "partial_reduce",
    "reduced_density",
    "tensor_product",
]

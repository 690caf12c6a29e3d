"""Density-matrix simulator for circuits with closed-timelike-curve wires.

Two semantics are provided for loop wires: Deutsch's self-consistent fixed
points (:mod:`ctcsim.deutsch`) and post-selected teleportation
(:mod:`ctcsim.pctc`), plus a discrete path-sum check (:mod:`ctcsim.pathint`)
and a scenario suite contrasting them (:mod:`ctcsim.scenarios`).
"""

from .channels import KrausChannel, apply_channel, kraus_from_unitary, superoperator_matrix
from .circuits import CtcCircuit, SystemLayout, compile_circuit, depth_one_compress, gate
from .deutsch import SolverOptions, consistency_residual, deutsch_evolve, solve_fixed_point
from .linalg import (
    DensityMatrix,
    Operator,
    PureState,
    fidelity,
    partial_trace,
    tensor,
    validate_density,
    von_neumann_entropy,
)
from .pathint import LatticeModel, path_sum_amplitude, verify_equivalence
from .pctc import (
    bell_basis,
    ctc_operator,
    pctc_evolve,
    teleport_decompose,
    teleportation_oracle,
)
from .report import EvolutionReport
from .scenarios import (
    ScenarioConfig,
    builtin_scenarios,
    decorrelation_test,
    postselected_sat,
    run_scenario,
)

__version__ = "0.1.0"

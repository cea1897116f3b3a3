"""Discrete nonlinear potential theory on weighted graphs.

p-harmonic Dirichlet solvers, condenser p-capacities, dyadic capacitary
series at infinity, and massiveness/parabolicity testers, with independent
oracles and a FastAPI service plus thin CLI for batch experiments.
"""

from .errors import PharmonicError
from .graph import (
    VertexSet,
    WeightedGraph,
    ball,
    build_graph,
    check_p0,
    closure,
    component_of,
    components,
    edge_boundary,
    graph_distance,
    induced_subgraph,
    vertex_boundary,
)
from .lattice import LatticeFamily, LatticeWindow, axis_set, cylinder_set, lattice_box, thorn_set
from .plaplace import (
    PExponent,
    PotentialSolution,
    greens_identity_check,
    p_energy,
    p_laplacian_at,
    solve_dirichlet,
)
from .capacity import (
    CapacityResult,
    Condenser,
    ball_capacity_bounds_check,
    capacity,
    capacity_exhaustion,
    capacity_exhaustion_on,
    condenser_potential,
    level_set_flux,
    level_set_sandwich_check,
    sigma_measure,
)
from .wiener import WienerReport, dyadic_scales, wiener_report, wiener_term
from .massiveness import (
    MassivenessEvidence,
    VerdictThresholds,
    dp_massiveness_probe,
    liouville_construct,
    massiveness_sequence,
    parabolicity_sequence,
    uniqueness_gap_probe,
)
from .oracles import (
    bruteforce_condenser,
    linear_dirichlet_p2,
    mc_escape_probability,
    random_connected_graph,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

"""Momentum-space free-particle representations on a desk-scale lattice.

Builds the unitary representations of the covering of the proper
orthochronous Poincare group for spin zero, together with their space
inversion and time reversal companions, as concrete operators on a finite
momentum lattice.  Submodules:

    grid       lattice, states, inner product, finite-difference stencils
    operators  matrix-free operator calculus and the deterministic catalog
    triplets   the representation classes (generators plus S and T)
    position   Newton-Wigner position operator and localizability probes
    verify     named verification suites with convergence-order estimates
    kgmap      unitary map to the position-space square-root Klein-Gordon form
    cli        command-line runner emitting JSON reports and CSV trajectories
"""

from .grid import (
    MomentumGrid,
    State,
    build_grid,
    derivative,
    gaussian_packet,
    inner_product,
    parity,
)
from .operators import (
    Linearity,
    PacketSpec,
    ParticleOperator,
    ResidualStats,
    adjoint_residual,
    catalog_specs,
    commutator_residual,
    identity_residual,
    realize_packet,
    sample_states,
)
from .triplets import TransformerTriplet, TripletClass, make_triplet
from .position import PositionOperator, localizability_experiment, newton_wigner
from .verify import VerificationReport, run_suites
from .kgmap import KGState, kg_backward, kg_density, kg_forward

__version__ = "0.1.0"

__all__ = [
    "MomentumGrid",
    "State",
    "build_grid",
    "derivative",
    "gaussian_packet",
    "inner_product",
    "parity",
    "Linearity",
    "PacketSpec",
    "ParticleOperator",
    "ResidualStats",
    "adjoint_residual",
    "catalog_specs",
    "commutator_residual",
    "identity_residual",
    "realize_packet",
    "sample_states",
    "TransformerTriplet",
    "TripletClass",
    "make_triplet",
    "PositionOperator",
    "localizability_experiment",
    "newton_wigner",
    "VerificationReport",
    "run_suites",
    "KGState",
    "kg_backward",
    "kg_density",
    "kg_forward",
    "__version__",
]

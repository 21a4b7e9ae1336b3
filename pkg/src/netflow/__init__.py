"""Motion by curvature of planar networks with triple junctions.

The package covers minimal (Steiner) networks of fixed topology, a
parametric solver for the length gradient flow, the normal-graph
description of networks near a minimal one, the second variation of length
and the Łojasiewicz–Simon diagnostics, and a worked example with barrier
and monotonicity checks.
"""

from .errors import (
    ConstraintViolation,
    EdgeCollapse,
    FormatError,
    GapNonPositive,
    GeometryInfeasible,
    NetflowError,
    NewtonFailure,
    NoConvergence,
    NotAGraph,
    OutOfTrustRegion,
    PreconditionViolation,
    TimeOrder,
    TopologyError,
    TopologyMismatch,
)
from .flow import SolverConfig, StopReason, advance, run, step
from .graphparam import Cutoff, NormalGraphRep, adapted_tangents, ift_radius, junction_maps, solve_graph_rep
from .io import read_network, write_network
from .minimal import (
    HEXAGON_LOOP,
    StraightNetwork,
    descend_length,
    fermat_length,
    fermat_point,
    hexagon_web,
    standard_triod,
    to_network,
)
from .network import Network, NetworkTopology, build_network, geometry, length, loop_area
from .svg import emit_svg, render_svg
from .trajectory import TrajectoryLog
from .variations import GraphEnergy, assemble_Q, ls_check, spectrum

__version__ = "0.1.0"

__all__ = [
    "ConstraintViolation",
    "Cutoff",
    "EdgeCollapse",
    "FormatError",
    "GapNonPositive",
    "GeometryInfeasible",
    "GraphEnergy",
    "HEXAGON_LOOP",
    "NetflowError",
    "Network",
    "NetworkTopology",
    "NewtonFailure",
    "NoConvergence",
    "NormalGraphRep",
    "NotAGraph",
    "OutOfTrustRegion",
    "PreconditionViolation",
    "SolverConfig",
    "StopReason",
    "StraightNetwork",
    "TimeOrder",
    "TopologyError",
    "TopologyMismatch",
    "TrajectoryLog",
    "adapted_tangents",
    "advance",
    "assemble_Q",
    "build_network",
    "descend_length",
    "emit_svg",
    "fermat_length",
    "fermat_point",
    "geometry",
    "hexagon_web",
    "ift_radius",
    "junction_maps",
    "length",
    "loop_area",
    "ls_check",
    "read_network",
    "render_svg",
    "run",
    "solve_graph_rep",
    "spectrum",
    "standard_triod",
    "step",
    "to_network",
    "write_network",
    "__version__",
]

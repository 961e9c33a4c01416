"""chanlin: consistency checking of message-passing executions over FIFO channels."""

from .core import (
    CONSISTENT,
    INCONSISTENT,
    INF,
    OK,
    RCV,
    SND,
    AbstractExecution,
    AlgorithmRefused,
    ChannelClass,
    Event,
    Instance,
    Ok,
    ParseError,
    Topology,
    ValidationError,
    Verdict,
    Violation,
    check_well_formed,
    classify_channels,
    communication_topology,
    derive_abstract,
    make_instance,
    parse_instance,
    serialize_instance,
)
from .fastpath import (
    SendReceiveGraph,
    TwoSatFormula,
    build_send_receive_graph,
    encode_2sat,
    solve_2sat,
    solve_acyclic,
    solve_sync,
)
from .frontier import (
    FrontierNode,
    node_key,
    solve_vch,
    solve_vch_saturated,
    solve_vchrf,
    solve_vchrf_saturated,
)
from .oracle import BoundExceeded, brute_force
from .saturation import SaturatedOrder, ready, saturate
from .smt import SolverError, emit_smtlib, run_external_solver

__all__ = [
    "AbstractExecution",
    "AlgorithmRefused",
    "BoundExceeded",
    "CONSISTENT",
    "ChannelClass",
    "Event",
    "FrontierNode",
    "INCONSISTENT",
    "INF",
    "Instance",
    "OK",
    "Ok",
    "ParseError",
    "RCV",
    "SND",
    "SaturatedOrder",
    "SendReceiveGraph",
    "SolverError",
    "Topology",
    "TwoSatFormula",
    "ValidationError",
    "Verdict",
    "Violation",
    "brute_force",
    "build_send_receive_graph",
    "check_well_formed",
    "classify_channels",
    "communication_topology",
    "derive_abstract",
    "emit_smtlib",
    "encode_2sat",
    "make_instance",
    "node_key",
    "parse_instance",
    "ready",
    "run_external_solver",
    "saturate",
    "serialize_instance",
    "solve_2sat",
    "solve_acyclic",
    "solve_sync",
    "solve_vch",
    "solve_vch_saturated",
    "solve_vchrf",
    "solve_vchrf_saturated",
]

__version__ = "0.1.0"

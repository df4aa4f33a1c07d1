"""Bilevel truss topology and discrete sizing optimisation."""

from .analysis import (
    AnalysisResult,
    ConstraintReport,
    TrussModel,
    analyze,
    check_internal_stability,
    evaluate_constraints,
    weight,
)
from .feasibility import (
    RepairFailure,
    ViolationVector,
    check_G1,
    check_G2,
    dominates,
    feasible_census,
    is_feasible,
    repair,
    violations,
)
from .instance import (
    BENCHMARKS,
    Instance,
    InstanceError,
    InstanceParseError,
    LoadCase,
    Member,
    Node,
    StressLimit,
    Topology,
    expand_topology,
    load_benchmark,
    load_instance,
    make_instance,
    member_length,
)
from .search import (
    EvaluatedDesign,
    LowerMemo,
    NoveltyArchive,
    Particle,
    SearchParams,
    SwarmResult,
    enumerate_topologies,
    flip_positions,
    novelty,
    run_nbpso,
    top_k_distinct,
    transfer,
    update_velocity,
)
from .sizing import LowerConfig, SizingSolution, optimize_sizing

__version__ = "0.1.0"

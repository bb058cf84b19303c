from .base import (
    PlannerConfig,
    PlannerReport,
    Tree,
    final_check,
    nearest_parent,
    nearest_parents,
    verify_tree,
)
from .qfps import PathDatabase, QFPSPlanner, build_path_database, qfps, random_path, random_paths
from .qrrt import (
    L1Sampler,
    PairDatabase,
    QRRTPlanner,
    UniformSampler,
    build_pair_database,
    iterations_for,
    qrrt,
)
from .rrt import RRTPlanner, classical_rrt

__all__ = [
    "L1Sampler",
    "PairDatabase",
    "PathDatabase",
    "PlannerConfig",
    "PlannerReport",
    "QFPSPlanner",
    "QRRTPlanner",
    "RRTPlanner",
    "Tree",
    "UniformSampler",
    "build_pair_database",
    "build_path_database",
    "classical_rrt",
    "final_check",
    "iterations_for",
    "nearest_parent",
    "nearest_parents",
    "qfps",
    "qrrt",
    "random_path",
    "random_paths",
    "verify_tree",
]

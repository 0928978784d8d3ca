"""Probe-model simulator and benchmark harness for locally checkable labelings."""

__version__ = "0.1.0"

from .graph import (Instance, NodeClass, NodeLabel, PortedGraph, build_graph,
                    classify_node, derive_hier_forest, derive_tree_forest,
                    node_level, normalize_labeling, parse_instance,
                    serialize_instance)
from .probe import (CostRecord, Execution, Halt, Query, Solver, run_all,
                    run_execution, simulate_distance_algorithm)
from .problems import PROBLEMS, Verdict, local_check
from .solvers import SolverConfig, make_solver

__all__ = [
    "Instance", "NodeClass", "NodeLabel", "PortedGraph", "build_graph",
    "classify_node", "derive_hier_forest", "derive_tree_forest", "node_level",
    "normalize_labeling", "parse_instance", "serialize_instance",
    "CostRecord", "Execution", "Halt", "Query", "Solver", "run_all",
    "run_execution", "simulate_distance_algorithm",
    "PROBLEMS", "Verdict", "local_check",
    "SolverConfig", "make_solver",
]

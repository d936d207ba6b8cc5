"""Stochastic contextual bandits whose contexts are vertices of a labeled graph."""
from .graphs import LabeledGraph, PathInstance, cutsize, euler_spine, observable_cutsize, wilson_ust
from .environment import GroupedEnvironment, parse_generator
from .harness import ExperimentConfig, RegretTrace, run, run_baseline_global, run_baseline_per_vertex
from .hierarchy import HierarchyScheduler, build, choose_D, count_bad
from .tsallis import TsallisInfState, arm_distribution, new_state, sample_arm, update

__all__ = [
    "LabeledGraph", "PathInstance", "cutsize", "observable_cutsize", "euler_spine", "wilson_ust",
    "HierarchyScheduler", "build", "choose_D", "count_bad",
    "GroupedEnvironment", "parse_generator",
    "ExperimentConfig", "RegretTrace", "run", "run_baseline_global", "run_baseline_per_vertex",
    "TsallisInfState", "new_state", "arm_distribution", "sample_arm", "update",
]
__version__ = "0.1.0"

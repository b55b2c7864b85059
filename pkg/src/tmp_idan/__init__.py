"""Target retrieval from 2D table-top clutter with iteratively deepened AND/OR graph networks."""

from .andor import AndOrGraph, AugmentedGraph, build_clutter_graph
from .baseline import enumerate_state_space, removal_oracle, shortest_task_plan
from .geometry import WorkspaceConfig, generate_scene, load_scene, save_scene
from .motion import MotionPlannerHandle, path_validate, plan
from .network import ObjectCostWeights, select_optimal_state, solve
from .trace import replay

__all__ = [
    "AndOrGraph",
    "AugmentedGraph",
    "MotionPlannerHandle",
    "ObjectCostWeights",
    "WorkspaceConfig",
    "build_clutter_graph",
    "enumerate_state_space",
    "generate_scene",
    "load_scene",
    "path_validate",
    "plan",
    "removal_oracle",
    "replay",
    "save_scene",
    "select_optimal_state",
    "shortest_task_plan",
    "solve",
]

"""Gap-based safe-heading exploration in a simulated occupancy grid."""

from .geometry import Pose
from .grid_world import CellState, OccupancyGrid, load_map, load_map_file, save_map
from .lidar import Scan, acquire_scan
from .planner import PlannerConfig
from .runner import EpisodeConfig, EpisodeReport, HaltReason, run_episode, run_frontier_baseline
from .safe_heading import extract_gaps, select_heading

__all__ = [
    "CellState",
    "EpisodeConfig",
    "EpisodeReport",
    "HaltReason",
    "OccupancyGrid",
    "PlannerConfig",
    "Pose",
    "Scan",
    "acquire_scan",
    "extract_gaps",
    "load_map",
    "load_map_file",
    "run_episode",
    "run_frontier_baseline",
    "save_map",
    "select_heading",
]

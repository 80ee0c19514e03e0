"""Grasp planning pipeline: cloud I/O, tabletop segmentation, candidate
scoring, CEM refinement and diverse-set selection."""

from .cem import CemResult, CEMParams, cem_optimize, cem_refine, fit_gmm
from .cloud import CloudError, PointCloud, load_csv, load_ply, save_csv, save_ply
from .planner import (
    GraspCandidate,
    MAX_GRIPPER_WIDTH,
    grasp_distance,
    sample_candidates,
    score,
    select_diverse,
)
from .segmentation import (
    Cluster,
    DegenerateCloud,
    DegenerateCluster,
    NoPlaneFound,
    SegmentationError,
    euclidean_cluster,
    pca,
    remove_plane,
)

__all__ = [
    "CEMParams", "CemResult", "CloudError", "Cluster", "DegenerateCloud",
    "DegenerateCluster", "GraspCandidate", "MAX_GRIPPER_WIDTH", "NoPlaneFound",
    "PointCloud", "SegmentationError", "cem_optimize", "cem_refine",
    "euclidean_cluster", "fit_gmm", "grasp_distance", "load_csv", "load_ply",
    "pca", "remove_plane", "sample_candidates", "save_csv", "save_ply",
    "score", "select_diverse",
]

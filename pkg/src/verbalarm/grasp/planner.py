"""Planar parallel-jaw grasp candidates on segmented clusters.

Scoring is a geometric surrogate: robustness q combines how antipodal the
estimated boundary normals are inside the jaw contact bands (against a
friction-cone half-angle) with the jaw closure margin. It is deterministic
and monotone decreasing in normal misalignment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree

from .segmentation import Cluster

MAX_GRIPPER_WIDTH = 0.10     # m
FINGER_EXTENT = 0.03         # m, jaw plate length transverse to closing axis
CONTACT_BAND = 0.01          # m, depth of the contact region at each jaw
FRICTION_CONE_DEG = 20.0
WIDTH_MARGIN = 0.015         # m added around the object extent
CLEARANCE_REF = 0.01         # m of clearance for full closure score
MIN_CONTACTS = 3


@dataclass(frozen=True)
class GraspCandidate:
    center: tuple[float, float]   # table-plane position (m)
    depth: float                  # grasp height z (m)
    angle: float                  # jaw closing axis angle, [0, pi)
    width: float                  # jaw opening (m)
    q: float = 0.0                # robustness in [0, 1]

    def __post_init__(self):
        object.__setattr__(self, "angle", float(self.angle) % math.pi)

    def to_wire(self, index: int | None = None) -> dict:
        wire = {
            "center": [round(self.center[0], 6), round(self.center[1], 6)],
            "depth": round(self.depth, 6),
            "angle": round(self.angle, 6),
            "width": round(self.width, 6),
            "q": round(self.q, 6),
        }
        if index is not None:
            wire = {"index": index, **wire}
        return wire

    @staticmethod
    def from_wire(data: dict) -> "GraspCandidate":
        return GraspCandidate(
            (data["center"][0], data["center"][1]),
            data["depth"], data["angle"], data["width"], data.get("q", 0.0))


class _ScoreContext:
    """Per-cluster 2D projection with boundary-normal estimates, cached."""

    def __init__(self, cluster: Cluster, k: int = 12):
        self.pts2d = cluster.points[:, :2]
        self.z_top = float(cluster.points[:, 2].max())
        self.z_bottom = float(cluster.points[:, 2].min())
        self.centroid2d = self.pts2d.mean(axis=0)
        self.tree = cKDTree(self.pts2d)
        n = len(self.pts2d)
        kk = min(k + 1, n)
        _, neighbors = self.tree.query(self.pts2d, k=kk)
        normals = np.zeros((n, 2))
        for i in range(n):
            local = self.pts2d[neighbors[i]] - self.pts2d[i]
            cov = local.T @ local / len(local)
            evals, evecs = np.linalg.eigh(cov)
            normal = evecs[:, 0]  # minor axis of the neighborhood
            outward = self.pts2d[i] - self.centroid2d
            if np.dot(normal, outward) < 0:
                normal = -normal
            normals[i] = normal
        self.normals = normals


def _context(cluster: Cluster) -> _ScoreContext:
    ctx = getattr(cluster, "_score_ctx", None)
    if ctx is None:
        ctx = _ScoreContext(cluster)
        cluster._score_ctx = ctx
    return ctx


def score(candidate: GraspCandidate, cluster: Cluster,
          friction_cone_deg: float = FRICTION_CONE_DEG,
          max_width: float = MAX_GRIPPER_WIDTH) -> float:
    """Robustness of one candidate against one cluster, in [0, 1]."""
    if candidate.width <= 0 or candidate.width > max_width:
        return 0.0
    ctx = _context(cluster)
    u = np.array([math.cos(candidate.angle), math.sin(candidate.angle)])
    v = np.array([-u[1], u[0]])
    rel = ctx.pts2d - np.asarray(candidate.center)
    proj_u = rel @ u
    proj_v = rel @ v
    band = np.abs(proj_v) <= FINGER_EXTENT / 2
    if np.count_nonzero(band) < 2 * MIN_CONTACTS:
        return 0.0
    band_u = proj_u[band]
    u_min, u_max = float(band_u.min()), float(band_u.max())
    extent = u_max - u_min
    # jaws must straddle the object slice and clear it when open
    if u_min > 0 or u_max < 0:
        return 0.0
    if extent >= candidate.width:
        return 0.0
    # object must not stick out past the jaw plates on either side
    half = candidate.width / 2
    if u_min < -half or u_max > half:
        return 0.0

    left = band & (proj_u <= u_min + CONTACT_BAND)
    right = band & (proj_u >= u_max - CONTACT_BAND)
    if np.count_nonzero(left) < MIN_CONTACTS or np.count_nonzero(right) < MIN_CONTACTS:
        return 0.0
    cone = math.radians(friction_cone_deg)

    def side_alignment(mask: np.ndarray, direction: np.ndarray) -> float:
        # the jaw meets the outermost points first: judge the best contacts
        cosines = np.clip(ctx.normals[mask] @ direction, -1.0, 1.0)
        angles = np.arccos(cosines)
        per_point = np.exp(-((angles / cone) ** 2))
        top = np.sort(per_point)[-min(5, len(per_point)):]
        return float(np.mean(top))

    alignment = side_alignment(left, -u) * side_alignment(right, u)
    closure = min(1.0, (candidate.width - extent) / CLEARANCE_REF)
    return float(np.clip(alignment * closure, 0.0, 1.0))


def _grasp_depth(ctx: _ScoreContext) -> float:
    return max(ctx.z_top - 0.02, ctx.z_bottom + 0.005)


def sample_candidates(cluster: Cluster, n: int, seed: int | None = 0,
                      max_width: float = MAX_GRIPPER_WIDTH,
                      friction_cone_deg: float = FRICTION_CONE_DEG) -> list[GraspCandidate]:
    """n scored candidates: centers drawn from the cluster footprint, angles
    stratified over [0, pi), width from the footprint extent plus a margin."""
    if n <= 0:
        return []
    ctx = _context(cluster)
    rng = np.random.default_rng(seed)
    n_angles = min(n, 18)
    depth = _grasp_depth(ctx)
    out = []
    for i in range(n):
        angle = (i % n_angles + rng.uniform(0.0, 1.0)) * math.pi / n_angles
        pick = rng.integers(0, len(ctx.pts2d))
        center = 0.5 * (ctx.pts2d[pick] + ctx.centroid2d)
        u = np.array([math.cos(angle), math.sin(angle)])
        v = np.array([-u[1], u[0]])
        rel = ctx.pts2d - center
        band = np.abs(rel @ v) <= FINGER_EXTENT / 2
        if np.any(band):
            pu = rel[band] @ u
            extent = float(pu.max() - pu.min())
        else:
            extent = 0.02
        width = float(min(extent + 2 * WIDTH_MARGIN, max_width))
        cand = GraspCandidate((float(center[0]), float(center[1])),
                              depth, angle % math.pi, width)
        out.append(replace(cand, q=score(cand, cluster, friction_cone_deg, max_width)))
    return out


def grasp_distance(a: GraspCandidate, b: GraspCandidate,
                   angle_weight: float = 0.05) -> float:
    """Mixed metric: Euclidean center distance plus weighted wrapped angle."""
    dc = math.hypot(a.center[0] - b.center[0], a.center[1] - b.center[1])
    da = abs(a.angle - b.angle)
    da = min(da, math.pi - da)
    return math.sqrt(dc * dc + (angle_weight * da) ** 2)


def select_diverse(candidates: list[GraspCandidate], eps: float, k: int,
                   angle_weight: float = 0.05) -> list[GraspCandidate]:
    """Greedy by descending q: accept a candidate only if it is at least eps
    away from every accepted one; stop at k. Result is q-sorted."""
    ranked = sorted(enumerate(candidates), key=lambda t: (-t[1].q, t[0]))
    chosen: list[GraspCandidate] = []
    for _, cand in ranked:
        if len(chosen) >= k:
            break
        if all(grasp_distance(cand, c, angle_weight) >= eps for c in chosen):
            chosen.append(cand)
    return chosen

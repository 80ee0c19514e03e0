"""Tabletop segmentation: RANSAC plane removal, kd-tree Euclidean
clustering, and per-cluster PCA."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .cloud import PointCloud


class SegmentationError(Exception):
    pass


class DegenerateCloud(SegmentationError):
    pass


class NoPlaneFound(SegmentationError):
    pass


class DegenerateCluster(SegmentationError):
    pass


def _plane_from_points(p0, p1, p2):
    normal = np.cross(p1 - p0, p2 - p0)
    norm = np.linalg.norm(normal)
    if norm < 1e-12:
        return None
    normal = normal / norm
    return np.array([*normal, -np.dot(normal, p0)])


def _orient(coeffs: np.ndarray) -> np.ndarray:
    normal = coeffs[:3]
    for c in (normal[2], normal[1], normal[0]):
        if abs(c) > 1e-12:
            return coeffs if c > 0 else -coeffs
    return coeffs


def _refit(points: np.ndarray) -> np.ndarray:
    centroid = points.mean(axis=0)
    _, _, vt = np.linalg.svd(points - centroid, full_matrices=False)
    normal = vt[-1]
    normal = normal / np.linalg.norm(normal)
    return _orient(np.array([*normal, -np.dot(normal, centroid)]))


def remove_plane(cloud: PointCloud, dist_threshold: float = 0.005,
                 iterations: int = 500, seed: int | None = 0,
                 min_inlier_ratio: float = 0.30) -> tuple[np.ndarray, PointCloud]:
    """RANSAC-fit the dominant plane; return (a,b,c,d) with unit normal and
    the cloud with plane inliers and everything below the plane removed."""
    pts = cloud.points
    if len(pts) < 3:
        raise DegenerateCloud(f"need >= 3 points, got {len(pts)}")
    rng = np.random.default_rng(seed)
    best_count = -1
    best = None
    for _ in range(iterations):
        i, j, k = rng.choice(len(pts), size=3, replace=False)
        coeffs = _plane_from_points(pts[i], pts[j], pts[k])
        if coeffs is None:
            continue
        dist = np.abs(pts @ coeffs[:3] + coeffs[3])
        count = int(np.count_nonzero(dist <= dist_threshold))
        if count > best_count:
            best_count, best = count, coeffs
    if best is None:
        raise DegenerateCloud("all sampled triples collinear")
    if best_count < min_inlier_ratio * len(pts):
        raise NoPlaneFound(
            f"best plane explains {best_count}/{len(pts)} points "
            f"(< {min_inlier_ratio:.0%})")
    inliers = np.abs(pts @ best[:3] + best[3]) <= dist_threshold
    coeffs = _refit(pts[inliers])
    signed = pts @ coeffs[:3] + coeffs[3]
    return coeffs, cloud.select(signed > dist_threshold)


@dataclass
class Cluster:
    indices: np.ndarray              # into the source cloud
    points: np.ndarray               # (k, 3)
    centroid: np.ndarray = field(init=False)
    axes: np.ndarray = field(init=False)        # rows, orthonormal
    variances: np.ndarray = field(init=False)   # descending

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=int)
        self.points = np.asarray(self.points, dtype=float)
        self.centroid, self.axes, self.variances = pca(self.points)

    @property
    def size(self) -> int:
        return len(self.indices)


def pca(points: np.ndarray):
    """Centroid, orthonormal principal axes (rows) and descending variances.

    The sign of the first two axes is fixed (x-component >= 0, tie on y)
    and the third completes a right-handed frame, so the output is a
    deterministic function of the input points.
    """
    points = np.asarray(points, dtype=float)
    if len(points) < 3:
        raise DegenerateCluster(f"need >= 3 points, got {len(points)}")
    centroid = points.mean(axis=0)
    centered = points - centroid
    cov = centered.T @ centered / len(points)
    if not np.all(np.isfinite(cov)) or np.trace(cov) < 1e-18:
        raise DegenerateCluster("covariance is degenerate")
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    variances = np.clip(evals[order], 0.0, None)
    axes = evecs[:, order].T
    for i in (0, 1):
        v = axes[i]
        if v[0] < 0 or (v[0] == 0 and v[1] < 0) or (v[0] == 0 and v[1] == 0 and v[2] < 0):
            axes[i] = -v
    axes[2] = np.cross(axes[0], axes[1])
    return centroid, axes, variances


def euclidean_cluster(cloud: PointCloud, tolerance: float = 0.02,
                      min_size: int = 20, max_size: int = 100000) -> list[Cluster]:
    """Single-linkage connected components at the given radius, found with a
    kd-tree index. Clusters outside [min_size, max_size] are discarded;
    result ordered by size descending."""
    pts = cloud.points
    n = len(pts)
    if n == 0:
        return []
    tree = cKDTree(pts)
    pairs = tree.query_pairs(r=tolerance, output_type="ndarray")
    parent = np.arange(n)

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for a, b in pairs:
        ra, rb = find(int(a)), find(int(b))
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    lo = max(min_size, 3)  # PCA needs 3 points
    clusters = [
        Cluster(np.array(idx), pts[idx])
        for idx in groups.values()
        if lo <= len(idx) <= max_size
    ]
    clusters.sort(key=lambda c: (-c.size, int(c.indices[0])))
    return clusters

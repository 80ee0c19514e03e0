"""Point cloud container and ASCII PLY / CSV I/O."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class CloudError(Exception):
    pass


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray        # (N, 3) meters
    frame: str = "world"      # "world" or "camera"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if pts.size and not np.all(np.isfinite(pts)):
            raise CloudError("cloud contains non-finite coordinates")
        if not self.frame:
            raise CloudError("cloud frame tag missing")
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return len(self.points)

    def select(self, mask_or_indices) -> "PointCloud":
        return PointCloud(self.points[mask_or_indices], self.frame)


def save_ply(cloud: PointCloud, path: str) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("ply\nformat ascii 1.0\n")
        fh.write(f"comment frame {cloud.frame}\n")
        fh.write(f"element vertex {cloud.size}\n")
        fh.write("property float x\nproperty float y\nproperty float z\n")
        fh.write("end_header\n")
        for x, y, z in cloud.points:
            fh.write(f"{x:.6f} {y:.6f} {z:.6f}\n")


def load_ply(path: str) -> PointCloud:
    frame = "world"
    with open(path, "r", encoding="ascii") as fh:
        line = fh.readline().strip()
        if line != "ply":
            raise CloudError(f"{path}: not a PLY file")
        count = None
        while True:
            line = fh.readline()
            if not line:
                raise CloudError(f"{path}: header not terminated")
            line = line.strip()
            if line.startswith("comment frame "):
                frame = line.split()[-1]
            elif line.startswith("element vertex "):
                count = int(line.split()[-1])
            elif line.startswith("format") and "ascii" not in line:
                raise CloudError(f"{path}: only ascii PLY supported")
            elif line == "end_header":
                break
        if count is None:
            raise CloudError(f"{path}: no vertex element")
        pts = np.loadtxt(fh, dtype=float, max_rows=count, ndmin=2)
    if pts.shape[0] != count:
        raise CloudError(f"{path}: expected {count} vertices, got {pts.shape[0]}")
    return PointCloud(pts[:, :3], frame)


def save_csv(cloud: PointCloud, path: str) -> None:
    np.savetxt(path, cloud.points, delimiter=",", header="x,y,z", comments="")


def load_csv(path: str) -> PointCloud:
    pts = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return PointCloud(pts[:, :3])

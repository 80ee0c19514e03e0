"""Kinematic tabletop world: synthesizes depth clouds, executes joint
trajectories tick by tick, attaches grasped objects to the gripper, and
honors stop requests delivered mid-execution."""

from __future__ import annotations

import json
import math
import threading
import time
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import controller
from .controller import GraspTarget, JointTrajectory, RobotState
from .grasp.cloud import PointCloud
from .grasp.planner import GraspCandidate
from .kinematics import KinematicChain, Pose, default_chain, fk

GRASP_PROXIMITY = 0.01    # m from ee to object footprint for a close to bite
DEFAULT_TICK_RATE = 50.0


class SimError(Exception):
    pass


class ObjectUnknown(SimError):
    def __init__(self, object_id):
        super().__init__(f"no such object: {object_id!r}")
        self.object_id = object_id


class BinUnknown(SimError):
    def __init__(self, bin_id):
        super().__init__(f"no such bin: {bin_id!r}")
        self.bin_id = bin_id


class NothingVisible(SimError):
    pass


@dataclass
class WorldObject:
    id: str
    name: str                      # lexicon Objects high-level name
    shape: str                     # box | cylinder | sphere
    dims: tuple[float, ...]        # box (lx,ly,lz); cylinder (r,h); sphere (r,)
    position: np.ndarray           # base center (z = bottom), world frame
    yaw: float = 0.0

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)

    @property
    def height(self) -> float:
        if self.shape == "box":
            return self.dims[2]
        if self.shape == "cylinder":
            return self.dims[1]
        return 2 * self.dims[0]

    @property
    def min_cross_section(self) -> float:
        if self.shape == "box":
            return min(self.dims[0], self.dims[1])
        return 2 * self.dims[0]

    def footprint_distance(self, xy: np.ndarray) -> float:
        """Distance from a table-plane point to the object footprint outline
        (0 inside)."""
        rel = np.asarray(xy, dtype=float) - self.position[:2]
        if self.shape == "box":
            c, s = math.cos(-self.yaw), math.sin(-self.yaw)
            local = np.array([c * rel[0] - s * rel[1], s * rel[0] + c * rel[1]])
            dx = max(abs(local[0]) - self.dims[0] / 2, 0.0)
            dy = max(abs(local[1]) - self.dims[1] / 2, 0.0)
            return math.hypot(dx, dy)
        return max(0.0, float(np.linalg.norm(rel)) - self.dims[0])

    def to_dict(self) -> dict:
        return {
            "id": self.id, "name": self.name, "shape": self.shape,
            "dims": list(self.dims),
            "pose": {"position": [float(v) for v in self.position], "yaw": self.yaw},
        }


@dataclass
class Bin:
    id: str
    region_min: np.ndarray
    region_max: np.ndarray

    def __post_init__(self):
        self.region_min = np.asarray(self.region_min, dtype=float)
        self.region_max = np.asarray(self.region_max, dtype=float)

    def contains(self, point: np.ndarray) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(np.all(p >= self.region_min) and np.all(p <= self.region_max))

    @property
    def center(self) -> np.ndarray:
        return (self.region_min + self.region_max) / 2

    def to_dict(self) -> dict:
        return {"id": self.id,
                "region": {"min": [float(v) for v in self.region_min],
                           "max": [float(v) for v in self.region_max]}}


@dataclass
class World:
    table_z: float
    objects: list[WorldObject]
    bins: list[Bin]
    robot: RobotState
    chain: KinematicChain
    attachments: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        ids = [o.id for o in self.objects]
        if len(ids) != len(set(ids)):
            raise SimError("object ids must be unique")
        for obj in self.objects:
            if obj.position[2] < self.table_z - 1e-9:
                raise SimError(f"object {obj.id} below the table")

    def object(self, object_id: str) -> WorldObject:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise ObjectUnknown(object_id)

    def bin(self, bin_id: str) -> Bin:
        for b in self.bins:
            if b.id == bin_id:
                return b
        raise BinUnknown(bin_id)

    def object_center(self, obj: WorldObject) -> np.ndarray:
        return obj.position + np.array([0.0, 0.0, obj.height / 2])

    def to_dict(self) -> dict:
        return {
            "table_z": self.table_z,
            "objects": [o.to_dict() for o in self.objects],
            "bins": [b.to_dict() for b in self.bins],
        }

    def copy(self) -> "World":
        data = self.to_dict()
        return world_from_dict(data, self.chain,
                               robot=RobotState(self.robot.joints.copy(),
                                                self.robot.gripper,
                                                self.robot.holding,
                                                self.robot.fault))


def world_from_dict(data: dict, chain: KinematicChain | None = None,
                    robot: RobotState | None = None) -> World:
    chain = chain or default_chain()
    objects = [
        WorldObject(o["id"], o["name"], o["shape"], tuple(o["dims"]),
                    np.array(o["pose"]["position"]), o["pose"].get("yaw", 0.0))
        for o in data.get("objects", [])
    ]
    bins = [
        Bin(b["id"], np.array(b["region"]["min"]), np.array(b["region"]["max"]))
        for b in data.get("bins", [])
    ]
    if robot is None:
        robot = RobotState(np.zeros(7))
    return World(data.get("table_z", 0.0), objects, bins, robot, chain)


def load_world(path: str, chain: KinematicChain | None = None) -> World:
    with open(path, "r", encoding="utf-8") as fh:
        return world_from_dict(json.load(fh), chain)


def default_world(chain: KinematicChain | None = None) -> World:
    text = resources.files("verbalarm.data").joinpath("world.json").read_text("utf-8")
    return world_from_dict(json.loads(text), chain)


# -- synthetic depth sensing ---------------------------------------------------

@dataclass(frozen=True)
class CameraView:
    position: np.ndarray
    look_at: np.ndarray
    fov_deg: float = 60.0

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "look_at", np.asarray(self.look_at, dtype=float))


def _ray_box(origins, dirs, obj: WorldObject):
    half = np.array([obj.dims[0] / 2, obj.dims[1] / 2, obj.dims[2] / 2])
    center = obj.position + np.array([0.0, 0.0, obj.dims[2] / 2])
    c, s = math.cos(-obj.yaw), math.sin(-obj.yaw)
    R = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    o = (origins - center) @ R.T
    d = dirs @ R.T
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (-half - o) / d
        t2 = (half - o) / d
    parallel = np.abs(d) < 1e-12
    lo = np.where(parallel, -np.inf, np.minimum(t1, t2))
    hi = np.where(parallel, np.inf, np.maximum(t1, t2))
    inside_slab = np.abs(o) <= half
    lo = np.where(parallel & ~inside_slab, np.inf, lo)
    tmin = lo.max(axis=1)
    tmax = hi.min(axis=1)
    hit = (tmax >= np.maximum(tmin, 0.0)) & (tmin > 0.0)
    return np.where(hit, tmin, np.inf)


def _ray_sphere(origins, dirs, obj: WorldObject):
    r = obj.dims[0]
    center = obj.position + np.array([0.0, 0.0, r])
    oc = origins - center
    b = np.sum(dirs * oc, axis=1)
    cc = np.sum(oc * oc, axis=1) - r * r
    disc = b * b - cc
    ok = disc >= 0
    sqrt_disc = np.sqrt(np.where(ok, disc, 0.0))
    t = -b - sqrt_disc
    return np.where(ok & (t > 0), t, np.inf)


def _ray_cylinder(origins, dirs, obj: WorldObject):
    r, h = obj.dims[0], obj.dims[1]
    z0 = obj.position[2]
    z1 = z0 + h
    ox = origins[:, 0] - obj.position[0]
    oy = origins[:, 1] - obj.position[1]
    dx, dy, dz = dirs[:, 0], dirs[:, 1], dirs[:, 2]
    best = np.full(len(dirs), np.inf)
    a = dx * dx + dy * dy
    b = 2 * (ox * dx + oy * dy)
    cc = ox * ox + oy * oy - r * r
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = b * b - 4 * a * cc
        ok = (disc >= 0) & (a > 1e-12)
        sq = np.sqrt(np.where(ok, disc, 0.0))
        for sign in (-1.0, 1.0):
            t = np.where(ok, (-b + sign * sq) / (2 * a), np.inf)
            z = origins[:, 2] + t * dz
            valid = ok & (t > 0) & (z >= z0) & (z <= z1)
            best = np.where(valid & (t < best), t, best)
        t_cap = np.where(np.abs(dz) > 1e-12, (z1 - origins[:, 2]) / dz, np.inf)
    px = ox + t_cap * dx
    py = oy + t_cap * dy
    cap_ok = (t_cap > 0) & (px * px + py * py <= r * r)
    best = np.where(cap_ok & (t_cap < best), t_cap, best)
    return best


def synth_cloud(world: World, camera: CameraView | None = None,
                resolution: int = 64, noise_sigma: float = 0.001,
                seed: int | None = 0) -> PointCloud:
    """Z-buffer sample the table and object primitives on a resolution^2
    pinhole ray grid; optional Gaussian depth noise along each ray."""
    if camera is None:
        if world.objects:
            centers = np.array([world.object_center(o)[:2] for o in world.objects])
            cx, cy = centers.mean(axis=0)
        else:
            cx, cy = 0.45, 0.0
        camera = CameraView(np.array([cx, cy, world.table_z + 0.9]),
                            np.array([cx, cy, world.table_z]))
    forward = camera.look_at - camera.position
    norm = np.linalg.norm(forward)
    if norm < 1e-12 or camera.position[2] <= world.table_z:
        raise SimError("camera must sit above the table")
    forward = forward / norm
    if -forward[2] < math.cos(math.radians(45.0)):
        raise SimError("camera must look down within 45 degrees of vertical")

    up0 = np.array([0.0, 1.0, 0.0])
    if abs(np.dot(forward, up0)) > 0.99:
        up0 = np.array([1.0, 0.0, 0.0])
    right = np.cross(forward, up0)
    right /= np.linalg.norm(right)
    down = np.cross(forward, right)
    half_tan = math.tan(math.radians(camera.fov_deg) / 2)
    grid = np.linspace(-half_tan, half_tan, resolution)
    uu, vv = np.meshgrid(grid, grid)
    dirs = (forward[None, :]
            + uu.reshape(-1, 1) * right[None, :]
            + vv.reshape(-1, 1) * down[None, :])
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    origins = np.broadcast_to(camera.position, dirs.shape)

    with np.errstate(divide="ignore", invalid="ignore"):
        t_table = (world.table_z - camera.position[2]) / dirs[:, 2]
    best = np.where(t_table > 0, t_table, np.inf)
    for obj in world.objects:
        if obj.shape == "box":
            t = _ray_box(origins, dirs, obj)
        elif obj.shape == "cylinder":
            t = _ray_cylinder(origins, dirs, obj)
        elif obj.shape == "sphere":
            t = _ray_sphere(origins, dirs, obj)
        else:
            raise SimError(f"unknown shape {obj.shape!r}")
        best = np.minimum(best, t)

    hit = np.isfinite(best)
    if not np.any(hit):
        raise NothingVisible("no ray hit the scene")
    t = best[hit]
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        t = t + rng.normal(0.0, noise_sigma, size=t.shape)
    points = camera.position[None, :] + t[:, None] * dirs[hit]
    return PointCloud(points, "world")


# -- trajectory execution ------------------------------------------------------

@dataclass(frozen=True)
class ExecutionTick:
    time: float
    joints: np.ndarray
    ee_pose: Pose
    gripper: str
    events: tuple[dict, ...] = ()

    def to_wire(self) -> dict:
        return {
            "time": round(self.time, 6),
            "joints": [round(float(q), 9) for q in self.joints],
            "ee": {
                "position": [round(float(v), 9) for v in self.ee_pose.position],
                "orientation": [round(float(v), 9) for v in self.ee_pose.orientation],
            },
            "gripper": self.gripper,
            "events": list(self.events),
        }


class Execution:
    """One running trajectory; stop() may be called from any thread."""

    def __init__(self, world: World, trajectory: JointTrajectory,
                 tick_rate: float = DEFAULT_TICK_RATE, time_offset: float = 0.0,
                 realtime: bool = False):
        self.world = world
        self.trajectory = trajectory
        self.tick_rate = tick_rate
        self.time_offset = time_offset
        self.realtime = realtime  # pace ticks against the wall clock
        self._stop = threading.Event()
        self._fault: str | None = None
        self.stopped = False
        self.faulted = False

    def stop(self) -> bool:
        self._stop.set()
        return True

    def inject_fault(self, text: str) -> None:
        self._fault = text

    def _apply_gripper(self, flag: str, ee: Pose, events: list[dict]) -> None:
        world = self.world
        if flag == "close":
            world.robot.gripper = "closed"
            width = self.trajectory.meta.get("grasp_width")
            for obj in world.objects:
                if obj.id in world.attachments:
                    continue
                near = obj.footprint_distance(ee.position[:2]) <= GRASP_PROXIMITY
                in_z = (obj.position[2] - 0.005 <= ee.position[2]
                        <= obj.position[2] + obj.height + 0.03)
                fits = width is None or width >= obj.min_cross_section - 1e-6
                if near and in_z and fits:
                    world.attachments[obj.id] = obj.position - ee.position
                    world.robot.holding = obj.id
                    events.append({"type": "grasped", "object": obj.id})
                    break
        elif flag == "open":
            world.robot.gripper = "open"
            held = world.robot.holding
            if held is not None:
                world.attachments.pop(held, None)
                world.robot.holding = None
                events.append({"type": "released", "object": held})

    def ticks(self):
        world = self.world
        chain = world.chain
        traj = self.trajectory
        if traj.action is not None:
            if traj.action in ("start", "recover"):
                world.robot.fault = False
            ee = fk(chain, world.robot.joints, check_limits=False)
            yield ExecutionTick(self.time_offset, world.robot.joints.copy(), ee,
                                world.robot.gripper,
                                ({"type": "completed", "action": traj.action},))
            return
        samples = traj.samples
        times = np.array([s.time for s in samples])
        joints = np.stack([s.joints for s in samples])
        t_end = float(times[-1])
        dt = 1.0 / self.tick_rate
        tick_times = [k * dt for k in range(int(math.floor(t_end / dt)) + 1)]
        if not tick_times or tick_times[-1] < t_end - 1e-12:
            tick_times.append(t_end)
        prev_t = -1.0
        wall_start = time.monotonic()
        for t in tick_times:
            if self.realtime:
                lag = t - (time.monotonic() - wall_start)
                if lag > 0:
                    self._stop.wait(lag)
            events: list[dict] = []
            q = np.array([np.interp(t, times, joints[:, j]) for j in range(7)])
            world.robot.joints = q
            ee = fk(chain, q, check_limits=False)
            if self._fault is not None and not self.faulted:
                self.faulted = True
                world.robot.fault = True
                events.append({"type": "fault", "text": self._fault})
                yield ExecutionTick(self.time_offset + t, q, ee,
                                    world.robot.gripper, tuple(events))
                return
            if self._stop.is_set():
                self.stopped = True
                events.append({"type": "stopped"})
                yield ExecutionTick(self.time_offset + t, q, ee,
                                    world.robot.gripper, tuple(events))
                return
            for s in samples:
                if s.gripper and prev_t < s.time <= t:
                    ee_at = fk(chain, s.joints, check_limits=False)
                    self._apply_gripper(s.gripper, ee_at, events)
            for obj_id, offset in world.attachments.items():
                world.object(obj_id).position = ee.position + offset
            if t >= t_end - 1e-12:
                events.append({"type": "completed"})
            yield ExecutionTick(self.time_offset + t, q, ee,
                                world.robot.gripper, tuple(events))
            prev_t = t


def execute(world: World, trajectory: JointTrajectory,
            tick_rate: float = DEFAULT_TICK_RATE, realtime: bool = False) -> Execution:
    return Execution(world, trajectory, tick_rate, realtime=realtime)


def stop(handle: Execution) -> bool:
    """Interrupt a running execution before its next tick. Idempotent."""
    return handle.stop()


class PickPlaceRun:
    """Grasp an object with a chosen candidate, carry it to a bin, release."""

    def __init__(self, world: World, object_id: str, grasp: GraspCandidate,
                 bin_id: str, tick_rate: float = DEFAULT_TICK_RATE,
                 realtime: bool = False):
        self.world = world
        self.object = world.object(object_id)
        self.bin = world.bin(bin_id)
        self.grasp = grasp
        self.tick_rate = tick_rate
        self.realtime = realtime
        self._stop = threading.Event()
        self._current: Execution | None = None
        self.stopped = False

    def stop(self) -> bool:
        self._stop.set()
        if self._current is not None:
            self._current.stop()
        return True

    def _run_phase(self, trajectory: JointTrajectory, offset: float, final: bool):
        ex = Execution(self.world, trajectory, self.tick_rate, time_offset=offset,
                       realtime=self.realtime)
        self._current = ex
        if self._stop.is_set():
            ex.stop()
        last = offset
        for tick in ex.ticks():
            last = tick.time
            if not final:
                events = tuple(e for e in tick.events if e.get("type") != "completed")
                tick = ExecutionTick(tick.time, tick.joints, tick.ee_pose,
                                     tick.gripper, events)
            yield tick
        self.stopped = self.stopped or ex.stopped
        self._last_time = last

    def ticks(self):
        world = self.world
        chain = world.chain
        target = GraspTarget(
            position=np.array([self.grasp.center[0], self.grasp.center[1],
                               self.grasp.depth]),
            yaw=self.grasp.angle, width=self.grasp.width, object_id=self.object.id)
        traj = controller.grasp_trajectory(chain, world.robot, target)
        yield from self._run_phase(traj, 0.0, final=False)
        if self.stopped:
            return
        offset = world.attachments.get(self.object.id)
        # target is the object base point: just above the bin floor, centered
        drop_obj = np.array([
            self.bin.center[0], self.bin.center[1],
            self.bin.region_min[2] + 0.01,
        ])
        ee_drop = drop_obj - (offset if offset is not None
                              else np.array([0.0, 0.0, 0.0]))
        transport = controller.transport_trajectory(chain, world.robot, ee_drop)
        yield from self._run_phase(transport, self._last_time + 1.0 / self.tick_rate,
                                   final=True)


def task_pick_place(world: World, object_id: str, grasp: GraspCandidate,
                    bin_id: str, tick_rate: float = DEFAULT_TICK_RATE,
                    realtime: bool = False) -> PickPlaceRun:
    return PickPlaceRun(world, object_id, grasp, bin_id, tick_rate, realtime)

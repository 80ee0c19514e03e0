"""Map extracted clauses onto joint-space trajectories.

The mapping is conditional on the event and on which clause slots are
filled: task-level grasps, straight operational-space segments, single
joint moves, and action commands (stop / start / recover). Missing path
amounts fall back to configured defaults.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .kinematics import (
    IKFailure,
    KinematicChain,
    Pose,
    fk,
    ik,
    quat_slerp,
    rot_to_quat,
)
from .lexicon import HighLevelWord
from .sdc import SDC, Path

DIRECTIONS = {
    "Forward": np.array([1.0, 0.0, 0.0]),
    "Backward": np.array([-1.0, 0.0, 0.0]),
    "Left": np.array([0.0, 1.0, 0.0]),
    "Right": np.array([0.0, -1.0, 0.0]),
    "Up": np.array([0.0, 0.0, 1.0]),
    "Down": np.array([0.0, 0.0, -1.0]),
    "x": np.array([1.0, 0.0, 0.0]),
    "y": np.array([0.0, 1.0, 0.0]),
    "z": np.array([0.0, 0.0, 1.0]),
}

LENGTH_UNIT_M = {"Centimetres": 0.01, "Metres": 1.0, "Millimetres": 0.001}
ANGLE_UNIT_RAD = {"Degrees": math.pi / 180.0, "Radians": 1.0}

CARTESIAN_STEP = 0.01      # m between IK waypoints
SAMPLE_RATE = 100.0        # Hz
PREGRASP_HEIGHT = 0.10     # m above the grasp point


class ControllerError(Exception):
    pass


class AmbiguousCommand(ControllerError):
    def __init__(self, sdc):
        super().__init__(f"cannot map clause to a command level: {sdc}")
        self.sdc = sdc


class UnitMismatch(ControllerError):
    def __init__(self, unit, expected):
        super().__init__(f"path unit {unit} does not measure a {expected}")
        self.unit = unit


class NoGraspSelected(ControllerError):
    def __init__(self, obj):
        super().__init__(f"no grasp selected for object {obj!r}")
        self.object = obj


@dataclass
class RobotState:
    joints: np.ndarray
    gripper: str = "open"            # "open" | "closed"
    holding: str | None = None       # object id when grasping something
    fault: bool = False

    def copy(self) -> "RobotState":
        return RobotState(self.joints.copy(), self.gripper, self.holding, self.fault)


@dataclass(frozen=True)
class TrajectorySample:
    time: float
    joints: np.ndarray
    gripper: str | None = None       # "close" / "open" waypoint flag


@dataclass
class JointTrajectory:
    samples: list[TrajectorySample]
    meta: dict = field(default_factory=dict)
    action: str | None = None        # set for action-level commands

    def final_joints(self) -> np.ndarray | None:
        return self.samples[-1].joints if self.samples else None

    def validate(self, chain: KinematicChain) -> None:
        prev = None
        for s in self.samples:
            chain.check_limits(s.joints)
            if prev is not None:
                dt = s.time - prev.time
                if dt <= 0:
                    raise ValueError(f"times not strictly increasing at t={s.time}")
                rate = np.abs(s.joints - prev.joints) / dt
                if np.any(rate > chain.vmax + 1e-9):
                    raise ValueError(f"joint speed bound exceeded at t={s.time}")
            elif s.time != 0.0:
                raise ValueError("trajectory must start at t=0")
            prev = s


def to_csv(traj: JointTrajectory) -> str:
    out = io.StringIO()
    out.write("t," + ",".join(f"q{i}" for i in range(1, 8)) + "\n")
    for s in traj.samples:
        out.write(f"{s.time:.6f}," + ",".join(f"{v:.9f}" for v in s.joints) + "\n")
    return out.getvalue()


# -- command levels -----------------------------------------------------------

@dataclass(frozen=True)
class CommandLevel:
    kind: str                                  # task | operational | joint | action
    target: str | None = None                  # task: object high-level name
    direction: np.ndarray | None = None        # operational: unit vector
    distance: float = 0.0                      # operational: m (>= 0)
    joint_index: int = 0                       # joint: 1..7
    delta: float = 0.0                         # joint: rad (signed)
    action: str | None = None                  # action: stop | start | recover

    @staticmethod
    def task(target: str) -> "CommandLevel":
        return CommandLevel("task", target=target)

    @staticmethod
    def operational(direction: np.ndarray, distance: float) -> "CommandLevel":
        return CommandLevel("operational", direction=direction, distance=distance)

    @staticmethod
    def joint_space(index: int, delta: float) -> "CommandLevel":
        return CommandLevel("joint", joint_index=index, delta=delta)

    @staticmethod
    def act(name: str) -> "CommandLevel":
        return CommandLevel("action", action=name)


def default_path(kind: str, defaults: dict | None = None) -> Path:
    """Shipped fallback amounts for clauses with no explicit path."""
    defaults = defaults or {}
    if kind == "operational":
        cm = defaults.get("cartesian_m", 0.10) * 100.0
        return Path(cm, HighLevelWord("UnitOfMeasurement", "Centimetres"))
    if kind == "joint":
        deg = math.degrees(defaults.get("joint_rad", 0.1745))
        return Path(deg, HighLevelWord("UnitOfMeasurement", "Degrees"))
    raise ValueError(f"no default path for level kind {kind!r}")


def _path_to_meters(path: Path) -> float:
    scale = LENGTH_UNIT_M.get(path.unit.name)
    if scale is None:
        raise UnitMismatch(path.unit.name, "length")
    return path.magnitude * scale


def _path_to_radians(path: Path) -> float:
    scale = ANGLE_UNIT_RAD.get(path.unit.name)
    if scale is None:
        raise UnitMismatch(path.unit.name, "angle")
    return path.magnitude * scale


def classify(sdc: SDC, defaults: dict | None = None) -> CommandLevel:
    """Eq.-style conditional: the level depends only on the event and the
    filled-slot pattern, never on which particular object is named."""
    event = sdc.event.name
    if event in ("Stop", "Start", "Recover"):
        return CommandLevel.act(event.lower())
    joint = sdc.joint_number()
    if event in ("Move", "Rotate") and joint is not None:
        path = sdc.path or default_path("joint", defaults)
        return CommandLevel.joint_space(joint, _path_to_radians(path))
    if event == "Move" and sdc.place is not None and sdc.place.name in DIRECTIONS:
        path = sdc.path or default_path("operational", defaults)
        meters = _path_to_meters(path)
        direction = DIRECTIONS[sdc.place.name]
        if meters < 0:
            direction, meters = -direction, -meters
        return CommandLevel.operational(direction, meters)
    if event == "Grab" and sdc.object is not None:
        return CommandLevel.task(sdc.object.name)
    raise AmbiguousCommand(sdc)


# -- grasp target (filled in by the world / grasp planner) --------------------

@dataclass(frozen=True)
class GraspTarget:
    position: np.ndarray     # grasp point, world frame (m)
    yaw: float               # in-plane jaw angle (rad)
    width: float             # commanded jaw opening (m)
    object_id: str


def _downward_quat(yaw: float) -> np.ndarray:
    cy, sy = math.cos(yaw), math.sin(yaw)
    R = np.array([[cy, sy, 0.0], [sy, -cy, 0.0], [0.0, 0.0, -1.0]])
    return rot_to_quat(R)


# -- trajectory generation ----------------------------------------------------

def _merge_time(base: float, samples: list[TrajectorySample], chain: KinematicChain,
                q_from: np.ndarray, q_to: np.ndarray, gripper: str | None = None
                ) -> tuple[float, list[TrajectorySample]]:
    """Append a linear joint-space segment sampled at SAMPLE_RATE."""
    delta = q_to - q_from
    span = float(np.max(np.abs(delta)))
    speed = float(np.min(chain.vmax))
    if span < 1e-12:
        if gripper is not None:
            samples.append(TrajectorySample(base + 1.0 / SAMPLE_RATE, q_to.copy(), gripper))
            return base + 1.0 / SAMPLE_RATE, samples
        return base, samples
    duration = span / speed
    nticks = max(1, math.ceil(duration * SAMPLE_RATE))
    for k in range(1, nticks + 1):
        frac = k / nticks
        t = base + duration * frac
        flag = gripper if k == nticks else None
        samples.append(TrajectorySample(t, q_from + delta * frac, flag))
    return base + duration, samples


def _cartesian_segment(chain: KinematicChain, q_start: np.ndarray,
                       p_end: np.ndarray, quat_end: np.ndarray) -> list[np.ndarray]:
    """IK waypoints along a straight line (1 cm steps) with slerped orientation."""
    start = fk(chain, q_start)
    p0 = start.position
    span = float(np.linalg.norm(p_end - p0))
    steps = max(1, math.ceil(span / CARTESIAN_STEP))
    waypoints = []
    q = q_start.copy()
    for k in range(1, steps + 1):
        frac = k / steps
        p = p0 + (p_end - p0) * frac
        quat = quat_slerp(start.orientation, quat_end, frac)
        try:
            q = ik(chain, Pose(p, quat), q)
        except IKFailure as exc:
            raise IKFailure(str(exc), waypoint=k) from exc
        waypoints.append(q.copy())
    return waypoints


def translate(chain: KinematicChain, state: RobotState, sdc: SDC,
              grasp: GraspTarget | None = None,
              defaults: dict | None = None) -> JointTrajectory:
    """Turn one clause into a limit- and speed-respecting joint trajectory."""
    defaults = defaults if defaults is not None else chain.defaults
    level = classify(sdc, defaults)
    meta = {"level": level.kind}
    q0 = np.asarray(state.joints, dtype=float)
    chain.check_limits(q0)
    samples = [TrajectorySample(0.0, q0.copy())]
    t = 0.0

    if level.kind == "action":
        return JointTrajectory([], meta=meta, action=level.action)

    if level.kind == "joint":
        q_to = q0.copy()
        q_to[level.joint_index - 1] += level.delta
        chain.check_limits(q_to)  # raises LimitViolation
        if abs(level.delta) < 1e-12:
            return JointTrajectory(samples, meta=meta)
        t, samples = _merge_time(t, samples, chain, q0, q_to)
        return JointTrajectory(samples, meta=meta)

    if level.kind == "operational":
        pose0 = fk(chain, q0)
        p_end = pose0.position + level.direction * level.distance
        waypoints = _cartesian_segment(chain, q0, p_end, pose0.orientation)
        q_prev = q0
        for q in waypoints:
            t, samples = _merge_time(t, samples, chain, q_prev, q)
            q_prev = q
        return JointTrajectory(samples, meta=meta)

    # task level: approach above, descend, close, retreat
    if grasp is None:
        raise NoGraspSelected(level.target)
    return grasp_trajectory(chain, state, grasp)


def grasp_trajectory(chain: KinematicChain, state: RobotState,
                     grasp: GraspTarget) -> JointTrajectory:
    """Approach 10 cm above the grasp point, descend, close, retreat."""
    q0 = np.asarray(state.joints, dtype=float)
    chain.check_limits(q0)
    samples = [TrajectorySample(0.0, q0.copy())]
    t = 0.0
    quat_down = _downward_quat(grasp.yaw)
    p_grasp = np.asarray(grasp.position, dtype=float)
    p_above = p_grasp + np.array([0.0, 0.0, PREGRASP_HEIGHT])
    q_prev = q0
    legs = [(p_above, None), (p_grasp, "close"), (p_above, None)]
    for p_target, flag in legs:
        waypoints = _cartesian_segment(chain, q_prev, p_target, quat_down)
        for j, q in enumerate(waypoints):
            gripper = flag if (flag and j == len(waypoints) - 1) else None
            t, samples = _merge_time(t, samples, chain, q_prev, q, gripper)
            q_prev = q
    return JointTrajectory(
        samples,
        meta={"level": "task", "object": grasp.object_id, "grasp_width": grasp.width},
    )


def transport_trajectory(chain: KinematicChain, state: RobotState,
                         ee_drop: np.ndarray,
                         travel_height: float = 0.15) -> JointTrajectory:
    """Carry the held object over to ee_drop and open the gripper there."""
    q0 = np.asarray(state.joints, dtype=float)
    pose0 = fk(chain, q0)
    drop = np.asarray(ee_drop, dtype=float)
    cruise_z = max(pose0.position[2], drop[2] + travel_height)
    lift = np.array([pose0.position[0], pose0.position[1], cruise_z])
    above = np.array([drop[0], drop[1], cruise_z])
    samples = [TrajectorySample(0.0, q0.copy())]
    t = 0.0
    q_prev = q0
    legs = [(lift, None), (above, None), (drop, "open"), (above, None)]
    for p_target, flag in legs:
        waypoints = _cartesian_segment(chain, q_prev, p_target, pose0.orientation)
        for j, q in enumerate(waypoints):
            gripper = flag if (flag and j == len(waypoints) - 1) else None
            t, samples = _merge_time(t, samples, chain, q_prev, q, gripper)
            q_prev = q
    return JointTrajectory(samples, meta={"level": "transport"})

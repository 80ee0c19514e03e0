"""7-DoF serial chain: DH forward kinematics, geometric Jacobian, and
damped least-squares inverse kinematics.

The chain is loaded from JSON (classic distal DH: Rz(q+offset) Tz(d) Tx(a)
Rx(alpha) per joint) so any 7-joint arm can be configured; a Panda-like
chain ships as the default.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np


class KinematicsError(Exception):
    pass


class LimitViolation(KinematicsError):
    def __init__(self, joint, value=None):
        super().__init__(f"joint {joint} outside limits" +
                         (f" (value {value:.4f} rad)" if value is not None else ""))
        self.joint = joint


class IKFailure(KinematicsError):
    def __init__(self, detail, waypoint=None):
        super().__init__(detail if waypoint is None else f"waypoint {waypoint}: {detail}")
        self.waypoint = waypoint


@dataclass(frozen=True)
class JointSpec:
    a: float
    d: float
    alpha: float
    theta_offset: float
    lo: float
    hi: float
    vmax: float


@dataclass(frozen=True)
class Pose:
    position: np.ndarray       # (3,) m
    orientation: np.ndarray    # (4,) unit quaternion, w first

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "orientation", np.asarray(self.orientation, dtype=float))


@dataclass(frozen=True)
class KinematicChain:
    joints: tuple[JointSpec, ...]
    home_pose: Pose | None = None
    defaults: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.joints)

    @property
    def lo(self) -> np.ndarray:
        return np.array([j.lo for j in self.joints])

    @property
    def hi(self) -> np.ndarray:
        return np.array([j.hi for j in self.joints])

    @property
    def vmax(self) -> np.ndarray:
        return np.array([j.vmax for j in self.joints])

    def check_limits(self, q: np.ndarray, tol: float = 1e-9) -> None:
        q = np.asarray(q, dtype=float)
        for i, spec in enumerate(self.joints):
            if q[i] < spec.lo - tol or q[i] > spec.hi + tol:
                raise LimitViolation(i + 1, q[i])


def load_chain(path: str) -> KinematicChain:
    with open(path, "r", encoding="utf-8") as fh:
        return chain_from_dict(json.load(fh))


def chain_from_dict(data: dict) -> KinematicChain:
    rows = data["dh"]
    if len(rows) != 7:
        raise ValueError(f"expected 7 dh rows, got {len(rows)}")
    joints = tuple(
        JointSpec(r["a"], r["d"], r["alpha"], r["theta_offset"], r["lo"], r["hi"], r["vmax"])
        for r in rows
    )
    for i, j in enumerate(joints):
        if not j.lo < j.hi:
            raise ValueError(f"joint {i + 1}: lo must be < hi")
    home = None
    if "home_pose" in data:
        home = Pose(np.array(data["home_pose"]["position"]),
                    np.array(data["home_pose"]["orientation"]))
    chain = KinematicChain(joints, home, dict(data.get("defaults", {})))
    # reachability self-check: zero-pose FK must be finite
    pose = fk(chain, np.zeros(7))
    if not np.all(np.isfinite(pose.position)):
        raise ValueError("home pose FK is not finite")
    return chain


def default_chain() -> KinematicChain:
    text = resources.files("verbalarm.data").joinpath("chain.json").read_text("utf-8")
    return chain_from_dict(json.loads(text))


# -- quaternion helpers -------------------------------------------------------

def rot_to_quat(R: np.ndarray) -> np.ndarray:
    """Rotation matrix to unit quaternion (w, x, y, z), w >= 0."""
    t = np.trace(R)
    if t > 0:
        s = math.sqrt(t + 1.0) * 2
        q = np.array([0.25 * s,
                      (R[2, 1] - R[1, 2]) / s,
                      (R[0, 2] - R[2, 0]) / s,
                      (R[1, 0] - R[0, 1]) / s])
    else:
        i = int(np.argmax(np.diag(R)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = math.sqrt(R[i, i] - R[j, j] - R[k, k] + 1.0) * 2
        q = np.empty(4)
        q[0] = (R[k, j] - R[j, k]) / s
        q[i + 1] = 0.25 * s
        q[j + 1] = (R[j, i] + R[i, j]) / s
        q[k + 1] = (R[k, i] + R[i, k]) / s
    q /= np.linalg.norm(q)
    return q if q[0] >= 0 else -q


def quat_to_rot(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q / np.linalg.norm(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_slerp(qa: np.ndarray, qb: np.ndarray, t: float) -> np.ndarray:
    qa = qa / np.linalg.norm(qa)
    qb = qb / np.linalg.norm(qb)
    dot = float(np.dot(qa, qb))
    if dot < 0:
        qb, dot = -qb, -dot
    if dot > 0.9995:
        q = qa + t * (qb - qa)
        return q / np.linalg.norm(q)
    theta = math.acos(min(1.0, dot))
    return (math.sin((1 - t) * theta) * qa + math.sin(t * theta) * qb) / math.sin(theta)


def rotation_error(R_target: np.ndarray, R_current: np.ndarray) -> np.ndarray:
    """Rotation vector (axis * angle) taking R_current onto R_target."""
    R_err = R_target @ R_current.T
    q = rot_to_quat(R_err)
    vec = q[1:]
    norm = np.linalg.norm(vec)
    if norm < 1e-12:
        return np.zeros(3)
    angle = 2.0 * math.atan2(norm, q[0])
    return vec / norm * angle


# -- forward kinematics -------------------------------------------------------

def _dh_matrix(spec: JointSpec, q: float) -> np.ndarray:
    th = q + spec.theta_offset
    ct, st = math.cos(th), math.sin(th)
    ca, sa = math.cos(spec.alpha), math.sin(spec.alpha)
    return np.array([
        [ct, -st * ca, st * sa, spec.a * ct],
        [st, ct * ca, -ct * sa, spec.a * st],
        [0.0, sa, ca, spec.d],
        [0.0, 0.0, 0.0, 1.0],
    ])


def fk_frames(chain: KinematicChain, q) -> list[np.ndarray]:
    """Cumulative 4x4 transforms base->joint_i for i = 0..7 (0 = base)."""
    q = np.asarray(q, dtype=float)
    frames = [np.eye(4)]
    for spec, qi in zip(chain.joints, q):
        frames.append(frames[-1] @ _dh_matrix(spec, qi))
    return frames


def fk(chain: KinematicChain, q, check_limits: bool = True) -> Pose:
    """End-effector pose for a joint vector."""
    q = np.asarray(q, dtype=float)
    if check_limits:
        chain.check_limits(q)
    T = fk_frames(chain, q)[-1]
    return Pose(T[:3, 3].copy(), rot_to_quat(T[:3, :3]))


def jacobian(chain: KinematicChain, q) -> np.ndarray:
    """Geometric Jacobian (6x7): linear velocity rows then angular."""
    frames = fk_frames(chain, q)
    p_ee = frames[-1][:3, 3]
    J = np.zeros((6, chain.n))
    for i in range(chain.n):
        z = frames[i][:3, 2]
        p = frames[i][:3, 3]
        J[:3, i] = np.cross(z, p_ee - p)
        J[3:, i] = z
    return J


# -- inverse kinematics -------------------------------------------------------

IK_MAX_ITER = 200
IK_POS_TOL = 1e-4     # m
IK_ORI_TOL = 1e-3     # rad
IK_DAMPING = 0.05
IK_STEP_CAP = 0.2     # rad per joint per iteration


def ik(chain: KinematicChain, target: Pose, seed,
       pos_tol: float = IK_POS_TOL, ori_tol: float = IK_ORI_TOL,
       max_iter: int = IK_MAX_ITER) -> np.ndarray:
    """Damped least-squares IK. Returns a joint vector whose FK matches the
    target within the tolerances, raising IKFailure otherwise."""
    q = np.asarray(seed, dtype=float).copy()
    chain.check_limits(q)
    R_t = quat_to_rot(target.orientation)
    p_t = np.asarray(target.position, dtype=float)
    for _ in range(max_iter + 1):
        frames = fk_frames(chain, q)
        T = frames[-1]
        e_p = p_t - T[:3, 3]
        e_o = rotation_error(R_t, T[:3, :3])
        if np.linalg.norm(e_p) <= pos_tol and np.linalg.norm(e_o) <= ori_tol:
            return q
        J = jacobian(chain, q)
        e = np.concatenate([e_p, e_o])
        JJt = J @ J.T + (IK_DAMPING ** 2) * np.eye(6)
        dq = J.T @ np.linalg.solve(JJt, e)
        step = np.max(np.abs(dq))
        if step > IK_STEP_CAP:
            dq *= IK_STEP_CAP / step
        q = np.clip(q + dq, chain.lo, chain.hi)
    raise IKFailure(
        f"no convergence after {max_iter} iterations "
        f"(pos err {np.linalg.norm(e_p):.4f} m, ori err {np.linalg.norm(e_o):.4f} rad)")

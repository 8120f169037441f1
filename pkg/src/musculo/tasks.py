"""Control tasks layered on the simulator: run forward, track a reference
motion, and reach targets with the beak.

Each task owns a simulator state, a deterministic per-episode random stream,
and a fixed observation layout.  Policies emit actions in [-1, 1] per muscle;
``action_map`` converts them to excitations.  ``step`` advances one control
interval and reports an :class:`EpisodeStatus` whose ``reason`` names the
termination trigger (``terminated`` is true exactly when a trigger fired;
running into the horizon only truncates).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import dynamics, seeding
from .chain import euler_to_matrix
from .dynamics import SimConfig, SimState
from .mocap import Trajectory, infer_velocities
from .model import Model, Pose
from .muscles import _force_scalars


class TaskError(RuntimeError):
    """A model or reference is unsuitable for the requested task."""


class TerminationReason(enum.Enum):
    NONE = "none"
    HEIGHT = "height"
    ROTATION = "rotation"
    REWARD_FLOOR = "reward-floor"
    CLIP_END = "clip-end"
    TARGET_REACHED = "target-reached"


@dataclass(frozen=True)
class EpisodeStatus:
    reward: float
    terminated: bool
    reason: TerminationReason
    truncated: bool = False

    def __post_init__(self):
        if self.terminated != (self.reason is not TerminationReason.NONE):
            raise ValueError("terminated flag must match the reason")


def action_map(action) -> np.ndarray:
    """Map policy actions in [-1, 1] to muscle excitations in [0, 1]."""
    a = np.asarray(action, dtype=float)
    return np.clip((a + 1.0) / 2.0, 0.0, 1.0)


def tracking_reward(frames, reference, w_p: float = 0.2, w_r: float = 0.1) -> float:
    """Product of position and rotation kernels over all bodies.

    exp(-w_p * e_p) * exp(-w_r * e_r) where e_p sums per-body position
    errors in metres and e_r sums per-body rotation angles in radians.
    Multiplicative by construction: one very wrong body drives the whole
    reward toward zero.
    """
    if tuple(frames.body_names) != tuple(reference.body_names):
        raise ValueError("frame sets cover different body lists")
    dp = reference.body_positions - frames.body_positions
    e_p = float(np.linalg.norm(dp, axis=1).sum())
    rel = np.einsum("bij,bkj->bik", reference.body_rotations, frames.body_rotations)
    cosang = np.clip((np.trace(rel, axis1=1, axis2=2) - 1.0) / 2.0, -1.0, 1.0)
    e_r = float(np.arccos(cosang).sum())
    return float(np.exp(-w_p * e_p) * np.exp(-w_r * e_r))


def torso_pitch(rotation) -> float:
    """Pitch angle of a body rotation: how far its x-axis tips out of the
    horizontal plane.  Positive when the x-axis drops (rotation about +y)."""
    R = np.asarray(rotation, dtype=float)
    return float(np.arctan2(-R[2, 0], float(np.hypot(R[0, 0], R[1, 0]))))


def neck_target_sample(rng, outer_r: float = 0.8, inner_r: float = 0.6,
                       base=(0.0, 0.0, 0.0), inner_center=None,
                       max_tries: int = 10000) -> np.ndarray:
    """Uniform sample from the outer sphere with the inner sphere cut away.

    The inner sphere is concentric with the outer one unless inner_center
    says otherwise.  Rejection sampling, deterministic for a given rng.
    """
    base = np.asarray(base, dtype=float)
    center = base if inner_center is None else np.asarray(inner_center, dtype=float)
    gap = float(np.linalg.norm(center - base))
    if inner_r >= gap + outer_r:
        raise ValueError("inner sphere covers the outer sphere; no feasible targets")
    for _ in range(max_tries):
        direction = rng.normal(size=3)
        norm = float(np.linalg.norm(direction))
        if norm == 0.0:
            continue
        radius = outer_r * float(rng.uniform()) ** (1.0 / 3.0)
        point = base + (radius / norm) * direction
        if float(np.linalg.norm(point - center)) > inner_r:
            return point
    raise RuntimeError("target sampling failed; feasible region too small")


def _muscle_forces(model: Model, state: SimState) -> np.ndarray:
    arrays = model.muscle_arrays
    return _force_scalars(state.activations, state.muscle_lengths,
                          state.muscle_velocities, arrays["peak_force"],
                          arrays["vmax"], arrays["fv_max"])


def _muscle_observation_names(model: Model) -> list:
    names = []
    for m in model.muscles:
        names += [f"{m.name}_force", f"{m.name}_activation",
                  f"{m.name}_length", f"{m.name}_velocity"]
    return names


def _muscle_observation(model: Model, state: SimState) -> np.ndarray:
    if not model.muscles:
        return np.zeros(0)
    quartet = np.stack([_muscle_forces(model, state), state.activations,
                        state.muscle_lengths, state.muscle_velocities], axis=1)
    return quartet.ravel()


class _TaskBase:
    """Shared stepping machinery; subclasses fill in rewards and layouts."""

    stream_label = "task"

    def __init__(self, model: Model, config: SimConfig | None = None,
                 seed: int = 0, horizon: int | None = 1000):
        self.model = model
        self.config = config or SimConfig()
        self.seed = int(seed)
        self.horizon = horizon
        self.state: SimState | None = None
        self._episode = -1
        self._steps = 0

    @property
    def action_size(self) -> int:
        return len(self.model.muscles)

    def _episode_rng(self):
        return seeding.stream(self.seed, self.stream_label, "episode",
                              str(self._episode))

    def _frames(self):
        state = self.state
        return self.model.fk(state.pose, root_position=state.root_position,
                             root_rotation=state.root_rotation)

    def _advance(self, action) -> None:
        u = action_map(action)
        self.state = dynamics.step(self.model, self.state, u, self.config)
        self._steps += 1

    def _status(self, reward: float, reason: TerminationReason) -> EpisodeStatus:
        terminated = reason is not TerminationReason.NONE
        truncated = (not terminated and self.horizon is not None
                     and self._steps >= self.horizon)
        return EpisodeStatus(reward=float(reward), terminated=terminated,
                             reason=reason, truncated=truncated)


class RunForwardTask(_TaskBase):
    """Run along +x: reward is the center-of-mass forward velocity.

    Episodes start from the default pose with joints jiggled uniformly
    within a fifth of their ranges, and end when the head or pelvis drops
    below its height floor or the torso pitches past 0.8 rad.
    """

    stream_label = "run-forward"

    HEAD_FLOOR = 0.9
    PELVIS_FLOOR = 0.6
    PITCH_LIMIT = 0.8

    def __init__(self, model: Model, config: SimConfig | None = None,
                 seed: int = 0, horizon: int | None = 1000):
        super().__init__(model, config, seed, horizon)
        missing = [tag for tag in ("head", "pelvis", "torso", "foot")
                   if not model.bodies_tagged(tag)]
        if missing:
            raise TaskError("model lacks required body tags: "
                            + ", ".join(missing))
        self._head = model.bodies_tagged("head")[0]
        self._pelvis = model.bodies_tagged("pelvis")[0]
        self._torso = model.bodies_tagged("torso")[0]
        self._feet = tuple(model.bodies_tagged("foot"))

    def reset(self) -> np.ndarray:
        self._episode += 1
        self._steps = 0
        self.state = dynamics.perturbed_state(self.model, self._episode_rng(),
                                              self.config)
        return self._observe()

    def step(self, action):
        self._advance(action)
        obs = self._observe()
        fs = self._frames()
        reason = TerminationReason.NONE
        if fs.body_position(self._head)[2] < self.HEAD_FLOOR:
            reason = TerminationReason.HEIGHT
        elif fs.body_position(self._pelvis)[2] < self.PELVIS_FLOOR:
            reason = TerminationReason.HEIGHT
        elif abs(torso_pitch(fs.body_rotation(self._torso))) >= self.PITCH_LIMIT:
            reason = TerminationReason.ROTATION
        return obs, self._status(self._last_com_velocity[0], reason)

    def observation_names(self) -> list:
        names = [f"{self._head}_height", f"{self._pelvis}_height"]
        names += [f"{foot}_height" for foot in self._feet]
        if self.model.root.floating:
            names += ["root_y", "root_z", "root_rx", "root_ry", "root_rz"]
        names += [f"q_{j.name}" for j in self.model.joints]
        if self.model.root.floating:
            names += ["root_vx", "root_vy", "root_vz",
                      "root_rxd", "root_ryd", "root_rzd"]
        names += [f"v_{j.name}" for j in self.model.joints]
        names += _muscle_observation_names(self.model)
        names += ["com_x_velocity"]
        return names

    def _observe(self) -> np.ndarray:
        state = self.state
        fs = self._frames()
        heights = [fs.body_position(self._head)[2],
                   fs.body_position(self._pelvis)[2]]
        heights += [fs.body_position(foot)[2] for foot in self._feet]
        parts = [np.asarray(heights)]
        if self.model.root.floating:
            parts.append(state.root_position[1:])
            parts.append(state.root_euler)
        parts.append(state.joint_angles)
        if self.model.root.floating:
            parts.append(state.root_velocity)
            parts.append(state.root_euler_rate)
        parts.append(state.joint_velocities)
        parts.append(_muscle_observation(self.model, state))
        _, vcom = dynamics.center_of_mass(self.model, state, self.config)
        self._last_com_velocity = vcom
        parts.append(np.asarray([vcom[0]]))
        return np.concatenate(parts)


class TrackingTask(_TaskBase):
    """Track a joint-space reference trajectory frame by frame.

    The reference runs at a multiple of the control rate (240 Hz against
    40 Hz control by default), so each control step consumes ``ratio``
    reference frames.  Episodes start at a uniformly sampled control index
    that leaves at least 20 steps of clip, with Gaussian pose noise
    (sigma 0.02) on top of the reference pose and reference velocities
    copied as-is.
    """

    stream_label = "tracking"

    REWARD_FLOOR = 0.01
    POSE_NOISE = 0.02
    TAIL_STEPS = 20

    def __init__(self, model: Model, reference: Trajectory,
                 config: SimConfig | None = None, seed: int = 0,
                 horizon: int | None = None, w_p: float = 0.2,
                 w_r: float = 0.1):
        super().__init__(model, config, seed, horizon)
        self.w_p = float(w_p)
        self.w_r = float(w_r)
        names = tuple(j.name for j in model.joints)
        if tuple(reference.joint_names) != names:
            raise TaskError("reference joint names do not match the model")
        if reference.velocities is None:
            reference = infer_velocities(reference)
        self.reference = reference
        ratio = reference.rate * self.config.control_dt
        self._ratio = int(round(ratio))
        if self._ratio < 1 or abs(ratio - self._ratio) > 1e-9:
            raise TaskError("reference rate is not an integer multiple of the "
                            "control rate")
        self._last_index = (reference.frames - 1) // self._ratio
        if self._last_index < self.TAIL_STEPS:
            raise TaskError("reference clip is shorter than one episode tail")
        rate = reference.rate
        self._root_vel = np.diff(reference.root_position, axis=0,
                                 append=reference.root_position[-1:]) * rate
        self._root_vel[-1] = self._root_vel[-2] if reference.frames > 1 else 0.0
        self._euler_rate = np.diff(reference.root_euler, axis=0,
                                   append=reference.root_euler[-1:]) * rate
        self._euler_rate[-1] = self._euler_rate[-2] if reference.frames > 1 else 0.0

    def reset(self) -> np.ndarray:
        self._episode += 1
        self._steps = 0
        rng = self._episode_rng()
        self._index = int(rng.integers(0, self._last_index - self.TAIL_STEPS + 1))
        frame = self._index * self._ratio
        ref = self.reference
        state = dynamics.default_state(self.model, self.config)
        J = len(self.model.joints)
        state.joint_angles = ref.angles[frame] + rng.normal(0.0, self.POSE_NOISE, J)
        state.joint_velocities = ref.velocities[frame].copy()
        state.root_position = ref.root_position[frame] + rng.normal(
            0.0, self.POSE_NOISE, 3)
        state.root_euler = ref.root_euler[frame] + rng.normal(
            0.0, self.POSE_NOISE, 3)
        state.root_velocity = self._root_vel[frame].copy()
        state.root_euler_rate = self._euler_rate[frame].copy()
        dynamics._refresh_derived(self.model, state, self.config)
        self.state = state
        return self._observe()

    def reference_frames(self, frame: int):
        ref = self.reference
        pose = Pose(ref.angles[frame], ref.velocities[frame])
        return self.model.fk(pose, root_position=ref.root_position[frame],
                             root_rotation=euler_to_matrix(ref.root_euler[frame]))

    def step(self, action):
        self._advance(action)
        self._index += 1
        frame = self._index * self._ratio
        reward = tracking_reward(self._frames(), self.reference_frames(frame),
                                 self.w_p, self.w_r)
        reason = TerminationReason.NONE
        if reward < self.REWARD_FLOOR:
            reason = TerminationReason.REWARD_FLOOR
        elif self._index >= self._last_index:
            reason = TerminationReason.CLIP_END
        return self._observe(), self._status(reward, reason)

    def observation_names(self) -> list:
        names = [f"{b}_height" for b in ([self._pelvis_body()]
                                         + list(self.model.bodies_tagged("foot")))]
        if self.model.root.floating:
            names += ["root_x", "root_y", "root_z", "root_rx", "root_ry", "root_rz"]
        names += [f"q_{j.name}" for j in self.model.joints]
        if self.model.root.floating:
            names += ["root_vx", "root_vy", "root_vz",
                      "root_rxd", "root_ryd", "root_rzd"]
        names += [f"v_{j.name}" for j in self.model.joints]
        names += _muscle_observation_names(self.model)
        names += ["time_left"]
        return names

    def _pelvis_body(self):
        tagged = self.model.bodies_tagged("pelvis")
        return tagged[0] if tagged else self.model.root.name

    def _observe(self) -> np.ndarray:
        state = self.state
        fs = self._frames()
        bodies = [self._pelvis_body()] + list(self.model.bodies_tagged("foot"))
        parts = [np.asarray([fs.body_position(b)[2] for b in bodies])]
        if self.model.root.floating:
            parts.append(state.root_position)
            parts.append(state.root_euler)
        parts.append(state.joint_angles)
        if self.model.root.floating:
            parts.append(state.root_velocity)
            parts.append(state.root_euler_rate)
        parts.append(state.joint_velocities)
        parts.append(_muscle_observation(self.model, state))
        time_left = (self._last_index - self._index) * self.config.control_dt
        parts.append(np.asarray([time_left]))
        return np.concatenate(parts)


class NeckReachTask(_TaskBase):
    """Reach targets with the beak while the base stays fixed.

    Targets are drawn uniformly from a spherical shell around the base of
    the chain (radii 0.6 to 0.8 m).  Reward is the negative beak-to-target
    distance; closing within 5 cm ends the episode.  The pose carries over
    between episodes except every 100th, which restarts from the default
    pose.
    """

    stream_label = "neck"

    TARGET_THRESHOLD = 0.05
    RESET_PERIOD = 100

    def __init__(self, model: Model, config: SimConfig | None = None,
                 seed: int = 0, horizon: int | None = 1000,
                 outer_r: float = 0.8, inner_r: float = 0.6, base=None):
        super().__init__(model, config, seed, horizon)
        beaks = model.sites_tagged("beak")
        if not beaks:
            raise TaskError("model lacks a site tagged beak")
        self._beak = beaks[0]
        self.outer_r = float(outer_r)
        self.inner_r = float(inner_r)
        if base is None:
            fs = model.fk(model.default_pose())
            base = fs.body_position(model.joints[0].body)
        self.base = np.asarray(base, dtype=float)
        self.target: np.ndarray | None = None

    def reset(self) -> np.ndarray:
        self._episode += 1
        self._steps = 0
        rng = self._episode_rng()
        if self.state is None or self._episode % self.RESET_PERIOD == 0:
            self.state = dynamics.default_state(self.model, self.config)
        self.target = neck_target_sample(rng, self.outer_r, self.inner_r,
                                         self.base)
        return self._observe()

    def _beak_position(self) -> np.ndarray:
        return self._frames().site_position(self._beak)

    def step(self, action):
        self._advance(action)
        distance = float(np.linalg.norm(self._beak_position() - self.target))
        reason = (TerminationReason.TARGET_REACHED
                  if distance < self.TARGET_THRESHOLD
                  else TerminationReason.NONE)
        return self._observe(), self._status(-distance, reason)

    def observation_names(self) -> list:
        names = [f"q_{j.name}" for j in self.model.joints]
        names += [f"v_{j.name}" for j in self.model.joints]
        names += _muscle_observation_names(self.model)
        names += ["beak_x", "beak_y", "beak_z",
                  "target_x", "target_y", "target_z",
                  "gap_x", "gap_y", "gap_z"]
        return names

    def _observe(self) -> np.ndarray:
        state = self.state
        beak = self._beak_position()
        return np.concatenate([
            state.joint_angles, state.joint_velocities,
            _muscle_observation(self.model, state),
            beak, self.target, self.target - beak])

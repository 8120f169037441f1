"""Tendon path geometry: polyline segments, smooth wrapping, moment arms.

A path is an ordered list of sites; each of its straight segments may be
assigned at most one wrap geometry (sphere or cylinder).  When the segment
clears the geometry it stays straight; when it would cut through, the length
is the two tangent lines plus the great-circle (or helical) arc.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

_TANGENT_EPS = 1e-12


class RoutingError(ValueError):
    """Raised for geometrically impossible path configurations."""


@dataclass(frozen=True)
class MusclePath:
    """Ordered site names with optional per-segment wrap assignments."""

    sites: tuple[str, ...]
    wraps: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.sites) < 2:
            raise RoutingError("path needs at least two sites")
        nseg = len(self.sites) - 1
        for idx in self.wraps:
            if not (0 <= idx < nseg):
                raise RoutingError(f"wrap assigned to segment {idx}, path has {nseg} segments")


@dataclass(frozen=True)
class PathSegment:
    kind: str                  # "straight" | "wrapped"
    length: float
    arc_angle: float = 0.0
    geom: str | None = None


@dataclass
class PathResult:
    total_length: float
    segments: list[PathSegment]
    lengthening_speed: float = 0.0


class MomentArms(NamedTuple):
    values: np.ndarray     # dL/dq per model joint, zeros outside the path's span
    one_sided: np.ndarray  # True where a joint limit forced a one-sided difference


# -- wrapping primitives (vectorized over leading dimensions) ------------------

def _circle_wrap(p1, p2, d1, d2, radius, gamma):
    """Tangent-arc-tangent length around a circle of the given radius.

    d1, d2: center distances of the endpoints; gamma: angle subtended at the
    center.  Valid where the chord actually cuts the circle.
    """
    alpha1 = np.arccos(np.clip(radius / d1, -1.0, 1.0))
    alpha2 = np.arccos(np.clip(radius / d2, -1.0, 1.0))
    arc = np.maximum(gamma - alpha1 - alpha2, 0.0)
    length = np.sqrt(np.maximum(d1**2 - radius**2, 0.0)) \
        + np.sqrt(np.maximum(d2**2 - radius**2, 0.0)) + radius * arc
    return length, arc


def _angle_between(u, v):
    cu = np.linalg.norm(np.cross(u, v), axis=-1)
    du = np.einsum("...i,...i->...", u, v)
    return np.arctan2(cu, du)


def _segment_point_distance(p1, p2, c):
    """Distance from c to the segment p1-p2 (vectorized)."""
    seg = p2 - p1
    ss = np.einsum("...i,...i->...", seg, seg)
    t = np.einsum("...i,...i->...", c - p1, seg) / np.where(ss > 0, ss, 1.0)
    t = np.clip(t, 0.0, 1.0)
    closest = p1 + t[..., None] * seg
    return np.linalg.norm(closest - c, axis=-1)


def sphere_wrap_lengths(p1, p2, center, radius):
    """Segment lengths around a sphere, elementwise over leading dims.

    Returns (length, arc_angle, wrapped_mask).  Raises if any endpoint lies
    inside the sphere.
    """
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    center = np.asarray(center, dtype=float)
    u1 = p1 - center
    u2 = p2 - center
    d1 = np.linalg.norm(u1, axis=-1)
    d2 = np.linalg.norm(u2, axis=-1)
    if np.any(d1 <= radius) or np.any(d2 <= radius):
        raise RoutingError("path endpoint inside wrap sphere")
    straight = np.linalg.norm(p2 - p1, axis=-1)
    h = _segment_point_distance(p1, p2, center)
    wrapped = h < radius - _TANGENT_EPS
    gamma = _angle_between(u1, u2)
    wlen, arc = _circle_wrap(p1, p2, d1, d2, radius, gamma)
    length = np.where(wrapped, wlen, straight)
    arc = np.where(wrapped, arc, 0.0)
    return length, arc, wrapped


def cylinder_wrap_lengths(p1, p2, center, axis, radius):
    """Segment lengths around an infinite cylinder, elementwise.

    The in-plane wrap follows the circle of radial projections; the axial
    travel is distributed uniformly along the planar path, which is the
    unrolled-geodesic (helical) length.  Of the two winding directions the
    shorter one is taken; at the tie (diametral chord) both have equal length.
    """
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    center = np.asarray(center, dtype=float)
    ax = np.asarray(axis, dtype=float)
    ax = ax / np.linalg.norm(ax, axis=-1, keepdims=True)
    r1 = p1 - center
    r2 = p2 - center
    z1 = np.einsum("...i,...i->...", r1, ax)
    z2 = np.einsum("...i,...i->...", r2, ax)
    q1 = r1 - z1[..., None] * ax
    q2 = r2 - z2[..., None] * ax
    rho1 = np.linalg.norm(q1, axis=-1)
    rho2 = np.linalg.norm(q2, axis=-1)
    if np.any(rho1 <= radius) or np.any(rho2 <= radius):
        raise RoutingError("path endpoint inside wrap cylinder")
    straight = np.linalg.norm(p2 - p1, axis=-1)
    h = _segment_point_distance(q1, q2, np.zeros_like(q1))
    wrapped = h < radius - _TANGENT_EPS
    gamma = _angle_between(q1, q2)
    planar, arc = _circle_wrap(q1, q2, rho1, rho2, radius, gamma)
    wlen = np.hypot(planar, z2 - z1)
    length = np.where(wrapped, wlen, straight)
    arc = np.where(wrapped, arc, 0.0)
    return length, arc, wrapped


def wrap_sphere(p1, p2, center, radius):
    """Single-segment sphere wrap: (length, arc_angle, wrapped)."""
    length, arc, wrapped = sphere_wrap_lengths(p1, p2, center, radius)
    return float(length), float(arc), bool(wrapped)


def wrap_cylinder(p1, p2, center, axis, radius):
    """Single-segment cylinder wrap: (length, arc_angle, wrapped)."""
    length, arc, wrapped = cylinder_wrap_lengths(p1, p2, center, axis, radius)
    return float(length), float(arc), bool(wrapped)


# -- path evaluation -----------------------------------------------------------

def _segment_eval(p1, p2, geom, center, axis):
    if geom is None:
        return np.linalg.norm(p2 - p1, axis=-1), None, None
    if geom.kind == "sphere":
        length, arc, wrapped = sphere_wrap_lengths(p1, p2, center, geom.radius)
    else:
        length, arc, wrapped = cylinder_wrap_lengths(p1, p2, center, axis, geom.radius)
    return length, arc, wrapped


def path_length(model, frames, path: MusclePath) -> PathResult:
    """Total path length through the given world frames, with a per-segment breakdown."""
    segments = []
    total = 0.0
    for s in range(len(path.sites) - 1):
        p1 = frames.site_position(path.sites[s])
        p2 = frames.site_position(path.sites[s + 1])
        geom_name = path.wraps.get(s)
        if geom_name is None:
            length = float(np.linalg.norm(p2 - p1))
            segments.append(PathSegment("straight", length))
        else:
            geom = model.wrap_geom(geom_name)
            center, axis = frames.wrap_world(geom_name)
            length, arc, wrapped = _segment_eval(p1, p2, geom, center, axis)
            length = float(length)
            if wrapped:
                segments.append(PathSegment("wrapped", length, float(arc), geom_name))
            else:
                segments.append(PathSegment("straight", length, 0.0, geom_name))
        total += length
    return PathResult(total_length=total, segments=segments)


def _path_lengths_on_frames(model, bframes, path: MusclePath):
    """(B,) total lengths of one path over batched frames."""
    total = 0.0
    for s in range(len(path.sites) - 1):
        p1 = bframes.site_positions(path.sites[s])
        p2 = bframes.site_positions(path.sites[s + 1])
        geom_name = path.wraps.get(s)
        if geom_name is None:
            total = total + np.linalg.norm(p2 - p1, axis=-1)
        else:
            geom = model.wrap_geom(geom_name)
            center, axis = bframes.wrap_world(geom_name)
            length, _, _ = _segment_eval(p1, p2, geom, center, axis)
            total = total + length
    return total


def path_lengths_for_poses(model, path: MusclePath, joint_angle_matrix) -> np.ndarray:
    """Path lengths for a batch of joint configurations, shape (B,)."""
    ch = model.chain_fixed
    Q = ch.pack(np.zeros(ch.njoints))[None, :].repeat(len(joint_angle_matrix), axis=0)
    if ch.njoints:
        Q[:, ch.joint_dof] = np.asarray(joint_angle_matrix, dtype=float)
    bf = ch.fk_batch(Q)
    out = np.asarray(_path_lengths_on_frames(model, bf, path), dtype=float)
    return np.broadcast_to(out, (len(joint_angle_matrix),)).copy()


def _path_bodies(model, path: MusclePath):
    names = [model.site(s).body for s in path.sites]
    names += [model.wrap_geom(g).body for g in path.wraps.values()]
    return names


def moment_arms_batch(model, pose, paths, step=1e-5):
    """Finite-difference dL/dq for several paths sharing one pose.

    Returns (values (P, J), one_sided (J,), base_lengths (P,)).  Joints outside
    every path's kinematic span get exact zeros; joints at their limit are
    evaluated one-sidedly and flagged.
    """
    ch = model.chain_fixed
    J = ch.njoints
    q0 = np.asarray(pose.joint_angles, dtype=float)
    span = sorted(set().union(*[
        set(ch.joints_spanning(_path_bodies(model, p))) for p in paths
    ])) if paths else []
    lo = np.array([j.range[0] for j in model.joints]) if J else np.zeros(0)
    hi = np.array([j.range[1] for j in model.joints]) if J else np.zeros(0)

    cols = [q0]
    plan = []  # (joint, col_plus, col_minus, denom)
    one_sided = np.zeros(J, dtype=bool)
    for j in span:
        h_plus = step if q0[j] + step <= hi[j] else 0.0
        h_minus = step if q0[j] - step >= lo[j] else 0.0
        if h_plus == 0.0 and h_minus == 0.0:
            continue  # locked or near-locked joint: no usable perturbation
        one_sided[j] = (h_plus == 0.0) or (h_minus == 0.0)
        if h_plus > 0:
            qp = q0.copy(); qp[j] += h_plus
            cols.append(qp); ip = len(cols) - 1
        else:
            ip = 0
        if h_minus > 0:
            qm = q0.copy(); qm[j] -= h_minus
            cols.append(qm); im = len(cols) - 1
        else:
            im = 0
        plan.append((j, ip, im, h_plus + h_minus))

    if paths:
        Q = ch.pack(np.zeros(ch.njoints))[None, :].repeat(len(cols), axis=0)
        if J:
            Q[:, ch.joint_dof] = np.stack(cols)
        bf = ch.fk_batch(Q)
        lengths = np.stack([
            np.broadcast_to(np.asarray(_path_lengths_on_frames(model, bf, p),
                                       dtype=float), (len(cols),))
            for p in paths
        ])
    else:
        lengths = np.zeros((0, 1))
    values = np.zeros((len(paths), J))
    for j, ip, im, denom in plan:
        values[:, j] = (lengths[:, ip] - lengths[:, im]) / denom
    return values, one_sided, lengths[:, 0] if paths else np.zeros(0)


def moment_arms(model, pose, path: MusclePath, step=1e-5) -> MomentArms:
    """Sensitivity of path length to each joint angle (central differences).

    The tendon-excursion identity makes -values[j] the torque produced per
    newton of path tension at joint j.
    """
    values, one_sided, _ = moment_arms_batch(model, pose, [path], step=step)
    return MomentArms(values=values[0], one_sided=one_sided)


def path_state(model, pose, path: MusclePath, step=1e-5) -> PathResult:
    """PathResult at a pose, with lengthening speed from the joint velocities."""
    result = path_length(model, model.fk(pose), path)
    arms = moment_arms(model, pose, path, step=step)
    result.lengthening_speed = float(arms.values @ np.asarray(pose.joint_velocities, dtype=float))
    return result


def joint_torques(forces, arm_values) -> np.ndarray:
    """Map path tensions to joint torques: tau_j = sum_m -dLm/dqj * f_m.

    arm_values: (M, J) matrix of dL/dq rows as returned by moment_arms.
    """
    f = np.asarray(forces, dtype=float)
    A = np.atleast_2d(np.asarray(arm_values, dtype=float))
    return -(A.T @ f)

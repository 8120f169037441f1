"""Flattened kinematic-tree tables used by FK, dynamics, and marker fitting.

A model is compiled into an ordered list of scalar degrees of freedom
(hinges, plus six free-base coordinates when the root floats: x/y/z slides
followed by x/y/z hinges).  Welded bodies fold into their parent's frame as a
fixed translation, so every body resolves to (anchor dof, local offset).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_EYE3 = np.eye(3)


def _cross3(a, b):
    # np.cross spends most of its time reshaping; this path is hot in the
    # dynamics tables, so spell it out for plain 3-vectors.
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


def rodrigues(axis, angle):
    """Rotation matrices about a fixed unit axis; angle may be an array."""
    a = np.asarray(angle, dtype=float)
    k = np.asarray(axis, dtype=float)
    K = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    s = np.sin(a)[..., None, None]
    c = np.cos(a)[..., None, None]
    return _EYE3 + s * K + (1.0 - c) * (K @ K)


def polar_orthonormalize(R):
    """Nearest rotation matrix (polar factor) to R."""
    u, _, vt = np.linalg.svd(np.asarray(R, dtype=float))
    out = u @ vt
    if np.linalg.det(out) < 0:
        u[:, -1] = -u[:, -1]
        out = u @ vt
    return out


def euler_to_matrix(euler):
    """Rotation matrix for the free-base orientation angles (rx, ry, rz).

    The base composes rotations as Ry(ry) @ Rx(rx) @ Rz(rz).  Pitch is the
    outermost angle, so sagittal motion (a forward fall, a somersault) never
    approaches the chart's singular surface at rx = +/- pi/2.
    """
    e = np.asarray(euler, dtype=float)
    R = (rodrigues(_EYE3[1], e[1])
         @ rodrigues(_EYE3[0], e[0])
         @ rodrigues(_EYE3[2], e[2]))
    return polar_orthonormalize(R)


@dataclass(frozen=True)
class Dof:
    parent: int            # previous dof index, -1 means the base frame
    offset: np.ndarray     # (3,) translation in the parent frame, before motion
    axis: np.ndarray       # (3,) unit axis in the pre-motion frame
    prismatic: bool
    joint_index: int       # model joint index, -1 for free-base coordinates


class Chain:
    def __init__(self, model, floating: bool):
        self.floating = bool(floating)
        root = model.root
        self.base_offset = np.zeros(3) if floating else np.array(root.offset, dtype=float)

        dofs: list[Dof] = []
        joint_dof = [-1] * len(model.joints)
        body_anchor: dict[str, tuple[int, np.ndarray]] = {}
        body_tfix: dict[str, np.ndarray] = {}

        def add_body(body):
            if body.parent is None:
                parent_dof, parent_tfix = -1, np.zeros(3)
                offset0 = np.zeros(3)  # authored placement handled by the base frame
            else:
                parent_dof, parent_tfix = body_anchor[body.parent]
                offset0 = parent_tfix + np.array(body.offset, dtype=float)
            prev, pending = parent_dof, offset0
            if body.parent is None and self.floating:
                for ax in _EYE3:
                    dofs.append(Dof(prev, pending, ax.copy(), True, -1))
                    prev, pending = len(dofs) - 1, np.zeros(3)
                # rotation order matches euler_to_matrix: y, then x, then z
                for ax in (_EYE3[1], _EYE3[0], _EYE3[2]):
                    dofs.append(Dof(prev, pending, ax.copy(), False, -1))
                    prev, pending = len(dofs) - 1, np.zeros(3)
            for joint in model.joints_of(body.name):
                dofs.append(Dof(prev, pending, np.array(joint.axis, dtype=float),
                                False, model.joint_index[joint.name]))
                joint_dof[model.joint_index[joint.name]] = len(dofs) - 1
                prev, pending = len(dofs) - 1, np.zeros(3)
            body_anchor[body.name] = (prev, pending)
            body_tfix[body.name] = pending

        for body in model.bodies:  # topologically ordered at load
            add_body(body)

        self.dofs = dofs
        self.nq = len(dofs)
        self.njoints = len(model.joints)
        self.joint_dof = np.array(joint_dof, dtype=int)
        self.root_dofs = list(range(6)) if floating else []
        self.body_anchor = body_anchor

        anc: list[list[int]] = []
        for i, d in enumerate(dofs):
            anc.append((anc[d.parent] + [i]) if d.parent >= 0 else [i])
        self._dof_ancestors = anc
        self.body_ancestors = {
            name: (anc[idx] if idx >= 0 else []) for name, (idx, _) in body_anchor.items()
        }

        # site and wrap-geometry attachment points in their anchor frame
        self.site_anchor = {
            s.name: (body_anchor[s.body][0],
                     body_anchor[s.body][1] + np.array(s.local_position, dtype=float))
            for s in model.sites
        }
        self.wrap_anchor = {
            g.name: (body_anchor[g.body][0],
                     body_anchor[g.body][1] + np.array(g.center, dtype=float),
                     None if g.axis is None else np.array(g.axis, dtype=float))
            for g in model.wrap_geoms
        }

        # per-body mass tables (com and inertia expressed in the anchor frame)
        self.body_names = [b.name for b in model.bodies]
        self.body_anchor_idx = np.array([body_anchor[n][0] for n in self.body_names])
        self.body_com_local = np.array(
            [body_tfix[b.name] + np.array(b.com_offset, dtype=float) for b in model.bodies])
        self.body_mass = np.array([b.mass for b in model.bodies], dtype=float)
        self.body_inertia = np.array([np.array(b.inertia, dtype=float) for b in model.bodies])
        self.total_mass = float(np.sum(self.body_mass))

        self._joint_of_dof = np.array([d.joint_index for d in dofs], dtype=int)

    # -- configuration packing -------------------------------------------------

    def pack(self, joint_angles, root_position=None, root_euler=None):
        q = np.zeros(self.nq)
        if self.floating:
            q[0:3] = 0.0 if root_position is None else np.asarray(root_position, dtype=float)
            if root_euler is not None:
                e = np.asarray(root_euler, dtype=float)
                q[3], q[4], q[5] = e[1], e[0], e[2]  # dof order y, x, z
        if self.njoints:
            q[self.joint_dof] = np.asarray(joint_angles, dtype=float)
        return q

    def joint_part(self, q):
        return np.asarray(q)[..., self.joint_dof] if self.njoints else np.zeros(
            np.shape(q)[:-1] + (0,))

    def joints_spanning(self, body_names) -> np.ndarray:
        """Model joint indices whose motion can affect any of the given bodies."""
        hit = set()
        for name in body_names:
            for dof in self.body_ancestors[name]:
                j = self.dofs[dof].joint_index
                if j >= 0:
                    hit.add(j)
        return np.array(sorted(hit), dtype=int)

    # -- forward kinematics ----------------------------------------------------

    def fk(self, q, root_position=None, root_rotation=None) -> "ChainFrames":
        o_base = self.base_offset if root_position is None else np.asarray(root_position, dtype=float)
        R_base = _EYE3 if root_rotation is None else np.asarray(root_rotation, dtype=float)
        n = self.nq
        o = np.empty((n, 3))
        R = np.empty((n, 3, 3))
        aw = np.empty((n, 3))
        for i, d in enumerate(self.dofs):
            if d.parent < 0:
                Rp, op = R_base, o_base
            else:
                Rp, op = R[d.parent], o[d.parent]
            base_pt = op + Rp @ d.offset
            ax = Rp @ d.axis
            if d.prismatic:
                o[i] = base_pt + q[i] * ax
                R[i] = Rp
            else:
                o[i] = base_pt
                R[i] = Rp @ rodrigues(d.axis, q[i])
            aw[i] = ax
        return ChainFrames(self, o, R, aw, o_base, R_base)

    def fk_batch(self, Q, root_positions=None, root_rotations=None) -> "BatchFrames":
        Q = np.asarray(Q, dtype=float)
        B = Q.shape[0]
        o_base = (np.broadcast_to(self.base_offset, (B, 3)) if root_positions is None
                  else np.asarray(root_positions, dtype=float))
        R_base = (np.broadcast_to(_EYE3, (B, 3, 3)) if root_rotations is None
                  else np.asarray(root_rotations, dtype=float))
        o = np.empty((self.nq, B, 3))
        R = np.empty((self.nq, B, 3, 3))
        aw = np.empty((self.nq, B, 3))
        for i, d in enumerate(self.dofs):
            if d.parent < 0:
                Rp, op = R_base, o_base
            else:
                Rp, op = R[d.parent], o[d.parent]
            base_pt = op + Rp @ d.offset
            ax = (Rp @ d.axis[:, None])[..., 0]
            if d.prismatic:
                o[i] = base_pt + Q[:, i, None] * ax
                R[i] = Rp
            else:
                o[i] = base_pt
                R[i] = Rp @ rodrigues(d.axis, Q[:, i])
            aw[i] = ax
        return BatchFrames(self, o, R, aw, o_base, R_base)

    # -- dynamics tables -------------------------------------------------------

    def dynamics_terms(self, q, qd, gravity):
        """Dense mass matrix, bias forces, and body velocity data at (q, qd).

        The bias vector covers Coriolis, centrifugal, and gravity loads
        (gravity enters through a fictitious base acceleration), so the
        equations of motion read M(q) qdd = tau_applied - bias.
        """
        fr = self.fk(q)
        o, R, aw = fr.origins, fr.rotations, fr.axes
        n = self.nq
        g = np.asarray(gravity, dtype=float)
        w = np.zeros((n, 3))
        vo = np.zeros((n, 3))
        dw = np.zeros((n, 3))
        ao = np.zeros((n, 3))
        for i, d in enumerate(self.dofs):
            if d.parent < 0:
                wp = dwp = np.zeros(3)
                vop = np.zeros(3)
                aop = -g
                op = fr.base_origin
            else:
                wp, vop, dwp, aop = w[d.parent], vo[d.parent], dw[d.parent], ao[d.parent]
                op = o[d.parent]
            r = o[i] - op
            if d.prismatic:
                w[i] = wp
                dw[i] = dwp
                vo[i] = vop + _cross3(wp, r) + qd[i] * aw[i]
                ao[i] = (aop + _cross3(dwp, r) + _cross3(wp, _cross3(wp, r))
                         + 2.0 * qd[i] * _cross3(wp, aw[i]))
            else:
                w[i] = wp + qd[i] * aw[i]
                dw[i] = dwp + qd[i] * _cross3(wp, aw[i])
                vo[i] = vop + _cross3(wp, r)
                ao[i] = aop + _cross3(dwp, r) + _cross3(wp, _cross3(wp, r))

        M = np.zeros((n, n))
        bias = np.zeros(n)
        com_accum = np.zeros(3)
        vcom_accum = np.zeros(3)
        for b, name in enumerate(self.body_names):
            k = self.body_anchor_idx[b]
            m = self.body_mass[b]
            if k < 0:
                com_accum += m * (fr.base_origin + fr.base_rotation @ self.body_com_local[b])
                continue  # rigidly attached to the base: no dynamic contribution
            rc = R[k] @ self.body_com_local[b]
            cw = o[k] + rc
            wb = w[k]
            vcb = vo[k] + _cross3(wb, rc)
            acb = ao[k] + _cross3(dw[k], rc) + _cross3(wb, _cross3(wb, rc))
            Iw = R[k] @ self.body_inertia[b] @ R[k].T
            anc = self.body_ancestors[name]
            Jv = np.zeros((3, n))
            Jw = np.zeros((3, n))
            for j in anc:
                if self.dofs[j].prismatic:
                    Jv[:, j] = aw[j]
                else:
                    Jv[:, j] = _cross3(aw[j], cw - o[j])
                    Jw[:, j] = aw[j]
            M += m * (Jv.T @ Jv) + Jw.T @ (Iw @ Jw)
            bias += Jv.T @ (m * acb) + Jw.T @ (Iw @ dw[k] + _cross3(wb, Iw @ wb))
            com_accum += m * cw
            vcom_accum += m * vcb
        return {
            "frames": fr,
            "mass_matrix": M,
            "bias": bias,
            "com": com_accum / self.total_mass,
            "com_velocity": vcom_accum / self.total_mass,
            "dof_angular_velocity": w,
        }


class ChainFrames:
    """World frames of every dof for one configuration."""

    __slots__ = ("chain", "origins", "rotations", "axes", "base_origin", "base_rotation")

    def __init__(self, chain, origins, rotations, axes, base_origin, base_rotation):
        self.chain = chain
        self.origins = origins
        self.rotations = rotations
        self.axes = axes
        self.base_origin = np.asarray(base_origin, dtype=float)
        self.base_rotation = np.asarray(base_rotation, dtype=float)

    def _frame(self, idx):
        if idx < 0:
            return self.base_origin, self.base_rotation
        return self.origins[idx], self.rotations[idx]

    def body_frame(self, name):
        idx, tfix = self.chain.body_anchor[name]
        o, R = self._frame(idx)
        return o + R @ tfix, R

    def site_position(self, name):
        idx, local = self.chain.site_anchor[name]
        o, R = self._frame(idx)
        return o + R @ local

    def wrap_world(self, name):
        idx, center, axis = self.chain.wrap_anchor[name]
        o, R = self._frame(idx)
        return o + R @ center, (None if axis is None else R @ axis)

    def point_jacobian(self, body_name, point_w):
        """Jacobian of a world point rigidly attached to body_name, shape (3, nq)."""
        c = self.chain
        J = np.zeros((3, c.nq))
        for j in c.body_ancestors[body_name]:
            if c.dofs[j].prismatic:
                J[:, j] = self.axes[j]
            else:
                J[:, j] = _cross3(self.axes[j], point_w - self.origins[j])
        return J

    def point_velocity(self, body_name, point_w, qd):
        return self.point_jacobian(body_name, point_w) @ np.asarray(qd, dtype=float)


class BatchFrames:
    """World frames of every dof for a batch of configurations."""

    __slots__ = ("chain", "origins", "rotations", "axes", "base_origin", "base_rotation")

    def __init__(self, chain, origins, rotations, axes, base_origin, base_rotation):
        self.chain = chain
        self.origins = origins      # (nq, B, 3)
        self.rotations = rotations  # (nq, B, 3, 3)
        self.axes = axes
        self.base_origin = base_origin
        self.base_rotation = base_rotation

    def _frame(self, idx):
        if idx < 0:
            return self.base_origin, self.base_rotation
        return self.origins[idx], self.rotations[idx]

    def site_positions(self, name):
        idx, local = self.chain.site_anchor[name]
        o, R = self._frame(idx)
        return o + (R @ local[:, None])[..., 0]

    def body_frames(self, name):
        idx, tfix = self.chain.body_anchor[name]
        o, R = self._frame(idx)
        return o + (R @ tfix[:, None])[..., 0], R

    def wrap_world(self, name):
        idx, center, axis = self.chain.wrap_anchor[name]
        o, R = self._frame(idx)
        cw = o + (R @ center[:, None])[..., 0]
        return cw, (None if axis is None else (R @ axis[:, None])[..., 0])

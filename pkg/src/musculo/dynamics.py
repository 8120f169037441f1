"""Forward dynamics: muscle-driven articulated trees with penalty ground contact.

One control step runs control_dt/physics_dt physics substeps.  Each substep
advances activations, recomputes muscle geometry, maps tensions through
moment arms to joint torques, adds joint springs and gravity, and integrates
semi-implicitly (velocity first, then position).

Damping terms (joint dampers, contact normal damping, regularized friction)
enter the velocity update implicitly: the substep solves
(M + dt D) v' = M v + dt (tau - bias), which keeps the stiff penalty contact
stable at 240 Hz without an impulse solver.  Friction is linearized around
the incoming slip velocity with a tanh saturation at slip speed
config.slip_tolerance; if the implicit solution turns a contact tensile, that
contact is dropped and the solve repeated once.

The floating base uses 3 prismatic + 3 revolute internal coordinates on the
root; the exposed orientation matrix is rebuilt from those angles through a
polar projection so it stays orthonormal over long episodes.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .chain import euler_to_matrix, rodrigues
from .model import Model, Pose
from .muscles import MuscleState, _force_scalars, step_activation
from .routing import moment_arms_batch

_EX = np.array([1.0, 0.0, 0.0])
_EY = np.array([0.0, 1.0, 0.0])
_EZ = np.array([0.0, 0.0, 1.0])


class SimulationError(RuntimeError):
    """Raised when integration produces a non-finite quantity."""

    def __init__(self, quantity, time):
        self.quantity = quantity
        self.time = time
        super().__init__(f"non-finite {quantity} at t = {time:.6f} s")


@dataclass(frozen=True)
class SimConfig:
    physics_dt: float = 1.0 / 240.0
    control_dt: float = 1.0 / 40.0
    gravity: tuple = (0.0, 0.0, -9.81)
    contact_stiffness: float = 2.0e4
    contact_damping: float = 150.0
    friction: float = 1.0
    slip_tolerance: float = 1e-3

    def __post_init__(self):
        if self.physics_dt <= 0 or self.control_dt <= 0:
            raise ValueError("physics_dt and control_dt must be > 0")
        ratio = self.control_dt / self.physics_dt
        if abs(ratio - round(ratio)) > 1e-9 * ratio or round(ratio) < 1:
            raise ValueError("control_dt must be an integer multiple of physics_dt")
        if self.contact_stiffness < 0 or self.contact_damping < 0 or self.friction < 0:
            raise ValueError("contact parameters must be >= 0")
        if self.slip_tolerance <= 0:
            raise ValueError("slip_tolerance must be > 0")

    @property
    def substeps(self) -> int:
        return int(round(self.control_dt / self.physics_dt))

    @property
    def gravity_vector(self) -> np.ndarray:
        return np.asarray(self.gravity, dtype=float)


@dataclass
class SimState:
    """Full simulator state between control steps.

    Root coordinates are stored as internal position/euler-angle pairs even
    for fixed-base models (where they are ignored).  Muscle lengths and
    velocities are normalized by rest length.
    """

    joint_angles: np.ndarray
    joint_velocities: np.ndarray
    root_position: np.ndarray
    root_euler: np.ndarray
    root_velocity: np.ndarray
    root_euler_rate: np.ndarray
    activations: np.ndarray
    muscle_lengths: np.ndarray
    muscle_velocities: np.ndarray
    contact_flags: np.ndarray
    time: float = 0.0

    @property
    def pose(self) -> Pose:
        return Pose(self.joint_angles.copy(), self.joint_velocities.copy())

    @property
    def root_rotation(self) -> np.ndarray:
        return euler_to_matrix(self.root_euler)

    @property
    def root_angular_velocity(self) -> np.ndarray:
        a, b, _ = self.root_euler
        da, db, dc = self.root_euler_rate
        Ry = rodrigues(_EY, b)
        return db * _EY + da * (Ry @ _EX) + dc * (Ry @ rodrigues(_EX, a) @ _EZ)

    def muscle_state(self, index) -> MuscleState:
        return MuscleState(activation=float(self.activations[index]),
                           length=float(self.muscle_lengths[index]),
                           velocity=float(self.muscle_velocities[index]))

    def copy(self) -> "SimState":
        return SimState(*(np.array(x) for x in (
            self.joint_angles, self.joint_velocities, self.root_position,
            self.root_euler, self.root_velocity, self.root_euler_rate,
            self.activations, self.muscle_lengths, self.muscle_velocities,
            self.contact_flags)), time=self.time)


def _chain_for(model: Model):
    return model.chain_float if model.root.floating else model.chain_fixed


def _refresh_derived(model: Model, state: SimState, config: SimConfig) -> None:
    """Recompute reported muscle kinematics and contact flags at the state."""
    P = len(model.muscles)
    if P:
        paths = [m.path for m in model.muscles]
        pose = Pose(state.joint_angles, state.joint_velocities)
        arms, _, lengths = moment_arms_batch(model, pose, paths)
        rest = model.muscle_arrays["rest_length"]
        tendon = model.muscle_arrays["tendon_length"]
        state.muscle_lengths = (lengths - tendon) / rest
        state.muscle_velocities = (arms @ state.joint_velocities) / rest
    flags = np.zeros(len(model.contact_sites), dtype=bool)
    if len(model.contact_sites):
        ch = _chain_for(model)
        q = ch.pack(state.joint_angles, state.root_position, state.root_euler)
        qd = ch.pack(state.joint_velocities, state.root_velocity,
                     state.root_euler_rate)
        fr = ch.fk(q)
        for i, name in enumerate(model.contact_sites):
            p = fr.site_position(name)
            if p[2] >= 0.0:
                continue
            vz = fr.point_velocity(model.site(name).body, p, qd)[2]
            flags[i] = (config.contact_stiffness * (-p[2])
                        - config.contact_damping * vz) > 0.0
    state.contact_flags = flags


def default_state(model: Model, config: SimConfig | None = None) -> SimState:
    """Resting state: default pose, zero velocities, root at authored offset."""
    config = config or SimConfig()
    J = len(model.joints)
    P = len(model.muscles)
    state = SimState(
        joint_angles=model.joint_default.copy(),
        joint_velocities=np.zeros(J),
        root_position=np.array(model.root.offset, dtype=float),
        root_euler=np.zeros(3),
        root_velocity=np.zeros(3),
        root_euler_rate=np.zeros(3),
        activations=np.zeros(P),
        muscle_lengths=np.ones(P),
        muscle_velocities=np.zeros(P),
        contact_flags=np.zeros(len(model.contact_sites), dtype=bool),
        time=0.0)
    _refresh_derived(model, state, config)
    return state


def perturbed_state(model: Model, rng: np.random.Generator,
                    config: SimConfig | None = None) -> SimState:
    """Default state with joints drawn uniformly from 1/5 of each range,
    centered on the default angle and clipped to the range."""
    state = default_state(model, config)
    lo, hi = model.joint_lower, model.joint_upper
    half = (hi - lo) / 10.0
    draw = rng.uniform(model.joint_default - half, model.joint_default + half)
    state.joint_angles = np.clip(draw, lo, hi)
    _refresh_derived(model, state, config or SimConfig())
    return state


def center_of_mass(model: Model, state: SimState,
                   config: SimConfig | None = None) -> tuple:
    """World center-of-mass position and velocity of the whole model."""
    config = config or SimConfig()
    ch = _chain_for(model)
    q = ch.pack(state.joint_angles, state.root_position, state.root_euler)
    qd = ch.pack(state.joint_velocities, state.root_velocity,
                 state.root_euler_rate)
    terms = ch.dynamics_terms(q, qd, config.gravity_vector)
    return terms["com"].copy(), terms["com_velocity"].copy()


def contact_forces(model: Model, frames, velocities, config: SimConfig) -> np.ndarray:
    """Ground reaction force at each contact site (model.contact_sites order).

    Normal: stiffness * penetration - damping * vertical velocity, clamped
    at zero.  Tangential: opposes slip, magnitude mu * normal saturated by
    tanh(|v_t| / slip_tolerance).
    """
    vel = np.asarray(velocities, dtype=float)
    forces = np.zeros((len(model.contact_sites), 3))
    for i, name in enumerate(model.contact_sites):
        p = frames.site_position(name)
        if p[2] >= 0.0:
            continue
        normal = config.contact_stiffness * (-p[2]) - config.contact_damping * vel[i, 2]
        if normal <= 0.0:
            continue
        forces[i, 2] = normal
        vt = vel[i, :2]
        speed = float(np.hypot(vt[0], vt[1]))
        if speed > 0.0:
            mag = config.friction * normal * np.tanh(speed / config.slip_tolerance)
            forces[i, :2] = -mag * vt / speed
    return forces


def _check_finite(name, arr, time):
    if not np.all(np.isfinite(arr)):
        raise SimulationError(name, time)


def step(model: Model, state: SimState, excitations, config: SimConfig) -> SimState:
    """Advance one control step (substeps * physics_dt seconds).

    Returns a new SimState; the input is not modified.  Excitations are
    clamped to [0, 1].
    """
    P = len(model.muscles)
    u = np.clip(np.asarray(excitations, dtype=float).reshape(-1), 0.0, 1.0)
    if u.shape != (P,):
        raise ValueError(f"expected {P} excitations, got {u.shape[0]}")
    _check_finite("excitations", u, state.time)

    ch = _chain_for(model)
    nq = ch.nq
    J = len(model.joints)
    dt = config.physics_dt
    gravity = config.gravity_vector
    paths = [m.path for m in model.muscles]
    rest = model.muscle_arrays["rest_length"]
    tendon = model.muscle_arrays["tendon_length"]
    peak = model.muscle_arrays["peak_force"]
    vmax = model.muscle_arrays["vmax"]
    fv_max = model.muscle_arrays["fv_max"]
    lo, hi = model.joint_lower, model.joint_upper

    out = state.copy()
    qj, vj = out.joint_angles, out.joint_velocities
    act = out.activations
    time = state.time

    for _ in range(config.substeps):
        for i, m in enumerate(model.muscles):
            act[i] = step_activation(act[i], u[i], dt, m.params)

        if P:
            pose = Pose(qj, vj)
            arms, _, lengths = moment_arms_batch(model, pose, paths)
            l_norm = (lengths - tendon) / rest
            v_norm = (arms @ vj) / rest
            tensions = _force_scalars(act, l_norm, v_norm, peak, vmax, fv_max)
            tau_joint = -(arms.T @ tensions)
        else:
            tau_joint = np.zeros(J)
        tau_joint = tau_joint - model.joint_stiffness * (qj - model.joint_default)

        q = ch.pack(qj, out.root_position, out.root_euler)
        qd = ch.pack(vj, out.root_velocity, out.root_euler_rate)
        terms = ch.dynamics_terms(q, qd, gravity)
        M, bias, fr = terms["mass_matrix"], terms["bias"], terms["frames"]

        tau = np.zeros(nq)
        if J:
            tau[ch.joint_dof] = tau_joint
        D = np.zeros((nq, nq))
        if J:
            D[ch.joint_dof, ch.joint_dof] += model.joint_damping

        contacts = []  # (elastic torque, damping block, jacobian, penetration)
        for name in model.contact_sites:
            p = fr.site_position(name)
            z = float(p[2])
            if z >= 0.0:
                continue
            Jp = fr.point_jacobian(model.site(name).body, p)
            pv = Jp @ qd
            n0 = max(0.0, config.contact_stiffness * (-z)
                     - config.contact_damping * float(pv[2]))
            speed = float(np.hypot(pv[0], pv[1]))
            if speed > 1e-12:
                c_t = config.friction * n0 * np.tanh(speed / config.slip_tolerance) / speed
            else:
                c_t = config.friction * n0 / config.slip_tolerance
            # the k*dt term evaluates the spring at the end-of-step position
            # (z + dt*vz'), which keeps hard impacts from pumping energy; the
            # static force law is unchanged
            C = np.diag([c_t, c_t, config.contact_damping
                         + config.contact_stiffness * dt])
            tau_el = Jp.T @ (_EZ * (config.contact_stiffness * (-z)))
            Dc = Jp.T @ C @ Jp
            contacts.append((tau_el, Dc, Jp, z))
            tau = tau + tau_el
            D = D + Dc

        if nq:
            rhs = M @ qd + dt * (tau - bias)
            v_new = np.linalg.solve(M + dt * D, rhs)
            # a contact whose implicit normal force came out tensile exerts
            # nothing this substep: drop it and solve once more
            dropped = False
            for tau_el, Dc, Jp, z in contacts:
                vz = float((Jp @ v_new)[2])
                n_impl = (config.contact_stiffness * (-z - dt * vz)
                          - config.contact_damping * vz)
                if n_impl < -1e-12:
                    tau = tau - tau_el
                    D = D - Dc
                    dropped = True
            if dropped:
                rhs = M @ qd + dt * (tau - bias)
                v_new = np.linalg.solve(M + dt * D, rhs)
        else:
            v_new = qd

        q_new = q + dt * v_new
        if J:
            # Joints that would pass a range stop get an impulsive constraint
            # solved through the mass matrix, so the reaction propagates to
            # the rest of the tree (zeroing the coordinate alone would kick
            # the conjugate momentum of every coupled dof, the root included).
            jd = np.asarray(ch.joint_dof)
            for _ in range(8):
                qt, vt = q_new[jd], v_new[jd]
                bad = ((qt < lo) & (vt < 0.0)) | ((qt > hi) & (vt > 0.0))
                if not bad.any():
                    break
                idx = jd[bad]
                cols = np.linalg.solve(M, np.eye(nq)[:, idx])
                lam = np.linalg.solve(cols[idx], -v_new[idx])
                v_new = v_new + cols @ lam
                q_new = q + dt * v_new
            qj = np.clip(q_new[jd], lo, hi)
            vj = v_new[jd].copy()
        if ch.floating:
            out.root_position = q_new[0:3]
            out.root_euler = q_new[[4, 3, 5]]   # chain dof order is y, x, z
            out.root_velocity = v_new[0:3]
            out.root_euler_rate = v_new[[4, 3, 5]]
        time += dt
        _check_finite("joint angles", qj, time)
        _check_finite("joint velocities", vj, time)
        _check_finite("root state", np.concatenate([out.root_position, out.root_euler]),
                      time)

    out.joint_angles, out.joint_velocities = qj, vj
    out.activations = act
    out.time = time
    _refresh_derived(model, out, config)
    return out


def mechanical_energy(model: Model, state: SimState, config: SimConfig) -> dict:
    """Kinetic, gravitational, and joint-spring energy at a state.

    Gravitational zero level is world z = 0.  Returns a dict with the three
    parts and their sum under "total"."""
    ch = _chain_for(model)
    q = ch.pack(state.joint_angles, state.root_position, state.root_euler)
    qd = ch.pack(state.joint_velocities, state.root_velocity, state.root_euler_rate)
    terms = ch.dynamics_terms(q, qd, config.gravity_vector)
    kinetic = 0.5 * float(qd @ terms["mass_matrix"] @ qd)
    gravitational = -ch.total_mass * float(config.gravity_vector @ terms["com"])
    dq = state.joint_angles - model.joint_default
    spring = 0.5 * float(model.joint_stiffness @ (dq * dq))
    return {"kinetic": kinetic, "gravitational": gravitational, "spring": spring,
            "total": kinetic + gravitational + spring}


class TrajectoryLog:
    """Row-per-control-step record of a simulation, writable as CSV.

    Columns: time, root coordinates (floating models), joint angles and
    velocities, per-muscle excitation/activation/length/force, contact flags.
    """

    def __init__(self, model: Model):
        self.model = model
        self.floating = model.root.floating
        cols = ["time"]
        if self.floating:
            cols += ["root_x", "root_y", "root_z", "root_rx", "root_ry", "root_rz"]
            cols += ["root_vx", "root_vy", "root_vz",
                     "root_rxd", "root_ryd", "root_rzd"]
        cols += [f"q_{j.name}" for j in model.joints]
        cols += [f"v_{j.name}" for j in model.joints]
        for m in model.muscles:
            cols += [f"u_{m.name}", f"act_{m.name}", f"len_{m.name}", f"force_{m.name}"]
        cols += [f"contact_{s}" for s in model.contact_sites]
        self.columns = cols
        self.rows = []

    def append(self, state: SimState, excitations) -> None:
        u = np.clip(np.asarray(excitations, dtype=float).reshape(-1), 0.0, 1.0)
        ma = self.model.muscle_arrays
        forces = _force_scalars(state.activations, state.muscle_lengths,
                                state.muscle_velocities, ma["peak_force"],
                                ma["vmax"], ma["fv_max"]) if len(u) else np.zeros(0)
        row = [state.time]
        if self.floating:
            row += list(state.root_position) + list(state.root_euler)
            row += list(state.root_velocity) + list(state.root_euler_rate)
        row += list(state.joint_angles) + list(state.joint_velocities)
        for i in range(len(self.model.muscles)):
            row += [u[i], state.activations[i], state.muscle_lengths[i], forces[i]]
        row += [int(f) for f in state.contact_flags]
        self.rows.append(row)

    def write(self, fileobj) -> None:
        writer = csv.writer(fileobj, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([x if isinstance(x, int) else repr(float(x)) for x in row])

    def column(self, name) -> np.ndarray:
        idx = self.columns.index(name)
        return np.array([row[idx] for row in self.rows], dtype=float)

"""Marker-clip processing: selection, imputation, IK retargeting, cyclic clips.

Clips are 240 Hz marker coordinate arrays with a presence mask; dropouts are
NaN in CSV form.  The pipeline selects usable intervals, fills gaps with a
pluggable imputer (cubic spline baseline), retargets clips to joint
trajectories by batch gradient-descent IK over shared marker attachments and
per-frame poses, infers joint velocities by forward differences, and builds
seamless cyclic reference clips for the tracking task.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import seeding
from .model import Model, ModelError, Pose

STANDARD_MARKERS = (
    "head", "spine",
    "r_breast", "l_breast", "r_hip", "l_hip", "r_knee", "l_knee",
    "r_ankle", "l_ankle", "r_mtp", "l_mtp", "r_toe", "l_toe",
)

# pseudo-Huber scale for the marker distance: exactly zero at a perfect fit,
# quadratic below ~1 mm so gradient descent settles instead of zigzagging
_SMOOTH_EPS = 1e-3


class MocapError(ValueError):
    pass


class IKDivergenceError(RuntimeError):
    """IK made no progress while the gradient was still significant."""

    def __init__(self, iteration, loss, grad_norm):
        self.iteration = iteration
        self.loss = loss
        self.grad_norm = grad_norm
        super().__init__(
            f"IK stalled at iteration {iteration}: loss {loss:.6g}, "
            f"gradient norm {grad_norm:.3g}, no step length decreased the loss")


@dataclass
class Clip:
    """Marker coordinates over time with a per-entry presence mask."""

    rate: float
    markers: tuple
    data: np.ndarray   # (T, M, 3)
    mask: np.ndarray   # (T, M) bool

    def __post_init__(self):
        self.markers = tuple(self.markers)
        self.data = np.asarray(self.data, dtype=float)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.rate <= 0:
            raise MocapError("rate must be > 0")
        T, M = self.mask.shape
        if self.data.shape != (T, M, 3):
            raise MocapError(f"data shape {self.data.shape} does not match mask {self.mask.shape}")
        if len(self.markers) != M:
            raise MocapError("marker name count does not match data")
        if not np.all(np.isfinite(self.data[self.mask])):
            raise MocapError("non-finite coordinates at present entries")

    @property
    def frames(self) -> int:
        return self.data.shape[0]

    @property
    def duration(self) -> float:
        return self.data.shape[0] / self.rate

    def copy(self) -> "Clip":
        return Clip(self.rate, self.markers, self.data.copy(), self.mask.copy())

    def window(self, start, end) -> "Clip":
        return Clip(self.rate, self.markers, self.data[start:end].copy(),
                    self.mask[start:end].copy())


@dataclass(frozen=True)
class MarkerAttachment:
    marker: str
    body: str
    offset: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=float))


@dataclass
class Trajectory:
    """Joint-space motion at a fixed rate, with root placement per frame."""

    rate: float
    joint_names: tuple
    angles: np.ndarray            # (T, J)
    velocities: np.ndarray | None = None
    root_position: np.ndarray | None = None   # (T, 3)
    root_euler: np.ndarray | None = None      # (T, 3)

    def __post_init__(self):
        self.joint_names = tuple(self.joint_names)
        self.angles = np.atleast_2d(np.asarray(self.angles, dtype=float))
        T = self.angles.shape[0]
        if self.velocities is not None:
            self.velocities = np.asarray(self.velocities, dtype=float)
        if self.root_position is None:
            self.root_position = np.zeros((T, 3))
        else:
            self.root_position = np.asarray(self.root_position, dtype=float)
        if self.root_euler is None:
            self.root_euler = np.zeros((T, 3))
        else:
            self.root_euler = np.asarray(self.root_euler, dtype=float)

    @property
    def frames(self) -> int:
        return self.angles.shape[0]

    def copy(self) -> "Trajectory":
        return Trajectory(self.rate, self.joint_names, self.angles.copy(),
                          None if self.velocities is None else self.velocities.copy(),
                          self.root_position.copy(), self.root_euler.copy())


# -- interval selection --------------------------------------------------------

def select_interval(clip: Clip, min_markers: int = 10, min_duration: float = 1.0):
    """Longest contiguous frame window with at least min_markers present.

    Returns a half-open (start, end) pair, or None when no window lasts
    min_duration seconds.  Ties go to the earliest window.
    """
    ok = clip.mask.sum(axis=1) >= min_markers
    need = min_duration * clip.rate
    best = None
    start = None
    for i, good in enumerate(np.append(ok, False)):
        if good and start is None:
            start = i
        elif not good and start is not None:
            length = i - start
            if length + 1e-9 >= need and (best is None or length > best[1] - best[0]):
                best = (start, i)
            start = None
    return best


# -- imputation ----------------------------------------------------------------

def cubic_spline_imputer(t_present, values, t_query):
    """Natural cubic spline through present samples, constant beyond the ends."""
    t_present = np.asarray(t_present, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(t_present) == 1:
        return np.full(len(t_query), values[0])
    spline = CubicSpline(t_present, values, bc_type="natural")
    clipped = np.clip(t_query, t_present[0], t_present[-1])
    return spline(clipped)


def zoh_imputer(t_present, values, t_query):
    """Zero-order hold: last present value, first value before any sample."""
    t_present = np.asarray(t_present, dtype=float)
    values = np.asarray(values, dtype=float)
    idx = np.searchsorted(t_present, np.asarray(t_query, dtype=float), side="right") - 1
    return values[np.clip(idx, 0, len(values) - 1)]


def impute(clip: Clip, imputer=cubic_spline_imputer) -> Clip:
    """Fill every masked-out entry; present entries are preserved bitwise."""
    out = clip.copy()
    t = np.arange(clip.frames, dtype=float) / clip.rate
    for m, name in enumerate(clip.markers):
        present = clip.mask[:, m]
        if not present.any():
            raise MocapError(f"marker '{name}' is never observed")
        missing = ~present
        if not missing.any():
            continue
        for axis in range(3):
            out.data[missing, m, axis] = imputer(
                t[present], clip.data[present, m, axis], t[missing])
    out.mask[:] = True
    if not np.all(np.isfinite(out.data)):
        raise MocapError("imputer produced non-finite values")
    return out


def evaluate_imputer(clip: Clip, imputer=cubic_spline_imputer, mask_prob: float = 0.1,
                     segment_len: int = 100, seed: int = 0) -> float:
    """Masking protocol: per 100-frame segment, hide present entries with
    probability mask_prob, impute, and report the mean Euclidean error on the
    hidden entries.  Deterministic for a fixed seed."""
    if clip.frames < segment_len:
        raise MocapError(f"clip shorter than one {segment_len}-frame segment")
    errors = []
    for s in range(clip.frames // segment_len):
        seg = clip.window(s * segment_len, (s + 1) * segment_len)
        rng = seeding.stream(seed, "impute-eval", str(s))
        hide = seg.mask & (rng.random(seg.mask.shape) < mask_prob)
        # keep every marker observable at least once in the segment
        for m in range(len(seg.markers)):
            kept = seg.mask[:, m] & ~hide[:, m]
            if seg.mask[:, m].any() and not kept.any():
                first = int(np.argmax(seg.mask[:, m]))
                hide[first, m] = False
        if not hide.any():
            continue
        masked = seg.copy()
        masked.mask &= ~hide
        filled = impute(masked, imputer)
        diff = filled.data[hide] - seg.data[hide]
        errors.append(np.linalg.norm(diff, axis=-1))
    if not errors:
        return 0.0
    return float(np.concatenate(errors).mean())


def rescale(clip: Clip, factor: float) -> Clip:
    if not (factor > 0):
        raise MocapError("rescale factor must be > 0")
    out = clip.copy()
    out.data = out.data * factor
    return out


# -- inverse kinematics --------------------------------------------------------

def attachments_from_model(model: Model, markers) -> list:
    """Initial attachments from model sites sharing the marker names."""
    out = []
    for name in markers:
        site = model.site(name)   # raises ModelError if absent
        out.append(MarkerAttachment(name, site.body, site.local_position.copy()))
    return out


@dataclass
class IKResult:
    attachments: list
    trajectories: list
    final_loss: float
    loss_history: np.ndarray
    clamp_report: dict = field(default_factory=dict)
    iterations: int = 0


def _ik_chain(model: Model):
    return model.chain_float if model.root.floating else model.chain_fixed


def _marker_groups(model, chain, attachments, markers):
    """Group attachment indices by anchor dof for batched evaluation."""
    groups = {}
    order = {name: i for i, name in enumerate(markers)}
    for a_idx, att in enumerate(attachments):
        if att.marker not in order:
            continue
        if att.body not in chain.body_anchor:
            raise ModelError(f"attachment body '{att.body}' not in model")
        k, t_fix = chain.body_anchor[att.body]
        groups.setdefault(k, []).append((a_idx, order[att.marker], np.asarray(t_fix)))
    return groups


def _ik_loss_grad(model, chain, clips, Qs, offsets, groups, weight, s_pose,
                  want_grad=True):
    """Smoothed mean marker distance plus pose regularizer, with gradients."""
    total = 0.0
    count = 0
    grad_off = np.zeros_like(offsets) if want_grad else None
    grad_Qs = [np.zeros_like(Q) for Q in Qs] if want_grad else None
    reg_frames = sum(c.frames for c in clips)
    J = chain.njoints

    for ci, clip in enumerate(clips):
        count += int(clip.mask.sum())
    inv_n = 1.0 / max(count, 1)

    for ci, clip in enumerate(clips):
        Q = Qs[ci]
        bf = chain.fk_batch(Q)
        for k, entries in groups.items():
            if k >= 0:
                o_k = bf.origins[k]
                R_k = bf.rotations[k]
            else:
                o_k = bf.base_origin
                R_k = bf.base_rotation
            locs = np.stack([t_fix + offsets[a_idx] for a_idx, _, t_fix in entries])
            cols = [m_idx for _, m_idx, _ in entries]
            x = o_k[:, None, :] + np.einsum("bij,kj->bki", R_k, locs)
            y = clip.data[:, cols, :]
            w = clip.mask[:, cols].astype(float)
            r = np.where(np.isfinite(y), x - y, 0.0) * w[..., None]
            norm = np.sqrt(np.einsum("bki,bki->bk", r, r) + _SMOOTH_EPS**2)
            total += float(((norm - _SMOOTH_EPS) * w).sum())
            if not want_grad:
                continue
            rho = r / norm[..., None] * w[..., None]
            for slot, (a_idx, _, _) in enumerate(entries):
                grad_off[a_idx] += inv_n * np.einsum(
                    "bij,bi->j", R_k, rho[:, slot, :])
            if k >= 0:
                anchor_body = next(b for b, (d, _) in chain.body_anchor.items() if d == k)
                for j in chain.body_ancestors[anchor_body]:
                    a = bf.axes[j]
                    if chain.dofs[j].prismatic:
                        g = np.einsum("bki,bi->b", rho, a)
                    else:
                        lever = x - bf.origins[j][:, None, :]
                        g = np.einsum("bki,bki->b",
                                      rho, np.cross(a[:, None, :], lever))
                    grad_Qs[ci][:, j] += inv_n * g

    total *= inv_n
    # pose-anchor regularizer on the hinge coordinates only
    if weight > 0 and J:
        inv_r = 1.0 / (reg_frames * J)
        for ci, Q in enumerate(Qs):
            dq = Q[:, chain.joint_dof] - s_pose
            total += weight * inv_r * float((dq * dq).sum())
            if want_grad:
                grad_Qs[ci][:, chain.joint_dof] += 2.0 * weight * inv_r * dq
    return (total, grad_off, grad_Qs) if want_grad else total


def ik_fit(clips, model: Model, attachments=None, regularizer_weight: float = 1e-2,
           iterations: int = 200, learning_rate: float = 0.1, seed: int = 0,
           s_pose=None, initial=None) -> IKResult:
    """Joint gradient-descent fit of shared marker attachments and per-frame
    poses to one or more clips.

    The loss is the mean (smoothed) Euclidean marker distance over all
    present entries of all clips plus a squared pull of the hinge angles
    toward s_pose (the model defaults unless given).  Gradients are analytic
    through the kinematic chain; steps use backtracking line search, so the
    recorded loss history never increases.  Per-frame pose gradients are
    rescaled by the total frame count so the shared attachment block and the
    pose block advance at comparable rates (the mean over frames otherwise
    starves the per-frame parameters).  Joint ranges are enforced after the
    fit; violations are clamped and reported.

    initial: optional list of Trajectory, one per clip, seeding the
    per-frame poses (defaults to the model default pose, with the root
    translated onto the marker centroid for floating models).

    The seed is recorded for manifest reproducibility; initialization and
    updates are deterministic, so it does not influence the result.
    """
    if not clips:
        raise MocapError("need at least one clip")
    markers = clips[0].markers
    for c in clips:
        if c.markers != markers:
            raise MocapError("all clips must share one marker list")
    if attachments is None:
        attachments = attachments_from_model(model, markers)
    chain = _ik_chain(model)
    J = chain.njoints
    s_pose = model.joint_default.copy() if s_pose is None else np.asarray(s_pose, dtype=float)
    if s_pose.shape != (J,):
        raise MocapError(f"s_pose must have {J} entries")
    del seed  # reserved: initialization and updates are deterministic

    groups = _marker_groups(model, chain, attachments, markers)
    offsets = np.stack([np.asarray(a.offset, dtype=float) for a in attachments])

    Qs = []
    if initial is not None:
        if len(initial) != len(clips):
            raise MocapError("need one initial trajectory per clip")
        for clip, traj in zip(clips, initial):
            if traj.frames != clip.frames:
                raise MocapError("initial trajectory frame count differs from clip")
            Q = np.stack([
                chain.pack(traj.angles[t],
                           traj.root_position[t] if chain.floating else None,
                           traj.root_euler[t] if chain.floating else None)
                for t in range(clip.frames)])
            Qs.append(Q)
    else:
        # defaults everywhere, root translated so the model marker centroid
        # meets the data centroid frame by frame
        frames0 = model.fk(model.default_pose())
        model_centroid = np.mean([
            frames0.body_position(a.body) + frames0.body_rotation(a.body) @ a.offset
            for a in attachments], axis=0)
        for clip in clips:
            Q = np.tile(chain.pack(model.joint_default, model.root.offset, np.zeros(3)),
                        (clip.frames, 1))
            if chain.floating:
                for t in range(clip.frames):
                    present = clip.mask[t]
                    if present.any():
                        data_centroid = clip.data[t][present].mean(axis=0)
                        Q[t, 0:3] += data_centroid - model_centroid
            Qs.append(Q)

    pose_scale = float(sum(c.frames for c in clips))

    loss, g_off, g_Qs = _ik_loss_grad(model, chain, clips, Qs, offsets, groups,
                                      regularizer_weight, s_pose)
    history = [loss]
    step = float(learning_rate)
    stalls = 0
    it = 0
    for it in range(1, iterations + 1):
        gmax = max([np.max(np.abs(g_off), initial=0.0)]
                   + [pose_scale * np.max(np.abs(g), initial=0.0) for g in g_Qs])
        if gmax < 1e-12:
            break
        trial = step
        accepted = False
        for _ in range(21):
            off_t = offsets - trial * g_off
            Qs_t = [Q - trial * pose_scale * g for Q, g in zip(Qs, g_Qs)]
            loss_t = _ik_loss_grad(model, chain, clips, Qs_t, off_t, groups,
                                   regularizer_weight, s_pose, want_grad=False)
            if np.isfinite(loss_t) and loss_t <= loss:
                offsets, Qs, loss = off_t, Qs_t, loss_t
                step = trial * 2.0
                accepted = True
                break
            trial *= 0.5
        history.append(loss)
        if not accepted:
            # no step length helped: converged if the possible change is
            # below resolution, otherwise a genuine stall
            if gmax * step < 1e-10 * max(1.0, loss):
                break
            stalls += 1
            if stalls >= 10:
                raise IKDivergenceError(it, loss, gmax)
            step *= 0.5
            continue
        stalls = 0
        loss, g_off, g_Qs = _ik_loss_grad(model, chain, clips, Qs, offsets, groups,
                                          regularizer_weight, s_pose)
        history[-1] = loss

    fitted = [MarkerAttachment(a.marker, a.body, offsets[i])
              for i, a in enumerate(attachments)]
    trajectories = []
    clamped = 0
    worst = 0.0
    names = tuple(j.name for j in model.joints)
    for ci, clip in enumerate(clips):
        ang = Qs[ci][:, chain.joint_dof] if J else np.zeros((clip.frames, 0))
        low = np.maximum(ang, model.joint_lower)
        new = np.minimum(low, model.joint_upper)
        clamped += int(np.sum(new != ang))
        if ang.size:
            worst = max(worst, float(np.max(np.abs(new - ang))))
        root_p = Qs[ci][:, 0:3] if chain.floating else np.zeros((clip.frames, 3))
        # free-base rotation dofs are stored y, x, z; euler order is x, y, z
        root_e = Qs[ci][:, [4, 3, 5]] if chain.floating else np.zeros((clip.frames, 3))
        traj = Trajectory(clip.rate, names, new, None, root_p, root_e)
        trajectories.append(infer_velocities(traj))
    return IKResult(attachments=fitted, trajectories=trajectories,
                    final_loss=float(loss), loss_history=np.array(history),
                    clamp_report={"entries_clamped": clamped,
                                  "max_correction": worst},
                    iterations=it)


def markers_from_trajectory(model: Model, traj: Trajectory, attachments) -> Clip:
    """Synthesize a fully-present clip by running FK along a trajectory."""
    chain = _ik_chain(model)
    Q = np.stack([
        chain.pack(traj.angles[t],
                   traj.root_position[t] if chain.floating else None,
                   traj.root_euler[t] if chain.floating else None)
        for t in range(traj.frames)])
    bf = chain.fk_batch(Q)
    M = len(attachments)
    data = np.empty((traj.frames, M, 3))
    for i, att in enumerate(attachments):
        k, t_fix = chain.body_anchor[att.body]
        if k >= 0:
            o, R = bf.origins[k], bf.rotations[k]
        else:
            o, R = bf.base_origin, bf.base_rotation
        data[:, i, :] = o + np.einsum("bij,j->bi", R, t_fix + att.offset)
    return Clip(traj.rate, tuple(a.marker for a in attachments), data,
                np.ones((traj.frames, M), dtype=bool))


# -- velocities and cyclic clips -----------------------------------------------

def infer_velocities(traj: Trajectory) -> Trajectory:
    """Forward-difference joint velocities; the last frame repeats the
    previous value so the arrays stay aligned."""
    if traj.frames < 2:
        raise MocapError("need at least two frames to infer velocities")
    out = traj.copy()
    v = np.diff(traj.angles, axis=0) * traj.rate
    out.velocities = np.vstack([v, v[-1:]])
    return out


def make_cyclic(traj: Trajectory, period_frames: int, crossfade_frames: int,
                start: int | None = None, repeats: int = 3) -> Trajectory:
    """Cut a period-long section, smooth its tail into the next start, tile.

    The last crossfade_frames of the section are blended toward the frames
    one period earlier (the lead-in to the section start), so tiling the
    section leaves no seam.  When the trajectory is already periodic the
    blend changes nothing.  Root positions tile with the per-period
    displacement added, so locomotion keeps advancing.
    """
    T = traj.frames
    P = int(period_frames)
    cf = int(crossfade_frames)
    if P < 2 or P > T:
        raise MocapError(f"period_frames must be in [2, {T}]")
    if not (0 <= cf < P / 2):
        raise MocapError("crossfade_frames must be < period_frames / 2")
    if repeats < 1:
        raise MocapError("repeats must be >= 1")
    if start is None:
        start = (T - P) // 2
    if not (0 <= start <= T - P):
        raise MocapError("section exceeds the trajectory")

    ang = traj.angles[start:start + P].copy()
    eul = traj.root_euler[start:start + P].copy()
    pos = traj.root_position[start:start + P].copy()

    # per-period root displacement
    if start + P < T:
        disp = traj.root_position[start + P] - traj.root_position[start]
    elif P < T:
        span = traj.root_position[start + P - 1] - traj.root_position[start]
        disp = span * P / (P - 1)
    else:
        disp = np.zeros(3)

    for j in range(P - cf, P):
        w = (j - (P - cf) + 1) / (cf + 1)
        src = start + j - P
        if src >= 0:
            c_ang = traj.angles[src]
            c_eul = traj.root_euler[src]
            c_pos = traj.root_position[src] + disp
        else:
            slope_a = traj.angles[start + 1] - traj.angles[start]
            slope_e = traj.root_euler[start + 1] - traj.root_euler[start]
            slope_p = traj.root_position[start + 1] - traj.root_position[start]
            c_ang = traj.angles[start] + (j - P) * slope_a
            c_eul = traj.root_euler[start] + (j - P) * slope_e
            c_pos = traj.root_position[start] + (j - P) * slope_p + disp
        ang[j] = (1.0 - w) * ang[j] + w * c_ang
        eul[j] = (1.0 - w) * eul[j] + w * c_eul
        pos[j] = (1.0 - w) * pos[j] + w * c_pos

    out_ang = np.tile(ang, (repeats, 1))
    out_eul = np.tile(eul, (repeats, 1))
    out_pos = np.vstack([pos + k * disp for k in range(repeats)])
    out = Trajectory(traj.rate, traj.joint_names, out_ang, None, out_pos, out_eul)
    return infer_velocities(out) if out.frames >= 2 else out


# -- CSV interchange -----------------------------------------------------------

def _fmt(x) -> str:
    return repr(float(x))


def save_clip(clip: Clip, fileobj) -> None:
    writer = csv.writer(fileobj, lineterminator="\n")
    header = ["time"]
    for m in clip.markers:
        header += [f"{m}_x", f"{m}_y", f"{m}_z"]
    writer.writerow(header)
    for t in range(clip.frames):
        row = [_fmt(t / clip.rate)]
        for m in range(len(clip.markers)):
            if clip.mask[t, m]:
                row += [_fmt(v) for v in clip.data[t, m]]
            else:
                row += ["nan", "nan", "nan"]
        writer.writerow(row)


def load_clip(fileobj, rate: float | None = None) -> Clip:
    """Read a marker CSV (time,<m>_x,<m>_y,<m>_z,...); NaN marks dropouts."""
    if isinstance(fileobj, str):
        fileobj = io.StringIO(fileobj)
    reader = csv.reader(fileobj)
    try:
        header = next(reader)
    except StopIteration:
        raise MocapError("empty clip file") from None
    if not header or header[0] != "time":
        raise MocapError("clip header must start with 'time'")
    cols = header[1:]
    if len(cols) % 3 != 0:
        raise MocapError("marker columns must come in _x,_y,_z triples")
    markers = []
    for i in range(0, len(cols), 3):
        base = cols[i][:-2]
        if (cols[i], cols[i + 1], cols[i + 2]) != (f"{base}_x", f"{base}_y", f"{base}_z"):
            raise MocapError(f"bad marker column triple at '{cols[i]}'")
        markers.append(base)
    times = []
    rows = []
    for line in reader:
        if not line:
            continue
        times.append(float(line[0]))
        rows.append([float(v) for v in line[1:]])
    if not rows:
        raise MocapError("clip has no frames")
    arr = np.asarray(rows, dtype=float).reshape(len(rows), len(markers), 3)
    if rate is None:
        if len(times) < 2:
            raise MocapError("cannot infer rate from a single frame")
        rate = 1.0 / float(np.median(np.diff(times)))
    mask = np.all(np.isfinite(arr), axis=2)
    arr = np.where(mask[..., None], arr, np.nan)
    return Clip(rate, tuple(markers), arr, mask)


def save_trajectory(traj: Trajectory, fileobj) -> None:
    writer = csv.writer(fileobj, lineterminator="\n")
    header = (["time", "root_x", "root_y", "root_z", "root_rx", "root_ry", "root_rz"]
              + [f"q_{n}" for n in traj.joint_names]
              + [f"v_{n}" for n in traj.joint_names])
    writer.writerow(header)
    vel = traj.velocities if traj.velocities is not None else np.zeros_like(traj.angles)
    for t in range(traj.frames):
        row = ([_fmt(t / traj.rate)] + [_fmt(v) for v in traj.root_position[t]]
               + [_fmt(v) for v in traj.root_euler[t]]
               + [_fmt(v) for v in traj.angles[t]] + [_fmt(v) for v in vel[t]])
        writer.writerow(row)


def load_trajectory(fileobj, rate: float | None = None) -> Trajectory:
    if isinstance(fileobj, str):
        fileobj = io.StringIO(fileobj)
    reader = csv.reader(fileobj)
    try:
        header = next(reader)
    except StopIteration:
        raise MocapError("empty trajectory file") from None
    root_cols = ["root_x", "root_y", "root_z", "root_rx", "root_ry", "root_rz"]
    if header[:1] != ["time"] or header[1:7] != root_cols:
        raise MocapError("trajectory header must start with time and root columns")
    qcols = [c[2:] for c in header[7:] if c.startswith("q_")]
    vcols = [c[2:] for c in header[7:] if c.startswith("v_")]
    if qcols != vcols:
        raise MocapError("q_/v_ columns do not pair up")
    rows = [line for line in reader if line]
    if not rows:
        raise MocapError("trajectory has no frames")
    arr = np.asarray([[float(v) for v in r] for r in rows], dtype=float)
    if rate is None:
        if len(rows) < 2:
            raise MocapError("cannot infer rate from a single frame")
        rate = 1.0 / float(np.median(np.diff(arr[:, 0])))
    J = len(qcols)
    return Trajectory(rate, tuple(qcols), arr[:, 7:7 + J], arr[:, 7 + J:7 + 2 * J],
                      arr[:, 1:4], arr[:, 4:7])

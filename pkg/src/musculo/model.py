"""Articulated-model documents: parsing, validation, meshes, forward kinematics.

A model is a single UTF-8 YAML document (version "musculo-model/1") with five
sections: bodies, joints, sites, wrap_geoms, muscles.  Bodies form a tree via
parent references; hinge joints attach to a body and compose in listed order;
sites and wrap geometries are fixed in a body frame; muscles route through
site polylines with optional per-segment wrapping.

Body inertia may be authored directly (diagonal or full 3x3) or derived from
a closed triangle mesh plus a density; explicit values win when both appear.
Meshes are ASCII files of "v x y z" and "f i j k" lines with zero-based
indices.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import chain as _chainmod
from .muscles import MuscleDefinitionError, MuscleParams
from .routing import MusclePath

MODEL_VERSION = "musculo-model/1"

_AXIS_WARN = 1e-6
_AXIS_ERROR = 1e-2


class ModelError(ValueError):
    """Model document problem, carrying the offending field path."""

    def __init__(self, message, path=None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class Body:
    name: str
    parent: str | None
    offset: np.ndarray
    mass: float
    inertia: np.ndarray      # 3x3 about the center of mass, body axes
    com_offset: np.ndarray
    tags: tuple[str, ...] = ()
    floating: bool = False


@dataclass(frozen=True)
class HingeJoint:
    name: str
    body: str
    axis: np.ndarray
    range: tuple[float, float]
    stiffness: float = 0.0
    damping: float = 0.0
    default: float = 0.0


@dataclass(frozen=True)
class Site:
    name: str
    body: str
    local_position: np.ndarray
    tags: tuple[str, ...] = ()


@dataclass(frozen=True)
class WrapGeom:
    name: str
    body: str
    kind: str                # "sphere" | "cylinder"
    center: np.ndarray
    radius: float
    axis: np.ndarray | None = None


@dataclass(frozen=True)
class Muscle:
    name: str
    path: MusclePath
    params: MuscleParams


@dataclass
class Pose:
    joint_angles: np.ndarray
    joint_velocities: np.ndarray

    def __post_init__(self):
        self.joint_angles = np.asarray(self.joint_angles, dtype=float)
        self.joint_velocities = np.asarray(self.joint_velocities, dtype=float)
        if self.joint_angles.shape != self.joint_velocities.shape:
            raise ValueError("joint_angles and joint_velocities must have equal length")


@dataclass(frozen=True)
class FrameSet:
    """World placement of every body and site at one pose.

    Provides the same name-indexed accessors the routing layer expects, so a
    FrameSet can be handed to path_length directly.
    """

    body_names: tuple[str, ...]
    site_names: tuple[str, ...]
    body_positions: np.ndarray   # (B, 3)
    body_rotations: np.ndarray   # (B, 3, 3)
    site_positions: np.ndarray   # (S, 3)
    _body_index: dict = field(repr=False, default_factory=dict)
    _site_index: dict = field(repr=False, default_factory=dict)
    _chain_frames: object = field(repr=False, default=None, compare=False)

    def body_position(self, name):
        return self.body_positions[self._body_index[name]]

    def body_rotation(self, name):
        return self.body_rotations[self._body_index[name]]

    def site_position(self, name):
        return self.site_positions[self._site_index[name]]

    def wrap_world(self, name):
        return self._chain_frames.wrap_world(name)

    def validate(self, tol=1e-9):
        for i in range(len(self.body_names)):
            R = self.body_rotations[i]
            if np.max(np.abs(R.T @ R - np.eye(3))) >= tol:
                raise ValueError(f"rotation of {self.body_names[i]} not orthonormal")
            if abs(np.linalg.det(R) - 1.0) >= tol:
                raise ValueError(f"rotation of {self.body_names[i]} has det != 1")
        return True


class Model:
    """Validated, immutable articulated model."""

    def __init__(self, bodies, joints, sites, wrap_geoms, muscles, base_dir=None):
        self.bodies = list(bodies)      # topological order, root first
        self.joints = list(joints)      # document order; defines Pose layout
        self.sites = list(sites)
        self.wrap_geoms = list(wrap_geoms)
        self.muscles = list(muscles)
        self.base_dir = base_dir

        self.body_index = {b.name: i for i, b in enumerate(self.bodies)}
        self.joint_index = {j.name: i for i, j in enumerate(self.joints)}
        self.site_index = {s.name: i for i, s in enumerate(self.sites)}
        self.wrap_index = {g.name: i for i, g in enumerate(self.wrap_geoms)}
        self.muscle_index = {m.name: i for i, m in enumerate(self.muscles)}
        self.root = next(b for b in self.bodies if b.parent is None)

        self._joints_of = {b.name: [] for b in self.bodies}
        for j in self.joints:
            self._joints_of[j.body].append(j)

        self.joint_lower = np.array([j.range[0] for j in self.joints])
        self.joint_upper = np.array([j.range[1] for j in self.joints])
        self.joint_default = np.array([j.default for j in self.joints])
        self.joint_stiffness = np.array([j.stiffness for j in self.joints])
        self.joint_damping = np.array([j.damping for j in self.joints])

        self.chain_fixed = _chainmod.Chain(self, floating=False)
        self.chain_float = _chainmod.Chain(self, floating=True)

        self.contact_sites = tuple(s.name for s in self.sites if "contact" in s.tags)
        self.muscle_names = tuple(m.name for m in self.muscles)

        p = [m.params for m in self.muscles]
        self.muscle_arrays = {
            "peak_force": np.array([x.peak_force for x in p]),
            "rest_length": np.array([x.rest_length for x in p]),
            "tendon_length": np.array([x.tendon_length for x in p]),
            "tau_act": np.array([x.tau_act for x in p]),
            "tau_deact": np.array([x.tau_deact for x in p]),
            "fv_max": np.array([x.fv_max for x in p]),
            "vmax": np.array([x.vmax for x in p]),
        }

    # -- lookups ---------------------------------------------------------------

    def body(self, name) -> Body:
        try:
            return self.bodies[self.body_index[name]]
        except KeyError:
            raise ModelError(f"unknown body '{name}'") from None

    def joint(self, name) -> HingeJoint:
        try:
            return self.joints[self.joint_index[name]]
        except KeyError:
            raise ModelError(f"unknown joint '{name}'") from None

    def site(self, name) -> Site:
        try:
            return self.sites[self.site_index[name]]
        except KeyError:
            raise ModelError(f"unknown site '{name}'") from None

    def wrap_geom(self, name) -> WrapGeom:
        try:
            return self.wrap_geoms[self.wrap_index[name]]
        except KeyError:
            raise ModelError(f"unknown wrap geometry '{name}'") from None

    def muscle(self, name) -> Muscle:
        try:
            return self.muscles[self.muscle_index[name]]
        except KeyError:
            raise ModelError(f"unknown muscle '{name}'") from None

    def joints_of(self, body_name):
        return self._joints_of[body_name]

    def bodies_tagged(self, tag):
        return [b.name for b in self.bodies if tag in b.tags]

    def sites_tagged(self, tag):
        return [s.name for s in self.sites if tag in s.tags]

    def default_pose(self) -> Pose:
        return Pose(self.joint_default.copy(), np.zeros(len(self.joints)))

    def fk(self, pose: Pose, root_position=None, root_rotation=None) -> FrameSet:
        return forward_kinematics(self, pose, root_position=root_position,
                                  root_rotation=root_rotation)


def forward_kinematics(model: Model, pose: Pose, root_position=None,
                       root_rotation=None) -> FrameSet:
    """World frames of all bodies and sites at the given pose.

    Each body frame composes its parent frame, the fixed offset, and the
    body's hinge rotations in listed order.  root_position / root_rotation
    replace the root body's authored placement when given.
    """
    angles = np.asarray(pose.joint_angles, dtype=float)
    if angles.shape != (len(model.joints),):
        raise ModelError(
            f"pose has {angles.shape[0] if angles.ndim else 0} angles, "
            f"model has {len(model.joints)} joints")
    ch = model.chain_fixed
    fr = ch.fk(ch.pack(angles), root_position=root_position, root_rotation=root_rotation)
    bp = np.empty((len(model.bodies), 3))
    br = np.empty((len(model.bodies), 3, 3))
    for i, b in enumerate(model.bodies):
        bp[i], br[i] = fr.body_frame(b.name)
    sp = np.empty((len(model.sites), 3))
    for i, s in enumerate(model.sites):
        sp[i] = fr.site_position(s.name)
    return FrameSet(
        body_names=tuple(b.name for b in model.bodies),
        site_names=tuple(s.name for s in model.sites),
        body_positions=bp, body_rotations=br, site_positions=sp,
        _body_index={b.name: i for i, b in enumerate(model.bodies)},
        _site_index={s.name: i for i, s in enumerate(model.sites)},
        _chain_frames=fr)


# -- mesh handling -------------------------------------------------------------

def load_mesh(text: str):
    """Parse an ASCII triangle mesh ("v x y z" / "f i j k", zero-based)."""
    verts = []
    tris = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "v" and len(parts) == 4:
            try:
                verts.append([float(x) for x in parts[1:]])
            except ValueError:
                raise MeshError(f"line {lineno}: bad vertex coordinates") from None
        elif parts[0] == "f" and len(parts) == 4:
            try:
                tris.append([int(x) for x in parts[1:]])
            except ValueError:
                raise MeshError(f"line {lineno}: bad face indices") from None
        else:
            raise MeshError(f"line {lineno}: expected 'v x y z' or 'f i j k'")
    v = np.asarray(verts, dtype=float)
    t = np.asarray(tris, dtype=int)
    if len(v) == 0 or len(t) == 0:
        raise MeshError("mesh has no vertices or no faces")
    if t.min() < 0 or t.max() >= len(v):
        raise MeshError("face index out of range (indices are zero-based)")
    return v, t


@dataclass(frozen=True)
class MeshInertia:
    volume: float
    mass: float
    com: np.ndarray
    inertia: np.ndarray   # about com


def _check_closed(triangles):
    seen = set()
    for a, b, c in triangles:
        if a == b or b == c or a == c:
            raise MeshError(f"degenerate triangle ({a},{b},{c})")
        for e in ((a, b), (b, c), (c, a)):
            if e in seen:
                raise MeshError(f"inconsistent orientation: edge {e} repeated")
            seen.add(e)
    for e in seen:
        if (e[1], e[0]) not in seen:
            raise MeshError(f"open mesh: boundary edge {e}")


def mesh_inertia(vertices, triangles, density=1.0) -> MeshInertia:
    """Volume, mass, center of mass, and inertia of a closed triangle mesh.

    Signed-tetrahedron decomposition against the origin; orientation is
    fixed automatically if the mesh is consistently inward-facing.
    """
    if density <= 0:
        raise MeshError("density must be > 0")
    v = np.asarray(vertices, dtype=float)
    t = np.asarray(triangles, dtype=int)
    _check_closed(t)
    a, b, c = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    if np.any(np.linalg.norm(np.cross(b - a, c - a), axis=1) < 1e-14):
        raise MeshError("degenerate (zero-area) triangle")
    d = np.einsum("ij,ij->i", a, np.cross(b, c))  # 6 * signed tet volume
    volume = float(np.sum(d) / 6.0)
    if volume < 0:
        t = t[:, ::-1]
        a, b, c = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
        d = np.einsum("ij,ij->i", a, np.cross(b, c))
        volume = float(np.sum(d) / 6.0)
    if volume <= 1e-14:
        raise MeshError("mesh encloses no volume")
    moment = np.sum(d[:, None] * (a + b + c), axis=0) / 24.0
    com = moment / volume
    # second moments: map the canonical tet through A = [a b c] columns
    A = np.stack([a, b, c], axis=-1)
    C0 = (np.ones((3, 3)) + np.eye(3)) / 120.0
    C = np.einsum("n,nij,jk,nlk->il", d, A, C0, A)
    mass = density * volume
    I_origin = density * (np.trace(C) * np.eye(3) - C)
    r2 = float(com @ com)
    I_com = I_origin - mass * (r2 * np.eye(3) - np.outer(com, com))
    return MeshInertia(volume=volume, mass=mass, com=com, inertia=I_com)


# -- document parsing ----------------------------------------------------------

def _vec3(value, path):
    try:
        arr = np.array([float(x) for x in value], dtype=float)
    except (TypeError, ValueError):
        raise ModelError("expected a 3-vector", path) from None
    if arr.shape != (3,):
        raise ModelError("expected a 3-vector", path)
    if not np.all(np.isfinite(arr)):
        raise ModelError("non-finite component", path)
    return arr


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ModelError("expected a number", path)
    if not math.isfinite(value):
        raise ModelError("non-finite number", path)
    return float(value)


def _name(value, path):
    if not isinstance(value, str) or not value:
        raise ModelError("expected a non-empty name", path)
    return value


def _tags(entry, path):
    raw = entry.get("tags", [])
    if not isinstance(raw, list) or not all(isinstance(x, str) for x in raw):
        raise ModelError("tags must be a list of strings", path)
    return tuple(raw)


def _entry(value, path):
    if not isinstance(value, dict):
        raise ModelError("expected a mapping", path)
    return value


def _known_keys(entry, allowed, path):
    for k in entry:
        if k not in allowed:
            raise ModelError(f"unknown field '{k}'", path)


def _normalize_axis(raw, path):
    axis = _vec3(raw, path)
    norm = float(np.linalg.norm(axis))
    if norm < 1e-12:
        raise ModelError("axis has zero length", path)
    deviation = abs(norm - 1.0)
    if deviation >= _AXIS_ERROR:
        raise ModelError(f"axis norm {norm:.6g} too far from 1 to auto-normalize", path)
    if deviation > _AXIS_WARN:
        warnings.warn(f"{path}: axis norm {norm:.6g} normalized to 1", stacklevel=3)
    return axis / norm


def _parse_inertia(entry, mass_given, path, base_dir):
    """Resolve inertia (and possibly mass/com) per the explicit-wins rule."""
    raw = entry.get("inertia")
    mesh_info = None
    if isinstance(raw, dict):
        _known_keys(raw, {"mesh", "density"}, path)
        mesh_file = _name(raw.get("mesh"), f"{path}.mesh")
        density = _number(raw.get("density", 1000.0), f"{path}.density")
        mesh_path = Path(base_dir or ".") / mesh_file
        try:
            text = mesh_path.read_text()
        except OSError as err:
            raise ModelError(f"cannot read mesh '{mesh_file}': {err}", path) from None
        try:
            verts, tris = load_mesh(text)
            mesh_info = mesh_inertia(verts, tris, density)
        except MeshError as err:
            raise ModelError(f"mesh '{mesh_file}': {err}", path) from None
        inertia = mesh_info.inertia
    elif raw is None:
        raise ModelError("missing inertia", path)
    else:
        arr = np.asarray(raw, dtype=float)
        if arr.shape == (3,):
            inertia = np.diag(arr)
        elif arr.shape == (3, 3):
            inertia = arr
        else:
            raise ModelError("inertia must be a diagonal 3-vector, a 3x3 matrix, "
                             "or {mesh, density}", path)
    if not np.all(np.isfinite(inertia)):
        raise ModelError("non-finite inertia", path)
    if np.max(np.abs(inertia - inertia.T)) > 1e-9 * max(1.0, float(np.max(np.abs(inertia)))):
        raise ModelError("inertia must be symmetric", path)
    eig = np.linalg.eigvalsh((inertia + inertia.T) / 2.0)
    if eig.min() < -1e-9 * max(1.0, abs(eig.max())):
        raise ModelError("inertia must be positive semi-definite", path)
    return inertia, mesh_info


def load_model(text: str, base_dir=None) -> Model:
    """Parse and validate a model document; returns an immutable Model."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as err:
        mark = getattr(err, "problem_mark", None)
        where = f"line {mark.line + 1}" if mark else "document"
        raise ModelError(f"parse error at {where}: {err}") from None
    if not isinstance(doc, dict):
        raise ModelError("document must be a mapping")
    if doc.get("version") != MODEL_VERSION:
        raise ModelError(f"version must be '{MODEL_VERSION}', got {doc.get('version')!r}",
                         "version")
    _known_keys(doc, {"version", "bodies", "joints", "sites", "wrap_geoms", "muscles"},
                "document")

    def section(key):
        raw = doc.get(key, [])
        if raw is None:
            return []
        if not isinstance(raw, list):
            raise ModelError("expected a list", key)
        return raw

    # bodies
    bodies_raw = section("bodies")
    if not bodies_raw:
        raise ModelError("at least one body is required", "bodies")
    parsed_bodies = {}
    order = []
    for i, entry in enumerate(bodies_raw):
        path = f"bodies[{i}]"
        entry = _entry(entry, path)
        _known_keys(entry, {"name", "parent", "offset", "mass", "inertia", "com",
                            "tags", "floating"}, path)
        name = _name(entry.get("name"), f"{path}.name")
        if name in parsed_bodies:
            raise ModelError(f"duplicate body '{name}'", path)
        parent = entry.get("parent")
        if parent is not None:
            parent = _name(parent, f"{path}.parent")
        offset = _vec3(entry.get("offset", (0, 0, 0)), f"{path}.offset")
        inertia, mesh_info = _parse_inertia(entry, "mass" in entry, path + ".inertia",
                                            base_dir)
        if "mass" in entry:
            mass = _number(entry["mass"], f"{path}.mass")
        elif mesh_info is not None:
            mass = mesh_info.mass
        else:
            raise ModelError("missing mass", path)
        if mass <= 0:
            raise ModelError("mass must be > 0", f"{path}.mass")
        if "com" in entry:
            com = _vec3(entry["com"], f"{path}.com")
        elif mesh_info is not None:
            com = mesh_info.com
        else:
            com = np.zeros(3)
        floating = entry.get("floating", False)
        if not isinstance(floating, bool):
            raise ModelError("floating must be a boolean", f"{path}.floating")
        parsed_bodies[name] = Body(name=name, parent=parent, offset=offset, mass=mass,
                                   inertia=inertia, com_offset=com,
                                   tags=_tags(entry, f"{path}.tags"), floating=floating)
        order.append(name)

    roots = [n for n in order if parsed_bodies[n].parent is None]
    if len(roots) != 1:
        raise ModelError(f"exactly one root body required, found {len(roots)}", "bodies")
    for n in order:
        p = parsed_bodies[n].parent
        if p is not None and p not in parsed_bodies:
            raise ModelError(f"unknown parent '{p}'", f"bodies[{order.index(n)}].parent")
        if parsed_bodies[n].floating and p is not None:
            raise ModelError("only the root body may float", f"bodies[{order.index(n)}]")

    # topological order with cycle detection
    topo = []
    state = {}  # 0 visiting, 1 done

    def visit(n, trail):
        if state.get(n) == 1:
            return
        if state.get(n) == 0:
            raise ModelError(f"cycle detected through body '{n}'", "bodies")
        state[n] = 0
        p = parsed_bodies[n].parent
        if p is not None:
            visit(p, trail + [n])
        state[n] = 1
        topo.append(n)

    for n in order:
        visit(n, [])
    bodies = [parsed_bodies[n] for n in topo]

    # joints
    joints = []
    seen_joints = set()
    for i, entry in enumerate(section("joints")):
        path = f"joints[{i}]"
        entry = _entry(entry, path)
        _known_keys(entry, {"name", "body", "axis", "range", "stiffness", "damping",
                            "default"}, path)
        name = _name(entry.get("name"), f"{path}.name")
        if name in seen_joints:
            raise ModelError(f"duplicate joint '{name}'", path)
        seen_joints.add(name)
        body = _name(entry.get("body"), f"{path}.body")
        if body not in parsed_bodies:
            raise ModelError(f"unknown body '{body}'", f"{path}.body")
        axis = _normalize_axis(entry.get("axis"), f"{path}.axis")
        rng = entry.get("range")
        if not (isinstance(rng, (list, tuple)) and len(rng) == 2):
            raise ModelError("range must be [min, max]", f"{path}.range")
        lo = _number(rng[0], f"{path}.range")
        hi = _number(rng[1], f"{path}.range")
        if lo > hi:
            raise ModelError("range min must be <= max", f"{path}.range")
        stiffness = _number(entry.get("stiffness", 0.0), f"{path}.stiffness")
        damping = _number(entry.get("damping", 0.0), f"{path}.damping")
        if stiffness < 0 or damping < 0:
            raise ModelError("stiffness and damping must be >= 0", path)
        default = _number(entry.get("default", 0.0), f"{path}.default")
        if not (lo <= default <= hi):
            raise ModelError("default angle outside range", f"{path}.default")
        joints.append(HingeJoint(name=name, body=body, axis=axis, range=(lo, hi),
                                 stiffness=stiffness, damping=damping, default=default))

    # sites
    sites = []
    seen_sites = set()
    for i, entry in enumerate(section("sites")):
        path = f"sites[{i}]"
        entry = _entry(entry, path)
        _known_keys(entry, {"name", "body", "pos", "tags"}, path)
        name = _name(entry.get("name"), f"{path}.name")
        if name in seen_sites:
            raise ModelError(f"duplicate site '{name}'", path)
        seen_sites.add(name)
        body = _name(entry.get("body"), f"{path}.body")
        if body not in parsed_bodies:
            raise ModelError(f"unknown body '{body}'", f"{path}.body")
        sites.append(Site(name=name, body=body,
                          local_position=_vec3(entry.get("pos"), f"{path}.pos"),
                          tags=_tags(entry, f"{path}.tags")))

    # wrap geometries
    wraps = []
    seen_wraps = set()
    for i, entry in enumerate(section("wrap_geoms")):
        path = f"wrap_geoms[{i}]"
        entry = _entry(entry, path)
        _known_keys(entry, {"name", "body", "kind", "center", "radius", "axis"}, path)
        name = _name(entry.get("name"), f"{path}.name")
        if name in seen_wraps:
            raise ModelError(f"duplicate wrap geometry '{name}'", path)
        seen_wraps.add(name)
        body = _name(entry.get("body"), f"{path}.body")
        if body not in parsed_bodies:
            raise ModelError(f"unknown body '{body}'", f"{path}.body")
        kind = entry.get("kind")
        if kind not in ("sphere", "cylinder"):
            raise ModelError("kind must be 'sphere' or 'cylinder'", f"{path}.kind")
        radius = _number(entry.get("radius"), f"{path}.radius")
        if radius <= 0:
            raise ModelError("radius must be > 0", f"{path}.radius")
        axis = None
        if kind == "cylinder":
            if "axis" not in entry:
                raise ModelError("cylinder needs an axis", f"{path}.axis")
            axis = _normalize_axis(entry["axis"], f"{path}.axis")
        elif "axis" in entry:
            raise ModelError("sphere takes no axis", f"{path}.axis")
        wraps.append(WrapGeom(name=name, body=body, kind=kind,
                              center=_vec3(entry.get("center"), f"{path}.center"),
                              radius=radius, axis=axis))

    # muscles
    muscles = []
    seen_muscles = set()
    for i, entry in enumerate(section("muscles")):
        path = f"muscles[{i}]"
        entry = _entry(entry, path)
        _known_keys(entry, {"name", "path", "wraps", "peak_force", "length_range",
                            "operating_range", "tau", "fv_max", "vmax"}, path)
        name = _name(entry.get("name"), f"{path}.name")
        if name in seen_muscles:
            raise ModelError(f"duplicate muscle '{name}'", path)
        seen_muscles.add(name)
        site_list = entry.get("path")
        if not (isinstance(site_list, list) and len(site_list) >= 2):
            raise ModelError("path must list at least two sites", f"{path}.path")
        for s in site_list:
            if s not in seen_sites:
                raise ModelError(f"unknown site '{s}'", f"{path}.path")
        wraps_raw = entry.get("wraps", {})
        if not isinstance(wraps_raw, dict):
            raise ModelError("wraps must map segment index to geometry name",
                             f"{path}.wraps")
        wrap_map = {}
        for k, g in wraps_raw.items():
            try:
                seg = int(k)
            except (TypeError, ValueError):
                raise ModelError(f"bad segment index {k!r}", f"{path}.wraps") from None
            if not (0 <= seg < len(site_list) - 1):
                raise ModelError(f"segment index {seg} out of range", f"{path}.wraps")
            if g not in seen_wraps:
                raise ModelError(f"unknown wrap geometry '{g}'", f"{path}.wraps")
            if seg in wrap_map:
                raise ModelError(f"segment {seg} assigned twice", f"{path}.wraps")
            wrap_map[seg] = g
        tau = entry.get("tau", None)
        kwargs = {}
        if tau is not None:
            if not (isinstance(tau, (list, tuple)) and len(tau) == 2):
                raise ModelError("tau must be [tau_act, tau_deact]", f"{path}.tau")
            kwargs["tau_act"] = _number(tau[0], f"{path}.tau")
            kwargs["tau_deact"] = _number(tau[1], f"{path}.tau")
        if "fv_max" in entry:
            kwargs["fv_max"] = _number(entry["fv_max"], f"{path}.fv_max")
        if "vmax" in entry:
            kwargs["vmax"] = _number(entry["vmax"], f"{path}.vmax")
        lr = entry.get("length_range")
        rr = entry.get("operating_range")
        if not (isinstance(lr, (list, tuple)) and len(lr) == 2):
            raise ModelError("length_range must be [min, max]", f"{path}.length_range")
        if not (isinstance(rr, (list, tuple)) and len(rr) == 2):
            raise ModelError("operating_range must be [min, max]",
                             f"{path}.operating_range")
        try:
            params = MuscleParams.create(
                name, _number(entry.get("peak_force"), f"{path}.peak_force"),
                (float(lr[0]), float(lr[1])), (float(rr[0]), float(rr[1])), **kwargs)
        except MuscleDefinitionError as err:
            raise ModelError(str(err), path) from None
        muscles.append(Muscle(name=name, path=MusclePath(tuple(site_list), wrap_map),
                              params=params))

    return Model(bodies, joints, sites, wraps, muscles, base_dir=base_dir)


def load_model_file(path) -> Model:
    path = Path(path)
    return load_model(path.read_text(encoding="utf-8"), base_dir=path.parent)

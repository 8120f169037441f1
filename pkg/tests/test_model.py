"""Model loading, forward kinematics, and mesh inertia."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from musculo import desk_models
from musculo.model import (
    MeshError,
    ModelError,
    Pose,
    load_mesh,
    load_model,
    mesh_inertia,
)


# ---------------------------------------------------------------------------
# hand-rolled FK oracle: accumulate homogeneous transforms body by body

def _rot(axis, angle):
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    K = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * (K @ K)


CHAIN_DOC = """
version: musculo-model/1
bodies:
  - {name: base, mass: 1.0, inertia: [0.01, 0.01, 0.01], offset: [0.1, -0.2, 0.3]}
  - {name: upper, parent: base, offset: [0.0, 0.0, 0.4], mass: 0.8,
     inertia: [0.008, 0.008, 0.002]}
  - {name: lower, parent: upper, offset: [0.0, 0.05, 0.35], mass: 0.5,
     inertia: [0.004, 0.004, 0.001]}
joints:
  - {name: shoulder_pitch, body: upper, axis: [0, 1, 0], range: [-2.0, 2.0]}
  - {name: shoulder_yaw, body: upper, axis: [0, 0, 1], range: [-1.5, 1.5]}
  - {name: elbow, body: lower, axis: [1, 0, 0], range: [-2.5, 2.5], default: 0.3}
sites:
  - {name: tip, body: lower, pos: [0.02, 0.0, 0.3]}
  - {name: mid, body: upper, pos: [0.0, 0.1, 0.2]}
"""


def _oracle_frames(angles):
    """Site positions for CHAIN_DOC computed without the package kinematics."""
    q_sp, q_sy, q_el = angles
    p_base = np.array([0.1, -0.2, 0.3])
    R_base = np.eye(3)
    p_upper = p_base + R_base @ np.array([0.0, 0.0, 0.4])
    R_upper = R_base @ _rot([0, 1, 0], q_sp) @ _rot([0, 0, 1], q_sy)
    p_lower = p_upper + R_upper @ np.array([0.0, 0.05, 0.35])
    R_lower = R_upper @ _rot([1, 0, 0], q_el)
    return {
        "tip": p_lower + R_lower @ np.array([0.02, 0.0, 0.3]),
        "mid": p_upper + R_upper @ np.array([0.0, 0.1, 0.2]),
        "lower": p_lower,
    }


class TestForwardKinematics:
    def test_matches_transform_oracle(self):
        model = load_model(CHAIN_DOC)
        rng = np.random.default_rng(0)
        for _ in range(50):
            q = rng.uniform(-1.4, 1.4, 3)
            frames = model.fk(Pose(q, np.zeros(3)))
            oracle = _oracle_frames(q)
            for site in ("tip", "mid"):
                assert np.allclose(frames.site_position(site), oracle[site],
                                   atol=1e-9)
            assert np.allclose(frames.body_position("lower"), oracle["lower"],
                               atol=1e-9)

    def test_default_pose_uses_joint_defaults(self):
        model = load_model(CHAIN_DOC)
        pose = model.default_pose()
        by_name = dict(zip([j.name for j in model.joints], pose.joint_angles))
        assert by_name["elbow"] == 0.3
        assert by_name["shoulder_pitch"] == 0.0

    def test_rigid_equivariance(self):
        # moving the whole model by (R, t) must move every site rigidly
        model = load_model(CHAIN_DOC)
        rng = np.random.default_rng(1)
        for _ in range(20):
            q = rng.uniform(-1.0, 1.0, 3)
            t = rng.uniform(-2, 2, 3)
            R = _rot(rng.normal(size=3), rng.uniform(-3, 3))
            f0 = model.fk(Pose(q, np.zeros(3)))
            f1 = model.fk(Pose(q, np.zeros(3)), root_position=t, root_rotation=R)
            base0 = np.array([0.1, -0.2, 0.3])
            for site in ("tip", "mid"):
                moved = R @ (f0.site_position(site) - base0) + t
                assert np.allclose(f1.site_position(site), moved, atol=1e-9)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(-1.4, 1.4), min_size=3, max_size=3))
    def test_fk_finite_and_deterministic(self, q):
        model = load_model(CHAIN_DOC)
        a = model.fk(Pose(np.array(q), np.zeros(3)))
        b = model.fk(Pose(np.array(q), np.zeros(3)))
        pa, pb = a.site_position("tip"), b.site_position("tip")
        assert np.all(np.isfinite(pa))
        assert np.array_equal(pa, pb)

    def test_desk_models_load_and_validate(self):
        for text in (desk_models.pendulum_text(), desk_models.triple_chain_text(),
                     desk_models.planar_leg_text(), desk_models.neck_text()):
            model = load_model(text)
            frames = model.fk(model.default_pose())
            frames.validate()


# ---------------------------------------------------------------------------
# meshes

def _cube_obj(scale=1.0, center=(0.0, 0.0, 0.0)):
    c = np.asarray(center, dtype=float)
    verts = (np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)],
                      dtype=float) - 0.5) * scale + c
    faces = [
        (0, 1, 3), (0, 3, 2),      # x = -s/2
        (4, 6, 7), (4, 7, 5),      # x = +s/2
        (0, 4, 5), (0, 5, 1),      # y = -s/2
        (2, 3, 7), (2, 7, 6),      # y = +s/2
        (0, 2, 6), (0, 6, 4),      # z = -s/2
        (1, 5, 7), (1, 7, 3),      # z = +s/2
    ]
    lines = [f"v {v[0]} {v[1]} {v[2]}" for v in verts]
    lines += [f"f {a} {b} {c}" for a, b, c in faces]
    return "\n".join(lines)


def _icosphere(subdivisions=3, radius=1.0):
    phi = (1 + np.sqrt(5)) / 2
    verts = [
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [np.array(v, dtype=float) for v in verts]
    verts = [v / np.linalg.norm(v) for v in verts]
    for _ in range(subdivisions):
        cache = {}
        new_faces = []

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
        faces = new_faces
    return np.array(verts) * radius, np.array(faces, dtype=int)


class TestMeshInertia:
    def test_unit_cube_exact(self):
        verts, faces = load_mesh(_cube_obj())
        res = mesh_inertia(verts, faces)
        assert abs(res.volume - 1.0) < 1e-12
        assert abs(res.mass - 1.0) < 1e-12
        assert np.allclose(res.com, 0.0, atol=1e-12)
        assert np.allclose(res.inertia, np.eye(3) / 6.0, atol=1e-12)

    def test_cube_scaling_and_density(self):
        verts, faces = load_mesh(_cube_obj(scale=0.4))
        res = mesh_inertia(verts, faces, density=3.0)
        vol = 0.4 ** 3
        mass = 3.0 * vol
        assert abs(res.volume - vol) < 1e-12
        assert abs(res.mass - mass) < 1e-12
        expect = mass * (0.4 ** 2) / 6.0
        assert np.allclose(res.inertia, np.eye(3) * expect, atol=1e-12)

    def test_icosphere_near_solid_sphere(self):
        verts, faces = _icosphere(3, radius=0.7)
        res = mesh_inertia(verts, faces)
        expect = 0.4 * res.mass * 0.7 ** 2
        moments = np.diag(res.inertia)
        assert np.allclose(res.com, 0.0, atol=1e-9)
        assert np.all(np.abs(moments - expect) / expect < 0.02)

    def test_translation_moves_com_only(self):
        verts, faces = _icosphere(2, radius=0.5)
        shift = np.array([0.3, -0.7, 1.1])
        a = mesh_inertia(verts, faces)
        b = mesh_inertia(verts + shift, faces)
        assert np.allclose(b.com, a.com + shift, atol=1e-9)
        # inertia is reported about the com, so it must not change
        assert np.allclose(b.inertia, a.inertia, atol=1e-9)
        assert abs(a.volume - b.volume) < 1e-12

    def test_principal_moments_triangle_inequality(self):
        verts, faces = _icosphere(2, radius=0.5)
        stretched = verts * np.array([1.0, 0.4, 2.3])
        res = mesh_inertia(stretched, faces)
        lam = np.sort(np.linalg.eigvalsh(res.inertia))
        assert lam[0] + lam[1] >= lam[2] - 1e-12

    def test_orientation_error(self):
        bad = _cube_obj().replace("f 0 1 3", "f 0 3 1")
        verts, faces = load_mesh(bad)
        with pytest.raises(MeshError, match="orientation"):
            mesh_inertia(verts, faces)

    def test_open_mesh_error(self):
        lines = _cube_obj().splitlines()
        verts, faces = load_mesh("\n".join(lines[:-1]))
        with pytest.raises(MeshError, match="boundary"):
            mesh_inertia(verts, faces)

    def test_face_index_error_is_zero_based(self):
        text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3"
        with pytest.raises(MeshError, match="zero-based"):
            load_mesh(text)


# ---------------------------------------------------------------------------
# loader validation

class TestLoaderErrors:
    def _doc(self, **overrides):
        import yaml
        doc = yaml.safe_load(CHAIN_DOC)
        doc.update(overrides)
        return yaml.safe_dump(doc)

    def test_version_required(self):
        with pytest.raises(ModelError, match="version"):
            load_model(self._doc(version="musculo-model/9"))

    def test_duplicate_body(self):
        import yaml
        doc = yaml.safe_load(CHAIN_DOC)
        doc["bodies"].append(dict(doc["bodies"][1]))
        with pytest.raises(ModelError, match="duplicate body"):
            load_model(yaml.safe_dump(doc))

    def test_unknown_parent(self):
        import yaml
        doc = yaml.safe_load(CHAIN_DOC)
        doc["bodies"][2]["parent"] = "nope"
        with pytest.raises(ModelError, match="unknown parent"):
            load_model(yaml.safe_dump(doc))

    def test_joint_default_outside_range(self):
        import yaml
        doc = yaml.safe_load(CHAIN_DOC)
        doc["joints"][0]["default"] = 5.0
        with pytest.raises(ModelError, match="outside range"):
            load_model(yaml.safe_dump(doc))

    def test_muscle_unknown_site(self):
        import yaml
        doc = yaml.safe_load(CHAIN_DOC)
        doc["muscles"] = [{"name": "m", "path": ["tip", "nowhere"],
                           "peak_force": 10.0,
                           "length_range": [0.1, 0.2],
                           "operating_range": [0.6, 1.4]}]
        with pytest.raises(ModelError, match="unknown site"):
            load_model(yaml.safe_dump(doc))

    def test_two_roots_rejected(self):
        import yaml
        doc = yaml.safe_load(CHAIN_DOC)
        doc["bodies"].append({"name": "orphan", "mass": 1.0,
                              "inertia": [1e-3, 1e-3, 1e-3]})
        with pytest.raises(ModelError, match="one root"):
            load_model(yaml.safe_dump(doc))

    def test_non_floating_child(self):
        import yaml
        doc = yaml.safe_load(CHAIN_DOC)
        doc["bodies"][1]["floating"] = True
        with pytest.raises(ModelError, match="root body may float"):
            load_model(yaml.safe_dump(doc))

    def test_mass_positive(self):
        import yaml
        doc = yaml.safe_load(CHAIN_DOC)
        doc["bodies"][0]["mass"] = 0.0
        with pytest.raises(ModelError, match="mass"):
            load_model(yaml.safe_dump(doc))

    def test_inertia_must_be_psd(self):
        import yaml
        doc = yaml.safe_load(CHAIN_DOC)
        doc["bodies"][0]["inertia"] = [-1.0, 1.0, 1.0]
        with pytest.raises(ModelError, match="positive semi-definite"):
            load_model(yaml.safe_dump(doc))

    def test_unknown_field_rejected(self):
        import yaml
        doc = yaml.safe_load(CHAIN_DOC)
        doc["bodies"][0]["masss"] = 1.0
        with pytest.raises(ModelError, match="unknown field"):
            load_model(yaml.safe_dump(doc))

    def test_lookup_errors(self):
        model = load_model(CHAIN_DOC)
        with pytest.raises(ModelError, match="unknown body"):
            model.body("nope")
        with pytest.raises(ModelError, match="unknown site"):
            model.site("nope")

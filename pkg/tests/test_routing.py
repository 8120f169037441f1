"""Path lengths around wrap geometry and tendon-excursion moment arms."""

import numpy as np
import pytest
import yaml
from hypothesis import given, settings, strategies as st

from musculo import desk_models, routing
from musculo.model import MusclePath, Pose, load_model
from musculo.routing import (
    RoutingError,
    cylinder_wrap_lengths,
    joint_torques,
    moment_arms,
    path_length,
    path_lengths_for_poses,
    path_state,
    sphere_wrap_lengths,
    wrap_cylinder,
    wrap_sphere,
)

from wrap_oracles import cylinder_oracle, sphere_oracle


# ---------------------------------------------------------------------------
# wrapping primitives vs the independent shortest-path solver

class TestSphereWrap:
    def test_analytic_diametral_chord(self):
        # endpoints 2 m out on either side of a unit sphere: two tangents of
        # sqrt(3) plus a 60 degree arc
        exact = 2.0 * np.sqrt(3.0) + np.pi / 3.0
        length, arc, wrapped = wrap_sphere([-2, 0, 0], [2, 0, 0], [0, 0, 0], 1.0)
        assert wrapped
        assert length == pytest.approx(exact, abs=1e-12)
        assert arc == pytest.approx(np.pi / 3.0, abs=1e-12)
        assert sphere_oracle([-2, 0, 0], [2, 0, 0], [0, 0, 0], 1.0) == pytest.approx(
            exact, abs=1e-9)

    def test_clear_chord_is_straight(self):
        length, arc, wrapped = wrap_sphere([-2, 0, 1.5], [2, 0, 1.5], [0, 0, 0], 1.0)
        assert not wrapped
        assert arc == 0.0
        assert length == pytest.approx(4.0, abs=1e-12)

    def test_continuous_at_tangency(self):
        # grazing chord: wrapped and straight lengths agree at the transition
        for dz in (-1e-7, 0.0, 1e-7):
            length, _, _ = wrap_sphere([-2, 0, 1.0 + dz], [2, 0, 1.0 + dz],
                                       [0, 0, 0], 1.0)
            assert length == pytest.approx(4.0, abs=1e-6)

    def test_random_configs_match_oracle(self):
        rng = np.random.default_rng(10)
        n = 0
        while n < 60:
            c = rng.uniform(-0.5, 0.5, 3)
            r = rng.uniform(0.2, 0.9)
            p1, p2 = rng.uniform(-2.2, 2.2, (2, 3))
            if (np.linalg.norm(p1 - c) < r + 0.05
                    or np.linalg.norm(p2 - c) < r + 0.05):
                continue
            length, _, _ = wrap_sphere(p1, p2, c, r)
            assert length == pytest.approx(sphere_oracle(p1, p2, c, r), abs=1e-8)
            n += 1

    def test_endpoint_inside_rejected(self):
        with pytest.raises(RoutingError, match="inside wrap sphere"):
            wrap_sphere([0.5, 0, 0], [2, 0, 0], [0, 0, 0], 1.0)

    @settings(max_examples=150, deadline=None)
    @given(st.data())
    def test_never_shorter_than_chord(self, data):
        rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
        c = rng.uniform(-0.5, 0.5, 3)
        r = rng.uniform(0.2, 0.9)
        p1, p2 = rng.uniform(-2.2, 2.2, (2, 3))
        if (np.linalg.norm(p1 - c) < r + 0.05
                or np.linalg.norm(p2 - c) < r + 0.05):
            return
        length, arc, wrapped = wrap_sphere(p1, p2, c, r)
        chord = np.linalg.norm(p2 - p1)
        assert length >= chord - 1e-12
        if not wrapped:
            assert length == pytest.approx(chord, abs=1e-12)

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(3)
        p1 = rng.uniform(1.2, 2.0, (8, 3))
        p2 = -rng.uniform(1.2, 2.0, (8, 3))
        lens, arcs, wraps = sphere_wrap_lengths(p1, p2, np.zeros(3), 1.0)
        for i in range(8):
            l, a, wr = wrap_sphere(p1[i], p2[i], [0, 0, 0], 1.0)
            assert lens[i] == pytest.approx(l, abs=1e-15)
            assert arcs[i] == pytest.approx(a, abs=1e-15)
            assert wraps[i] == wr


class TestCylinderWrap:
    def test_planar_case_matches_sphere_geometry(self):
        # axis out of plane: reduces to the circle problem
        exact = 2.0 * np.sqrt(3.0) + np.pi / 3.0
        length, arc, wrapped = wrap_cylinder([-2, 0, 0], [2, 0, 0],
                                             [0, 0, 0], [0, 0, 1], 1.0)
        assert wrapped
        assert length == pytest.approx(exact, abs=1e-12)
        assert arc == pytest.approx(np.pi / 3.0, abs=1e-12)

    def test_axial_offset_is_unrolled_hypot(self):
        # the helical geodesic spreads axial travel along the planar path,
        # so the total is the hypot of planar length and axial rise
        planar = 2.0 * np.sqrt(3.0) + np.pi / 3.0
        length, _, _ = wrap_cylinder([-2, 0, 0], [2, 0, 0.7],
                                     [0, 0, 0], [0, 0, 1], 1.0)
        assert length == pytest.approx(np.hypot(planar, 0.7), abs=1e-12)

    def test_random_configs_match_oracle(self):
        rng = np.random.default_rng(11)
        n = 0
        while n < 40:
            c = rng.uniform(-0.3, 0.3, 3)
            w = rng.normal(size=3)
            w /= np.linalg.norm(w)
            r = rng.uniform(0.3, 0.9)
            p1, p2 = rng.uniform(-2.2, 2.2, (2, 3))
            if (np.linalg.norm(np.cross(p1 - c, w)) < r + 0.05
                    or np.linalg.norm(np.cross(p2 - c, w)) < r + 0.05):
                continue
            length, _, _ = wrap_cylinder(p1, p2, c, w, r)
            assert length == pytest.approx(cylinder_oracle(p1, p2, c, w, r),
                                           abs=1e-8)
            n += 1

    def test_axis_direction_irrelevant_up_to_sign(self):
        length1, _, _ = wrap_cylinder([-2, 0.1, 0], [2, -0.2, 0.4],
                                      [0, 0, 0], [0, 0, 1], 0.8)
        length2, _, _ = wrap_cylinder([-2, 0.1, 0], [2, -0.2, 0.4],
                                      [0, 0, 0], [0, 0, -3.0], 0.8)
        assert length1 == pytest.approx(length2, abs=1e-12)

    def test_endpoint_inside_rejected(self):
        with pytest.raises(RoutingError, match="inside wrap cylinder"):
            wrap_cylinder([0.2, 0, 5.0], [2, 0, 0], [0, 0, 0], [0, 0, 1], 1.0)

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(4)
        p1 = rng.uniform(1.2, 2.0, (6, 3))
        p2 = -rng.uniform(1.2, 2.0, (6, 3))
        lens, arcs, wraps = cylinder_wrap_lengths(p1, p2, np.zeros(3),
                                                  [0, 1, 0], 0.9)
        for i in range(6):
            l, a, wr = wrap_cylinder(p1[i], p2[i], [0, 0, 0], [0, 1, 0], 0.9)
            assert lens[i] == pytest.approx(l, abs=1e-15)
            assert arcs[i] == pytest.approx(a, abs=1e-15)
            assert wraps[i] == wr


# ---------------------------------------------------------------------------
# paths on models

PENDULUM_ARM = """
version: musculo-model/1
bodies:
  - {name: base, mass: 1.0, inertia: [0.1, 0.1, 0.1]}
  - {name: arm, parent: base, offset: [0, 0, 0], mass: 0.5,
     inertia: [0.01, 0.01, 0.01]}
joints:
  - {name: swing, body: arm, axis: [0, 1, 0], range: [-2.5, 2.5]}
sites:
  - {name: anchor, body: base, pos: [0.0, 0.0, 1.0]}
  - {name: mover, body: arm, pos: [0.6, 0.0, 0.0]}
"""


def _arm_oracle(q, d=0.6):
    """dL/dq for the straight anchor-mover line in PENDULUM_ARM."""
    p = np.array([d * np.cos(q), 0.0, -d * np.sin(q)])
    dp = np.array([-d * np.sin(q), 0.0, -d * np.cos(q)])
    rel = p - np.array([0.0, 0.0, 1.0])
    return float(rel @ dp) / float(np.linalg.norm(rel))


class TestMomentArms:
    def test_single_joint_closed_form(self):
        model = load_model(PENDULUM_ARM)
        path = MusclePath(sites=("anchor", "mover"))
        for q in (-1.7, -0.4, 0.3, 1.1, 2.2):
            arms = moment_arms(model, Pose(np.array([q]), np.zeros(1)), path)
            assert arms.values[0] == pytest.approx(_arm_oracle(q), abs=1e-8)
            assert not arms.one_sided[0]

    def test_one_sided_at_limit(self):
        model = load_model(PENDULUM_ARM)
        path = MusclePath(sites=("anchor", "mover"))
        arms = moment_arms(model, Pose(np.array([2.5]), np.zeros(1)), path)
        assert arms.one_sided[0]
        assert np.isfinite(arms.values[0])
        # one-sided difference is first order accurate, so looser tolerance
        assert arms.values[0] == pytest.approx(_arm_oracle(2.5), abs=1e-4)

    def test_unspanned_joints_exactly_zero(self):
        model = load_model(desk_models.planar_leg_text())
        muscle = model.muscle("r_knee_ext")
        pose = model.default_pose()
        arms = moment_arms(model, pose, muscle.path)
        names = [j.name for j in model.joints]
        for j, name in enumerate(names):
            if name.startswith("l_") or name in ("r_mtp", "r_toe"):
                assert arms.values[j] == 0.0

    def test_torque_sign_resists_lengthening(self):
        model = load_model(PENDULUM_ARM)
        path = MusclePath(sites=("anchor", "mover"))
        q = 1.1
        arms = moment_arms(model, Pose(np.array([q]), np.zeros(1)), path)
        tau = joint_torques(np.array([10.0]), arms.values[None, :])
        assert np.sign(tau[0]) == -np.sign(arms.values[0])
        assert tau[0] == pytest.approx(-10.0 * arms.values[0])

    def test_joint_torques_matrix_identity(self):
        rng = np.random.default_rng(5)
        A = rng.normal(size=(3, 4))
        f = rng.uniform(0, 50, 3)
        assert np.allclose(joint_torques(f, A), -(A.T @ f), atol=0)

    def test_lengthening_speed_matches_path_derivative(self):
        model = load_model(desk_models.planar_leg_text())
        muscle = model.muscle("r_knee_ext")
        rng = np.random.default_rng(6)
        lo = np.array([j.range[0] for j in model.joints])
        hi = np.array([j.range[1] for j in model.joints])
        q = rng.uniform(lo + 0.2, hi - 0.2)
        qd = rng.normal(size=q.size)
        state = path_state(model, Pose(q, qd), muscle.path)
        h = 1e-6
        lp = path_lengths_for_poses(model, muscle.path, (q + h * qd)[None, :])[0]
        lm = path_lengths_for_poses(model, muscle.path, (q - h * qd)[None, :])[0]
        assert state.lengthening_speed == pytest.approx((lp - lm) / (2 * h),
                                                        rel=1e-4, abs=1e-7)


class TestModelPaths:
    def test_patella_wrap_engages_when_knee_flexed(self):
        model = load_model(desk_models.planar_leg_text())
        muscle = model.muscle("r_knee_ext")
        pose = model.default_pose()
        q = pose.joint_angles.copy()
        names = [j.name for j in model.joints]
        q[names.index("r_knee")] = 2.0
        frames = model.fk(Pose(q, np.zeros_like(q)))
        result = path_length(model, frames, muscle.path)
        kinds = [s.kind for s in result.segments]
        assert "wrapped" in kinds
        wrapped = result.segments[kinds.index("wrapped")]
        assert wrapped.geom == "r_patella"
        assert wrapped.arc_angle > 0.05
        # straight-chord lower bound still holds for the wrapped segment
        assert result.total_length > 0.0

    def test_flexion_lengthens_extensor(self):
        model = load_model(desk_models.planar_leg_text())
        muscle = model.muscle("r_knee_ext")
        names = [j.name for j in model.joints]
        k = names.index("r_knee")
        qs = []
        for knee in (0.2, 1.0, 2.0):
            q = model.default_pose().joint_angles.copy()
            q[k] = knee
            qs.append(q)
        lens = path_lengths_for_poses(model, muscle.path, np.array(qs))
        assert lens[0] < lens[1] < lens[2]

    def test_batch_lengths_match_single_pose_eval(self):
        model = load_model(desk_models.planar_leg_text())
        muscle = model.muscle("r_ankle_push")
        rng = np.random.default_rng(8)
        lo = np.array([j.range[0] for j in model.joints])
        hi = np.array([j.range[1] for j in model.joints])
        Q = rng.uniform(lo, hi, size=(12, lo.size))
        batch = path_lengths_for_poses(model, muscle.path, Q)
        for i in range(12):
            frames = model.fk(Pose(Q[i], np.zeros_like(Q[i])))
            single = path_length(model, frames, muscle.path).total_length
            assert batch[i] == pytest.approx(single, abs=1e-12)

    def test_path_validation(self):
        with pytest.raises(RoutingError, match="two sites"):
            MusclePath(sites=("only",))
        with pytest.raises(RoutingError, match="segment"):
            MusclePath(sites=("a", "b"), wraps={5: "ball"})

    def test_multi_segment_path_additive(self):
        doc = yaml.safe_load(PENDULUM_ARM)
        doc["sites"].append({"name": "via", "body": "arm", "pos": [0.3, 0.1, 0.0]})
        model = load_model(yaml.safe_dump(doc))
        frames = model.fk(Pose(np.array([0.7]), np.zeros(1)))
        direct = path_length(model, frames, MusclePath(sites=("anchor", "mover")))
        via = path_length(model, frames, MusclePath(sites=("anchor", "via", "mover")))
        a = frames.site_position("anchor")
        b = frames.site_position("via")
        c = frames.site_position("mover")
        expect = np.linalg.norm(b - a) + np.linalg.norm(c - b)
        assert via.total_length == pytest.approx(expect, abs=1e-12)
        assert via.total_length >= direct.total_length

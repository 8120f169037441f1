"""Generators for the bundled desk-scale models.

Each function returns a model document (YAML text).  Muscle length ranges
are authored automatically: the generator loads a draft of the document,
measures the span of path lengths each muscle reaches over the joint
limits, and centers the normalized operating range on the middle of that
span.  The tendon length then solves to zero and the fiber rests at the
span midpoint, so a muscle with a large excursion (the hip muscles) gets
a long fiber and tapers toward the ends of travel, while one with a small
excursion (the wrapped knee extensor) stays near peak force everywhere.

Models:
  pendulum_text     single hinge under gravity, analytic test article
  triple_chain_text fixed-base 3-joint arm, 4 muscles, one cylinder wrap
  planar_leg_text   floating biped, 10 hinge joints, 8 muscles, contact feet
  neck_text         fixed-base S-curved neck with a beak site
"""
from __future__ import annotations

import yaml

from .model import load_model
from .muscles import calibrate_length_ranges


def _author_length_ranges(doc: dict) -> str:
    """Fill in muscle length and operating ranges from the reachable span."""
    for m in doc.get("muscles", []):
        m.setdefault("length_range", [0.01, 0.02])
        m.setdefault("operating_range", [0.5, 1.5])
    draft = yaml.safe_dump(doc, sort_keys=False)
    model = load_model(draft)
    for m in doc.get("muscles", []):
        lo, hi = calibrate_length_ranges(model, m["name"])
        if not hi > lo * 1.001:
            raise ValueError(
                f"muscle {m['name']} shows no length excursion; it cannot "
                "actuate anything")
        a, b = round(lo, 9), round(hi, 9)
        m["length_range"] = [a, b]
        m["operating_range"] = [2.0 * a / (a + b), 2.0 * b / (a + b)]
    return yaml.safe_dump(doc, sort_keys=False)


def pendulum_text(mass: float = 1.0, length: float = 0.5, damping: float = 0.0,
                  stiffness: float = 0.0) -> str:
    """Point-mass pendulum on a y-axis hinge; period 2*pi*sqrt(I/(m g d))."""
    doc = {
        "version": "musculo-model/1",
        "bodies": [
            {"name": "anchor", "mass": 0.1, "inertia": [1e-6, 1e-6, 1e-6]},
            {"name": "rod", "parent": "anchor", "offset": [0.0, 0.0, 0.0],
             "mass": mass, "inertia": [1e-8, 1e-8, 1e-8],
             "com": [0.0, 0.0, -length]},
        ],
        "joints": [
            {"name": "swing", "body": "rod", "axis": [0, 1, 0],
             "range": [-3.1, 3.1], "damping": damping, "stiffness": stiffness},
        ],
    }
    return yaml.safe_dump(doc, sort_keys=False)


def triple_chain_text() -> str:
    """Fixed-base arm: shoulder/elbow/wrist hinges, 4 muscles, elbow pulley.

    The elbow muscle runs under a cylinder at the joint center and switches
    between straight and wrapped routing inside the elbow range.
    """
    doc = {
        "version": "musculo-model/1",
        "bodies": [
            {"name": "base", "mass": 0.5, "inertia": [1e-4, 1e-4, 1e-4]},
            {"name": "link1", "parent": "base", "offset": [0.0, 0.0, 0.0],
             "mass": 0.8, "inertia": [1e-4, 6e-3, 6e-3], "com": [0.15, 0.0, 0.0]},
            {"name": "link2", "parent": "link1", "offset": [0.3, 0.0, 0.0],
             "mass": 0.5, "inertia": [1e-4, 3.75e-3, 3.75e-3], "com": [0.15, 0.0, 0.0]},
            {"name": "link3", "parent": "link2", "offset": [0.3, 0.0, 0.0],
             "mass": 0.3, "inertia": [5e-5, 1e-3, 1e-3], "com": [0.1, 0.0, 0.0]},
        ],
        "joints": [
            {"name": "shoulder", "body": "link1", "axis": [0, 1, 0],
             "range": [-1.2, 1.2], "default": 0.2, "damping": 0.05},
            {"name": "elbow", "body": "link2", "axis": [0, 1, 0],
             "range": [-2.0, 0.5], "default": -0.6, "damping": 0.05},
            {"name": "wrist", "body": "link3", "axis": [0, 1, 0],
             "range": [-1.0, 1.0], "default": 0.3, "damping": 0.05},
        ],
        "sites": [
            {"name": "s_base_top", "body": "base", "pos": [-0.03, 0.0, 0.06]},
            {"name": "s_l1_top", "body": "link1", "pos": [0.12, 0.0, 0.02]},
            {"name": "s_base_bot", "body": "base", "pos": [-0.03, 0.0, -0.06]},
            {"name": "s_l1_bot", "body": "link1", "pos": [0.12, 0.0, -0.02]},
            {"name": "s_l1_end", "body": "link1", "pos": [0.22, 0.0, -0.035]},
            {"name": "s_l2_front", "body": "link2", "pos": [0.12, 0.0, -0.035]},
            {"name": "s_l2_end", "body": "link2", "pos": [0.25, 0.0, 0.03]},
            {"name": "s_l3", "body": "link3", "pos": [0.1, 0.0, 0.03]},
        ],
        "wrap_geoms": [
            {"name": "elbow_pulley", "body": "link2", "kind": "cylinder",
             "center": [0.0, 0.0, 0.0], "axis": [0, 1, 0], "radius": 0.03},
        ],
        "muscles": [
            {"name": "shoulder_raise", "path": ["s_base_top", "s_l1_top"],
             "peak_force": 120.0},
            {"name": "shoulder_lower", "path": ["s_base_bot", "s_l1_bot"],
             "peak_force": 120.0},
            {"name": "elbow_curl", "path": ["s_l1_end", "s_l2_front"],
             "wraps": {0: "elbow_pulley"}, "peak_force": 90.0},
            {"name": "wrist_curl", "path": ["s_l2_end", "s_l3"],
             "peak_force": 60.0},
        ],
    }
    return _author_length_ranges(doc)


def planar_leg_text(floating: bool = True) -> str:
    """Planar biped: pelvis/torso/head column plus two 5-joint legs.

    Ten hinge joints (hip, knee, ankle, mtp, toe per leg), eight muscles
    with a wrapped knee extensor per leg, contact sites under each foot,
    and marker sites matching the standard 14-marker layout.
    """
    bodies = [
        {"name": "pelvis", "mass": 6.0, "inertia": [0.06, 0.06, 0.04],
         "offset": [0.0, 0.0, 0.95], "tags": ["pelvis"], "floating": floating},
        {"name": "torso", "parent": "pelvis", "offset": [0.0, 0.0, 0.15],
         "mass": 8.0, "inertia": [0.1, 0.1, 0.06], "com": [0.0, 0.0, 0.05],
         "tags": ["torso"]},
        {"name": "head", "parent": "torso", "offset": [0.05, 0.0, 0.3],
         "mass": 1.2, "inertia": [0.005, 0.005, 0.005], "tags": ["head"]},
    ]
    joints = []
    sites = [
        {"name": "head", "body": "head", "pos": [0.0, 0.0, 0.05],
         "tags": ["marker"]},
        {"name": "spine", "body": "torso", "pos": [-0.05, 0.0, 0.1],
         "tags": ["marker"]},
        # Body contacts so a fallen model rests on the ground instead of
        # sinking through it (only penalized sites are tangible).
        {"name": "keel_front", "body": "pelvis", "pos": [0.12, 0.0, -0.06],
         "tags": ["contact"]},
        {"name": "keel_back", "body": "pelvis", "pos": [-0.12, 0.0, -0.06],
         "tags": ["contact"]},
        {"name": "back", "body": "torso", "pos": [-0.1, 0.0, 0.1],
         "tags": ["contact"]},
        {"name": "crest", "body": "head", "pos": [0.06, 0.0, 0.03],
         "tags": ["contact"]},
    ]
    wrap_geoms = []
    muscles = []
    for side, sy in (("r", -1.0), ("l", 1.0)):
        y = 0.12 * sy
        bodies += [
            {"name": f"{side}_thigh", "parent": "pelvis", "offset": [0.0, y, 0.0],
             "mass": 3.0, "inertia": [0.031, 0.031, 0.002], "com": [0.0, 0.0, -0.17]},
            {"name": f"{side}_shank", "parent": f"{side}_thigh",
             "offset": [0.0, 0.0, -0.35], "mass": 1.2,
             "inertia": [0.011, 0.011, 0.001], "com": [0.0, 0.0, -0.16]},
            {"name": f"{side}_tarsus", "parent": f"{side}_shank",
             "offset": [0.0, 0.0, -0.33], "mass": 0.6,
             "inertia": [0.004, 0.004, 5e-4], "com": [0.0, 0.0, -0.12]},
            {"name": f"{side}_foot", "parent": f"{side}_tarsus",
             "offset": [0.0, 0.0, -0.25], "mass": 0.45,
             "inertia": [0.001, 0.002, 0.002], "com": [0.06, 0.0, -0.01],
             "tags": ["foot"]},
            {"name": f"{side}_toe", "parent": f"{side}_foot",
             "offset": [0.12, 0.0, -0.02], "mass": 0.15,
             "inertia": [2e-4, 2e-4, 2e-4], "com": [0.04, 0.0, 0.0]},
        ]
        joints += [
            {"name": f"{side}_hip", "body": f"{side}_thigh", "axis": [0, 1, 0],
             "range": [-1.2, 1.2], "damping": 0.5},
            {"name": f"{side}_knee", "body": f"{side}_shank", "axis": [0, 1, 0],
             "range": [0.0, 2.4], "default": 0.1, "damping": 0.4},
            {"name": f"{side}_ankle", "body": f"{side}_tarsus", "axis": [0, 1, 0],
             "range": [-1.0, 1.2], "default": -0.05, "damping": 0.3},
            {"name": f"{side}_mtp", "body": f"{side}_foot", "axis": [0, 1, 0],
             "range": [-0.9, 0.9], "damping": 0.2},
            {"name": f"{side}_toe", "body": f"{side}_toe", "axis": [0, 1, 0],
             "range": [-0.8, 0.8], "damping": 0.1},
        ]
        sites += [
            {"name": f"{side}_heel", "body": f"{side}_foot",
             "pos": [-0.03, 0.0, -0.02], "tags": ["contact"]},
            {"name": f"{side}_ball", "body": f"{side}_foot",
             "pos": [0.1, 0.0, -0.02], "tags": ["contact"]},
            {"name": f"{side}_tip", "body": f"{side}_toe",
             "pos": [0.07, 0.0, -0.005], "tags": ["contact"]},
            # muscle waypoints
            {"name": f"{side}_hipf_o", "body": "pelvis", "pos": [0.08, y, -0.02]},
            {"name": f"{side}_hipf_i", "body": f"{side}_thigh", "pos": [0.02, 0.0, -0.12]},
            {"name": f"{side}_hipe_o", "body": "pelvis", "pos": [-0.08, y, -0.02]},
            {"name": f"{side}_hipe_i", "body": f"{side}_thigh", "pos": [-0.02, 0.0, -0.12]},
            {"name": f"{side}_knee_o", "body": f"{side}_thigh", "pos": [0.045, 0.0, -0.28]},
            # patella: the extensor wraps the condyle cylinder down to this
            # point, then runs straight to the insertion.  Without the stop
            # the shortest path would slip behind the knee in deep flexion.
            {"name": f"{side}_knee_v", "body": f"{side}_shank", "pos": [0.045, 0.0, 0.02]},
            {"name": f"{side}_knee_i", "body": f"{side}_shank", "pos": [0.05, 0.0, -0.08]},
            {"name": f"{side}_ank_o", "body": f"{side}_shank", "pos": [-0.04, 0.0, -0.1]},
            {"name": f"{side}_ank_i", "body": f"{side}_tarsus", "pos": [-0.045, 0.0, -0.1]},
            # markers
            {"name": f"{side}_breast", "body": "torso", "pos": [0.08, 0.1 * sy, 0.0],
             "tags": ["marker"]},
            {"name": f"{side}_hip", "body": "pelvis", "pos": [0.0, y, 0.0],
             "tags": ["marker"]},
            {"name": f"{side}_knee", "body": f"{side}_shank", "pos": [0.0, 0.02 * sy, 0.0],
             "tags": ["marker"]},
            {"name": f"{side}_ankle", "body": f"{side}_tarsus", "pos": [0.0, 0.02 * sy, 0.0],
             "tags": ["marker"]},
            {"name": f"{side}_mtp", "body": f"{side}_foot", "pos": [0.0, 0.02 * sy, 0.0],
             "tags": ["marker"]},
            {"name": f"{side}_toe", "body": f"{side}_toe", "pos": [0.08, 0.0, 0.0],
             "tags": ["marker"]},
        ]
        wrap_geoms.append(
            {"name": f"{side}_patella", "body": f"{side}_shank", "kind": "cylinder",
             "center": [0.0, 0.0, 0.0], "axis": [0, 1, 0], "radius": 0.04})
        # hip muscles ride over the femoral head; without this the chord
        # collapses through the joint center near full flexion or extension
        wrap_geoms.append(
            {"name": f"{side}_troch", "body": f"{side}_thigh", "kind": "cylinder",
             "center": [0.0, 0.0, 0.0], "axis": [0, 1, 0], "radius": 0.045})
        muscles += [
            {"name": f"{side}_hip_flex", "path": [f"{side}_hipf_o", f"{side}_hipf_i"],
             "wraps": {0: f"{side}_troch"}, "peak_force": 600.0},
            {"name": f"{side}_hip_ext", "path": [f"{side}_hipe_o", f"{side}_hipe_i"],
             "wraps": {0: f"{side}_troch"}, "peak_force": 600.0},
            {"name": f"{side}_knee_ext",
             "path": [f"{side}_knee_o", f"{side}_knee_v", f"{side}_knee_i"],
             "wraps": {0: f"{side}_patella"}, "peak_force": 500.0},
            {"name": f"{side}_ankle_push", "path": [f"{side}_ank_o", f"{side}_ank_i"],
             "peak_force": 400.0},
        ]
    doc = {
        "version": "musculo-model/1",
        "bodies": bodies,
        "joints": joints,
        "sites": sites,
        "wrap_geoms": wrap_geoms,
        "muscles": muscles,
    }
    return _author_length_ranges(doc)


def neck_text() -> str:
    """Fixed-base neck: four vertebra segments with pitch+yaw hinges, a head
    with a beak site, and six muscles.  Joint defaults trace an S curve."""
    seg_len = 0.22
    pitch_defaults = [0.55, 0.25, -0.45, -0.35]
    bodies = [
        {"name": "ribcage", "mass": 4.0, "inertia": [0.02, 0.02, 0.02],
         "tags": ["torso"]},
    ]
    joints = []
    sites = [
        {"name": "neck_base", "body": "ribcage", "pos": [0.0, 0.0, 0.0]},
        {"name": "m_dorsal_0", "body": "ribcage", "pos": [-0.02, 0.0, 0.05]},
        {"name": "m_ventral_0", "body": "ribcage", "pos": [0.04, 0.0, -0.03]},
    ]
    parent = "ribcage"
    for i in range(1, 5):
        name = f"neck{i}"
        bodies.append({
            "name": name, "parent": parent,
            "offset": [0.0, 0.0, 0.0] if i == 1 else [seg_len, 0.0, 0.0],
            "mass": 0.4, "inertia": [4e-4, 1.5e-3, 1.5e-3],
            "com": [seg_len / 2, 0.0, 0.0]})
        joints += [
            {"name": f"n{i}_pitch", "body": name, "axis": [0, 1, 0],
             "range": [-0.9, 0.9], "default": pitch_defaults[i - 1],
             "stiffness": 2.0, "damping": 0.5},
            {"name": f"n{i}_yaw", "body": name, "axis": [0, 0, 1],
             "range": [-0.6, 0.6], "stiffness": 2.0, "damping": 0.5},
        ]
        sites += [
            {"name": f"m_dorsal_{i}", "body": name, "pos": [seg_len - 0.04, 0.0, 0.045]},
            {"name": f"m_ventral_{i}", "body": name, "pos": [seg_len - 0.04, 0.0, -0.045]},
        ]
        parent = name
    bodies.append({
        "name": "skull", "parent": "neck4", "offset": [seg_len, 0.0, 0.0],
        "mass": 0.5, "inertia": [3e-4, 8e-4, 8e-4], "com": [0.06, 0.0, 0.0],
        "tags": ["head"]})
    joints += [
        {"name": "n5_pitch", "body": "skull", "axis": [0, 1, 0],
         "range": [-0.9, 0.9], "stiffness": 2.0, "damping": 0.5},
        {"name": "n5_yaw", "body": "skull", "axis": [0, 0, 1],
         "range": [-0.6, 0.6], "stiffness": 2.0, "damping": 0.5},
    ]
    sites.append({"name": "beak", "body": "skull", "pos": [0.15, 0.0, -0.02],
                  "tags": ["beak"]})
    sites.append({"name": "m_dorsal_5", "body": "skull", "pos": [0.04, 0.0, 0.03]})
    sites.append({"name": "m_ventral_5", "body": "skull", "pos": [0.04, 0.0, -0.03]})
    muscles = []
    for lo, hi_ in ((0, 2), (2, 4), (4, 5)):
        muscles += [
            {"name": f"dorsal_{lo}_{hi_}",
             "path": [f"m_dorsal_{lo}", f"m_dorsal_{hi_}"], "peak_force": 200.0},
            {"name": f"ventral_{lo}_{hi_}",
             "path": [f"m_ventral_{lo}", f"m_ventral_{hi_}"], "peak_force": 200.0},
        ]
    doc = {
        "version": "musculo-model/1",
        "bodies": bodies,
        "joints": joints,
        "sites": sites,
        "muscles": muscles,
    }
    return _author_length_ranges(doc)

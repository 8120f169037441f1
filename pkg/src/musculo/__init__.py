"""musculo: musculotendon simulation and motion-analysis toolkit.

Hinge-joint chain models with Hill-type muscle actuators, tendon routing
with sphere/cylinder wrapping, forward dynamics with ground contact, a
mocap repair and retargeting pipeline, control tasks, and gait analysis.
"""

from .model import (
    Body,
    FrameSet,
    HingeJoint,
    MeshError,
    MeshInertia,
    Model,
    ModelError,
    Muscle,
    Pose,
    Site,
    WrapGeom,
    forward_kinematics,
    load_mesh,
    load_model,
    load_model_file,
    mesh_inertia,
)
from .muscles import (
    MuscleDefinitionError,
    MuscleParams,
    MuscleState,
    activation_time_constant,
    active_force_length,
    active_force_velocity,
    calibrate_length_ranges,
    muscle_force,
    passive_force,
    solve_rest_lengths,
    step_activation,
)
from .routing import (
    MomentArms,
    MusclePath,
    PathResult,
    PathSegment,
    RoutingError,
    joint_torques,
    moment_arms,
    moment_arms_batch,
    path_length,
    path_state,
    wrap_cylinder,
    wrap_sphere,
)
from .dynamics import (
    SimConfig,
    SimState,
    SimulationError,
    TrajectoryLog,
    center_of_mass,
    contact_forces,
    default_state,
    mechanical_energy,
    perturbed_state,
    step,
)
from .mocap import (
    STANDARD_MARKERS,
    Clip,
    IKDivergenceError,
    IKResult,
    MarkerAttachment,
    MocapError,
    Trajectory,
    attachments_from_model,
    cubic_spline_imputer,
    evaluate_imputer,
    ik_fit,
    impute,
    infer_velocities,
    load_clip,
    load_trajectory,
    make_cyclic,
    markers_from_trajectory,
    rescale,
    save_clip,
    save_trajectory,
    select_interval,
    zoh_imputer,
)
from .tasks import (
    EpisodeStatus,
    NeckReachTask,
    RunForwardTask,
    TaskError,
    TerminationReason,
    TrackingTask,
    action_map,
    neck_target_sample,
    torso_pitch,
    tracking_reward,
)
from .gait import (
    GaitError,
    GaitProfile,
    ProfileComparison,
    Stride,
    compare_profiles,
    gait_profile,
    load_emg_profile,
    phase_normalize,
    save_comparison,
    save_profile,
    segment_gait,
)

__version__ = "0.1.0"

__all__ = [
    "Body",
    "Clip",
    "EpisodeStatus",
    "FrameSet",
    "GaitError",
    "GaitProfile",
    "HingeJoint",
    "IKDivergenceError",
    "IKResult",
    "MarkerAttachment",
    "MeshError",
    "MeshInertia",
    "MocapError",
    "Model",
    "ModelError",
    "MomentArms",
    "Muscle",
    "MuscleDefinitionError",
    "MuscleParams",
    "MusclePath",
    "MuscleState",
    "NeckReachTask",
    "PathResult",
    "PathSegment",
    "Pose",
    "ProfileComparison",
    "RoutingError",
    "RunForwardTask",
    "STANDARD_MARKERS",
    "SimConfig",
    "SimState",
    "SimulationError",
    "Site",
    "Stride",
    "TaskError",
    "TerminationReason",
    "TrackingTask",
    "Trajectory",
    "TrajectoryLog",
    "WrapGeom",
    "action_map",
    "activation_time_constant",
    "active_force_length",
    "active_force_velocity",
    "attachments_from_model",
    "calibrate_length_ranges",
    "center_of_mass",
    "compare_profiles",
    "contact_forces",
    "cubic_spline_imputer",
    "default_state",
    "evaluate_imputer",
    "forward_kinematics",
    "gait_profile",
    "ik_fit",
    "impute",
    "infer_velocities",
    "joint_torques",
    "load_clip",
    "load_emg_profile",
    "load_mesh",
    "load_model",
    "load_model_file",
    "load_trajectory",
    "make_cyclic",
    "markers_from_trajectory",
    "mechanical_energy",
    "mesh_inertia",
    "moment_arms",
    "moment_arms_batch",
    "muscle_force",
    "neck_target_sample",
    "passive_force",
    "path_length",
    "path_state",
    "perturbed_state",
    "phase_normalize",
    "rescale",
    "save_clip",
    "save_comparison",
    "save_profile",
    "save_trajectory",
    "segment_gait",
    "select_interval",
    "solve_rest_lengths",
    "step",
    "step_activation",
    "torso_pitch",
    "tracking_reward",
    "wrap_cylinder",
    "wrap_sphere",
]

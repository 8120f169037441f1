"""Hill-type muscle primitives: activation filtering, force curves, rest lengths.

Muscle force is peak_force * (a * fl(l) * fv(ldot) + fp(l)) with l and ldot
normalized by the rest length.  The rest length and tendon length are not
authored directly; they are solved from the actuator's length range and the
normalized operating range it should cover (see solve_rest_lengths).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TAU_ACT = 0.010   # s
DEFAULT_TAU_DEACT = 0.040  # s
DEFAULT_FV_MAX = 1.5
DEFAULT_VMAX = 10.0       # rest lengths per second

# force-length support and passive curve share this half-width
_FL_WIDTH = 0.6
_FL_LO = 0.5
_FL_HI = 1.6
# concentric curvature of the force-velocity hyperbola
_FV_SHAPE = 0.25


class MuscleDefinitionError(ValueError):
    """Raised when authored muscle parameters are inconsistent."""


def solve_rest_lengths(length_range, operating_range):
    """Solve (rest_length, tendon_length) from actuator geometry.

    The actuator length range (LRmin, LRmax) in meters must map onto the
    normalized operating range (Rmin, Rmax):

        (LRmin - LT) / L0 = Rmin        (LRmax - LT) / L0 = Rmax

    A negative tendon length means the requested operating range cannot be
    realized by this actuator and is a hard error.
    """
    lr_min, lr_max = float(length_range[0]), float(length_range[1])
    r_min, r_max = float(operating_range[0]), float(operating_range[1])
    if not (lr_min < lr_max):
        raise MuscleDefinitionError("length_range must satisfy min < max")
    if not (r_min < r_max):
        raise MuscleDefinitionError("operating_range must satisfy min < max")
    rest = (lr_max - lr_min) / (r_max - r_min)
    tendon = lr_min - r_min * rest
    if tendon < -1e-12 * max(1.0, abs(lr_min)):
        raise MuscleDefinitionError(
            f"solved tendon length {tendon:.6g} m is negative; widen the "
            "operating range or shift the length range"
        )
    return rest, max(tendon, 0.0)


@dataclass(frozen=True)
class MuscleParams:
    """Static description of one musculotendon actuator."""

    name: str
    peak_force: float
    length_range: tuple[float, float]
    operating_range: tuple[float, float]
    rest_length: float
    tendon_length: float
    tau_act: float = DEFAULT_TAU_ACT
    tau_deact: float = DEFAULT_TAU_DEACT
    fv_max: float = DEFAULT_FV_MAX
    vmax: float = DEFAULT_VMAX

    @classmethod
    def create(cls, name, peak_force, length_range, operating_range,
               tau_act=DEFAULT_TAU_ACT, tau_deact=DEFAULT_TAU_DEACT,
               fv_max=DEFAULT_FV_MAX, vmax=DEFAULT_VMAX) -> "MuscleParams":
        """Validate fields and solve the derived rest/tendon lengths."""
        if not np.all(np.isfinite([peak_force, tau_act, tau_deact, fv_max, vmax])):
            raise MuscleDefinitionError(f"muscle {name}: non-finite parameter")
        if peak_force <= 0:
            raise MuscleDefinitionError(f"muscle {name}: peak_force must be > 0")
        lr = (float(length_range[0]), float(length_range[1]))
        rr = (float(operating_range[0]), float(operating_range[1]))
        if not (0 < lr[0] < lr[1]):
            raise MuscleDefinitionError(f"muscle {name}: need 0 < length_range min < max")
        if not (0 < rr[0] < 1 < rr[1]):
            raise MuscleDefinitionError(
                f"muscle {name}: operating_range must straddle 1 with 0 < min < 1 < max")
        if tau_act <= 0 or tau_deact <= 0:
            raise MuscleDefinitionError(f"muscle {name}: time constants must be > 0")
        if fv_max < 1:
            raise MuscleDefinitionError(f"muscle {name}: fv_max must be >= 1")
        if vmax <= 0:
            raise MuscleDefinitionError(f"muscle {name}: vmax must be > 0")
        try:
            rest, tendon = solve_rest_lengths(lr, rr)
        except MuscleDefinitionError as err:
            raise MuscleDefinitionError(f"muscle {name}: {err}") from None
        return cls(name=name, peak_force=float(peak_force), length_range=lr,
                   operating_range=rr, rest_length=rest, tendon_length=tendon,
                   tau_act=float(tau_act), tau_deact=float(tau_deact),
                   fv_max=float(fv_max), vmax=float(vmax))

    def normalize_length(self, actuator_length):
        return (np.asarray(actuator_length, dtype=float) - self.tendon_length) / self.rest_length


@dataclass
class MuscleState:
    """Instantaneous actuator state: activation plus normalized kinematics."""

    activation: float = 0.0
    length: float = 1.0    # units of rest_length
    velocity: float = 0.0  # rest lengths per second


def activation_time_constant(excitation, activation, params):
    """Effective first-order time constant of the activation filter.

    Activation is fast and gets slower as a grows; deactivation is the
    mirror image.  Accepts scalars or broadcastable arrays.
    """
    u = np.asarray(excitation, dtype=float)
    a = np.asarray(activation, dtype=float)
    scale = 0.5 + 1.5 * a
    tau = np.where(u > a, np.asarray(params.tau_act) * scale,
                   np.asarray(params.tau_deact) / scale)
    return tau if tau.ndim else float(tau)


def step_activation(activation, excitation, dt, params):
    """Advance the activation filter by dt.

    Exact exponential step with the time constant frozen over the interval:
    a' = u + (a - u) * exp(-dt / tau(u, a)).  Reduces to an explicit Euler
    step for dt much smaller than tau, stays inside [0, 1] for any dt.
    """
    a = np.asarray(activation, dtype=float)
    u = np.asarray(excitation, dtype=float)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(u)) and np.isfinite(dt)):
        raise ValueError("step_activation: non-finite input")
    if dt < 0:
        raise ValueError("step_activation: dt must be >= 0")
    u = np.clip(u, 0.0, 1.0)
    a = np.clip(a, 0.0, 1.0)
    tau = activation_time_constant(u, a, params)
    out = u + (a - u) * np.exp(-dt / np.asarray(tau))
    out = np.clip(out, 0.0, 1.0)
    return out if out.ndim else float(out)


def active_force_length(length):
    """Normalized active force-length curve.

    Quadratic bump peaking at 1 with value 1; zero outside [0.5, 1.6].
    """
    l = np.asarray(length, dtype=float)
    bump = 1.0 - ((l - 1.0) / _FL_WIDTH) ** 2
    out = np.where((l >= _FL_LO) & (l <= _FL_HI), np.maximum(bump, 0.0), 0.0)
    return out if out.ndim else float(out)


def _force_velocity(velocity, vmax, fv_max):
    v = np.asarray(velocity, dtype=float)
    vmax = np.asarray(vmax, dtype=float)
    fv_max = np.asarray(fv_max, dtype=float)
    # concentric branch: Hill hyperbola, zero at -vmax, one at rest
    num = 1.0 + v / vmax
    den = 1.0 - v / (vmax * _FV_SHAPE)
    con = np.where(v <= -vmax, 0.0, num / den)
    # eccentric branch: rational rise to the fv_max plateau, slope-matched at 0
    ke = np.maximum((fv_max - 1.0) / 5.0, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(ke > 0, v / (vmax * ke), 0.0)
        ecc = np.where(ke > 0, (1.0 + fv_max * x) / (1.0 + x), 1.0)
    out = np.where(v <= 0, con, ecc)
    return out if out.ndim else float(out)


def active_force_velocity(velocity, params):
    """Normalized force-velocity curve: 0 at -vmax, 1 at rest, plateau fv_max."""
    return _force_velocity(velocity, params.vmax, params.fv_max)


def passive_force(length):
    """Normalized passive stretch force: zero at or below rest, quadratic above."""
    l = np.asarray(length, dtype=float)
    out = np.where(l > 1.0, 0.1 * ((l - 1.0) / _FL_WIDTH) ** 2, 0.0)
    return out if out.ndim else float(out)


def muscle_force(state: MuscleState, params: MuscleParams) -> float:
    """Tensile force in newtons produced at the current state."""
    a = min(max(state.activation, 0.0), 1.0)
    f = a * active_force_length(state.length) * active_force_velocity(state.velocity, params)
    f += passive_force(state.length)
    return float(params.peak_force * max(f, 0.0))


def _force_scalars(activation, length, velocity, peak_force, vmax, fv_max):
    """Vectorized force law used by the simulator (one entry per muscle)."""
    a = np.clip(np.asarray(activation, dtype=float), 0.0, 1.0)
    f = a * active_force_length(length) * _force_velocity(velocity, vmax, fv_max)
    f = f + passive_force(length)
    return np.asarray(peak_force) * np.maximum(f, 0.0)


def calibrate_length_ranges(model, muscle_name, samples=1000, seed=0):
    """Estimate (min, max) actuator path length over the joint range.

    Draws joint configurations uniformly within the joint limits and records
    the extreme path lengths reached.  Deterministic for a given seed.
    """
    from . import routing
    from .seeding import stream

    if samples < 1:
        raise ValueError("calibrate_length_ranges: samples must be >= 1")
    muscle = model.muscle(muscle_name)
    rng = stream(seed, "calibrate", muscle_name)
    lo = np.array([j.range[0] for j in model.joints])
    hi = np.array([j.range[1] for j in model.joints])
    if lo.size:
        poses = rng.uniform(lo, hi, size=(samples, lo.size))
    else:
        poses = np.zeros((samples, 0))
    lengths = routing.path_lengths_for_poses(model, muscle.path, poses)
    return float(np.min(lengths)), float(np.max(lengths))

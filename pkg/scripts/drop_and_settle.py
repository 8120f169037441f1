"""Drop the planar leg model onto the floor and watch it settle.

Runs a couple of seconds of dynamics under a constant co-contraction (the
leg collapses like a rag doll without muscle tone), printing a coarse
timeline of pelvis height, contact state, and mechanical energy, and
optionally dumps the full state log as CSV for plotting.
"""
import argparse

import numpy as np

from musculo import SimConfig, TrajectoryLog, default_state, load_model, mechanical_energy, step
from musculo.desk_models import planar_leg_text


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seconds", type=float, default=2.0)
    ap.add_argument("--drop", type=float, default=0.02,
                    help="extra height above the authored stance, in meters")
    ap.add_argument("--tone", type=float, default=0.3,
                    help="constant excitation for every muscle")
    ap.add_argument("--out", default=None, help="state log CSV path")
    args = ap.parse_args()

    model = load_model(planar_leg_text())
    config = SimConfig()
    state = default_state(model, config)
    state.root_position[2] += args.drop
    excitation = np.full(len(model.muscles), args.tone)
    log = TrajectoryLog(model)

    steps = int(round(args.seconds / config.control_dt))
    report_every = max(1, steps // 10)
    for k in range(steps):
        state = step(model, state, excitation, config)
        log.append(state, excitation)
        if k % report_every == 0 or k == steps - 1:
            energy = mechanical_energy(model, state, config)
            down = int(state.contact_flags.sum())
            print(f"t={state.time:6.3f}s  pelvis_z={state.root_position[2]:.4f} m  "
                  f"contacts={down}/{len(model.contact_sites)}  "
                  f"energy={energy['total']:9.4f} J")

    if args.out:
        with open(args.out, "w", newline="") as f:
            log.write(f)
        print(f"wrote {args.out} ({len(log.rows)} rows)")


if __name__ == "__main__":
    main()

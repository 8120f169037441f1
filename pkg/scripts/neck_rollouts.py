"""Random-policy rollouts of the neck reaching task.

Steps the four-vertebra neck model against uniformly random muscle actions
and reports, per episode, the sampled target and the closest the beak got.
A crude baseline: anything a trained policy does should beat this by a wide
margin.
"""
import argparse

import numpy as np

from musculo import NeckReachTask, load_model
from musculo import seeding
from musculo.desk_models import neck_text


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--episodes", type=int, default=5)
    ap.add_argument("--steps", type=int, default=120)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    model = load_model(neck_text())
    task = NeckReachTask(model, seed=args.seed, horizon=args.steps)
    rng = seeding.stream(args.seed, "rollout", "actions")

    for episode in range(args.episodes):
        task.reset()
        best = np.inf
        steps = 0
        reason = "none"
        for _ in range(args.steps):
            action = rng.uniform(-1.0, 1.0, size=task.action_size)
            _, status = task.step(action)
            best = min(best, -status.reward)
            steps += 1
            reason = status.reason.value
            if status.terminated or status.truncated:
                break
        tx, ty, tz = task.target
        print(f"episode {episode}: target=({tx:+.3f},{ty:+.3f},{tz:+.3f})  "
              f"closest={best:.3f} m  steps={steps}  end={reason}")


if __name__ == "__main__":
    main()

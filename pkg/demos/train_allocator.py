"""Train the diffusion-policy bandwidth allocator on a two-image score table
and compare it against fixed, random, and greedy baselines.

Run: python3 demos/train_allocator.py  (under a minute on a laptop CPU)
"""

import numpy as np

from semcom import JpsqParams, ScoreTable
from semcom.add import (AddHyper, TableAllocEnv, allocate, baseline_allocate,
                        train)


def build_env():
    table = ScoreTable({
        "street": [(0, 0.60, 4.9827), (100, 0.10, 5.2600), (400, 0.05, 5.2651)],
        "harbor": [(0, 0.60, 4.9827), (250, 0.08, 5.2620), (500, 0.04, 5.2651)],
    })
    grids = {
        "street": np.zeros((16, 16), dtype=bool),
        "harbor": np.zeros((16, 16), dtype=bool),
    }
    grids["street"][:8, :] = True
    grids["harbor"][:, :8] = True
    params = JpsqParams(t_max=0.6, omega2=0.2)
    return TableAllocEnv(table, params, n_users=1, grids=grids)


def main():
    env = build_env()
    hyper = AddHyper(T=5, gamma=0.0, lr=3e-3, policy_lr=3e-4, warmup=800,
                     batch_size=128, episodes=4000, hidden=64,
                     explore_start=0.3, explore_end=0.02, sync_period=100, seed=0)
    print(f"training {hyper.episodes} one-shot episodes "
          f"(T={hyper.T}, {hyper.warmup} critic-only warmup)...")
    result = train(env, hyper)
    tail = float(np.mean(result.rewards[-200:]))
    print(f"mean reward over the last 200 episodes: {tail:.2f}\n")

    rng = np.random.Generator(np.random.Philox(123))
    states = [env.sample_state(rng) for _ in range(100)]
    rows = {"trained": 0.0, "greedy": 0.0, "fixed": 0.0, "random": 0.0, "optimal": 0.0}
    for state in states:
        rows["trained"] += env.utility(state, allocate(result.policy, state).b)
        rows["greedy"] += env.utility(
            state, baseline_allocate("greedy_table", state, env=env).b)
        rows["fixed"] += env.utility(state, baseline_allocate("fixed", state).b)
        rows["random"] += env.utility(state, baseline_allocate("random", state, rng=rng).b)
        rows["optimal"] += env.optimal(state)[1]

    print("mean utility over 100 evaluation states:")
    for name in ("optimal", "trained", "greedy", "fixed", "random"):
        mean = rows[name] / len(states)
        share = rows[name] / rows["optimal"]
        print(f"  {name:<8} {mean:9.2f}  ({100 * share:5.1f}% of optimal)")


if __name__ == "__main__":
    main()

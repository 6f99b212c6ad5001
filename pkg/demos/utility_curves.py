"""Perceptual utility as a function of token budget: quality saturates while
bandwidth cost keeps growing, so the maximum sits strictly inside the range.

Run: python3 demos/utility_curves.py  (saves utility_curves.svg when
matplotlib is installed)
"""

import numpy as np

from semcom import JpsqParams, jpsq, user_utility

T_MAX = 0.6
Q_FLOOR = 4.9827
Q_REF = 5.2651
TOTAL = 1000


def scores(budget):
    # the first tokens carry the high-importance blocks, so distance falls
    # off steeply before flattening
    cov = min(budget, TOTAL) / TOTAL
    d = T_MAX * (1.0 - cov) ** 3
    q = Q_FLOOR + (Q_REF - Q_FLOOR) * (1.0 - (1.0 - cov) ** 2)
    return d, q


def main():
    params = JpsqParams(t_max=T_MAX, omega2=0.15)
    budgets = np.linspace(0, TOTAL, 151)
    utils = []
    for b in budgets:
        d, q = scores(float(b))
        utils.append(user_utility(jpsq(d, q, params), q, float(b), params, cap=TOTAL))
    utils = np.array(utils)

    best = int(np.argmax(utils))
    print(f"quality gate opens once Q >= {params.q_th:.4f}")
    print(f"best budget: {budgets[best]:.0f} tokens "
          f"({100 * budgets[best] / TOTAL:.0f}% of the stream), "
          f"utility {utils[best]:.2f}")
    full = utils[-1]
    print(f"sending everything scores {full:.2f}: "
          f"{utils[best] - full:.2f} lower than the optimum pays for bandwidth")

    try:
        import matplotlib
        matplotlib.use("svg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not installed; skipping the plot")
        return
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(budgets, utils)
    ax.axvline(budgets[best], linestyle="--", linewidth=0.8)
    ax.set_xlabel("token budget")
    ax.set_ylabel("utility")
    fig.savefig("utility_curves.svg")
    print("wrote utility_curves.svg")


if __name__ == "__main__":
    main()

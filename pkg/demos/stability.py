"""Step lengths on a linear objective.

The gradient never changes, so AdaGrad-Diff's weights stop growing after the
first step and every later step has the same length. AdaGrad keeps adding
|c_i|^2 and its steps shrink like 1 / sqrt(n).
"""

import numpy as np

from adadiff import PolicyKind, Problem, SolverConfig, Zero, run


def main():
    c = np.array([1.0, -0.5, 2.0])
    linear = Problem(lambda x: (float(c @ x), c.copy()), Zero(), c.size, smooth=True, name="linear")
    for policy in PolicyKind:
        tr = run(linear, SolverConfig(eta=0.1, budget=10, policy=policy, record_iterates=True))
        steps = np.linalg.norm(np.diff(tr.iterates, axis=0), axis=1)
        print(f"{policy.value:>13}: " + " ".join(f"{s:.4f}" for s in steps))


if __name__ == "__main__":
    main()

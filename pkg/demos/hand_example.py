"""Three AdaGrad-Diff steps on f(x) = x^2 / 2, small enough to check by hand.

From x = 1 with eta = 1 and eps = 0 the first gradient is 1, so w = 1 and the
step lands on 0. The gradient then drops to 0, the difference is -1, the
weight grows to sqrt(2), and the iterate stays put.
"""

import numpy as np

from adadiff import Problem, SolverConfig, Zero, run, summability_report


def main():
    quad = Problem(lambda x: (0.5 * float(x @ x), x.copy()), Zero(), 1, smooth=True, name="quad")
    cfg = SolverConfig(eta=1.0, budget=3, eps=0.0, monitors={"lemma1", "fejer"},
                       reference_point=np.zeros(1), record_iterates=True)
    tr = run(quad, cfg, np.array([1.0]))
    print("iterates       ", tr.iterates.ravel())
    print("final weight   ", tr.weights_final)
    print("||g^n-g^n-1||^2", tr.diff_sq)
    print("lemma1 slack   ", tr.lemma1_residual)
    print("fejer slack    ", tr.fejer_residual)
    total, tail = summability_report(tr)
    print(f"difference sum {total}, tail share {tail}")


if __name__ == "__main__":
    main()

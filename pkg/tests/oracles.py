"""Independent reference solvers used by the test suite.

The tube-regression oracle is a dense projected-gradient QP on the classic
duplicated-variable formulation: variables (a, a*) of length 2n with signs
s = (+1, -1), objective 0.5 a'Qa + l'a, Q = [[K, -K], [-K, K]],
l = (eps - y, eps + y), constraints 0 <= a <= C and s'a = 0. Projection onto
the box intersected with the hyperplane is done by bisection on the shift
multiplier. Deliberately independent of the production solver.
"""

import numpy as np


def project_box_hyperplane(alpha, s, c):
    lo, hi = -2e6, 2e6
    for _ in range(80):
        lam = 0.5 * (lo + hi)
        g = float(s @ np.clip(alpha - lam * s, 0.0, c))
        if g > 0:
            lo = lam
        else:
            hi = lam
    return np.clip(alpha - 0.5 * (lo + hi) * s, 0.0, c)


def qp_oracle(kmat, y, c, epsilon, iters=8000):
    """Returns (beta, objective) for the tube-regression dual."""
    n = y.shape[0]
    s = np.concatenate([np.ones(n), -np.ones(n)])
    q = np.block([[kmat, -kmat], [-kmat, kmat]])
    lin = np.concatenate([epsilon - y, epsilon + y])
    lip = float(np.linalg.eigvalsh(q).max())
    eta = 1.0 / max(lip, 1e-9)
    alpha = project_box_hyperplane(np.zeros(2 * n), s, c)
    velocity = np.zeros_like(alpha)
    for _ in range(iters):
        grad = q @ alpha + lin
        proposal = project_box_hyperplane(alpha - eta * grad + 0.9 * velocity, s, c)
        velocity = proposal - alpha
        alpha = proposal
    # a plain polish pass settles any momentum overshoot
    for _ in range(2000):
        grad = q @ alpha + lin
        alpha = project_box_hyperplane(alpha - eta * grad, s, c)
    beta = alpha[:n] - alpha[n:]
    return beta, float(0.5 * alpha @ q @ alpha + lin @ alpha)

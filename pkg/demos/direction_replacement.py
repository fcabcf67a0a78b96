"""Replacing weak sketch directions with Frobenius-optimal ones.

At a fixed parameter vector we form the full Jacobian once (64 solves for
32/32) and compare ||kron(W.T, V.T) J||_F^2 for a random sketch against the
sketch produced by the two-phase remove/add procedure for s = 1, 2, 3.

Run: python3 demos/direction_replacement.py
"""
import numpy as np

from dotsaa import draw_sketch, two_phase_replace
from dotsaa.directions import orthonormalize, sketched_jacobian_norm2
from dotsaa.harness import ExperimentConfig, initial_guess, setup_problem

cfg = ExperimentConfig(nx=61, ny=61)
problem = setup_problem(cfg)
p = initial_guess(problem.model, alpha0=cfg.alpha0, beta0=cfg.beta0)
J = problem.full_jacobian_event(p)
print(f"full Jacobian {J.shape}, solves charged: {problem.ledger.total_solves}")

sk = draw_sketch(32, 10, 32, 10, seed=0)
W, V = orthonormalize(sk.W / np.sqrt(32)), orthonormalize(sk.V / np.sqrt(32))
base = sketched_jacobian_norm2(W, V, J)
print(f"random sketch:        {base:.4e}")
for s in (1, 2, 3):
    new, log = two_phase_replace(sk, J, s)
    val = sketched_jacobian_norm2(new.W / np.sqrt(32), new.V / np.sqrt(32), J)
    sizes = sorted({tuple(step["svd_shape"]) for step in log.steps})
    print(f"replace s={s}:          {val:.4e}  ({val / base:.2f}x), SVD sizes {sizes}")

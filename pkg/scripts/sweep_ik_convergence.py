#!/usr/bin/env python3
"""Sweep differential-IK convergence over gains and target difficulty.

Reports the convergence rate and median iteration count for position-only
and full-pose targets sampled from the feasible joint space. Useful when
retuning gains or touching the QP.
"""

import argparse
import time

import numpy as np

from litterbot.defaults import default_model, ready_q
from litterbot.ik import IKProblem, Task, ik_solve
from litterbot.kinematics import forward_kinematics


def trial(model, gain, weight, margin, n, seed):
    rng = np.random.default_rng(seed)
    lo = model.lower + margin * (model.upper - model.lower)
    hi = model.upper - margin * (model.upper - model.lower)
    converged = 0
    iters = []
    t0 = time.time()
    for _ in range(n):
        qt = lo + rng.random(model.n) * (hi - lo)
        target = forward_kinematics(model, qt)
        problem = IKProblem(model, [Task.pose(target, weight=weight, gain=gain)])
        _, ok, it = ik_solve(problem, ready_q())
        converged += ok
        iters.append(it)
    return converged, float(np.median(iters)), time.time() - t0


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=100)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    model = default_model()
    position_only = np.array([1.0, 1, 1, 0, 0, 0])
    print(f"{'task':<12} {'gain':>5} {'margin':>7} {'converged':>10} {'med iters':>10} {'secs':>6}")
    for label, weight in (("position", position_only), ("full pose", None)):
        for gain in (5.0, 10.0, 20.0):
            for margin in (0.0, 0.1):
                ok, med, dt = trial(model, gain, weight, margin, args.n, args.seed)
                print(f"{label:<12} {gain:>5.0f} {margin:>7.2f} {ok:>7}/{args.n} {med:>10.0f} {dt:>6.1f}")


if __name__ == "__main__":
    main()

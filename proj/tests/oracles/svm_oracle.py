"""Reference optima for the SVM solver tests.

Draws random linearly separable instances (margin >= 0.5 around a random
hyperplane) and solves

    min 0.5 * (|w|^2 + b^2) + C * sum_i max(0, 1 - y_i (w.x_i + b))

with cvxpy. Writes tests/data/svm_instances.json.
"""

import json
import pathlib

import cvxpy as cp
import numpy as np


def instance(rng, dim, n, c):
    w_true = rng.normal(size=dim)
    w_true /= np.linalg.norm(w_true)
    b_true = rng.normal() * 0.3
    xs, ys = [], []
    while len(xs) < n:
        x = rng.normal(scale=2.0, size=dim)
        margin = x @ w_true + b_true
        if abs(margin) >= 0.5:
            xs.append(x)
            ys.append(1 if margin > 0 else -1)
    x = np.array(xs)
    y = np.array(ys, dtype=float)
    w = cp.Variable(dim)
    b = cp.Variable()
    objective = 0.5 * (cp.sum_squares(w) + cp.square(b)) + c * cp.sum(cp.pos(1 - cp.multiply(y, x @ w + b)))
    problem = cp.Problem(cp.Minimize(objective))
    problem.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
    return {
        "c": c,
        "x": x.tolist(),
        "y": [int(v) for v in ys],
        "objective": float(problem.value),
        "w": [float(v) for v in w.value],
        "b": float(b.value),
    }


def main():
    rng = np.random.default_rng(20240611)
    cases = []
    for i in range(10):
        dim = int(rng.integers(2, 9))
        n = int(rng.integers(20, 41))
        c = [0.1, 1.0, 10.0][i % 3]
        cases.append(instance(rng, dim, n, c))
    out = pathlib.Path(__file__).resolve().parent.parent / "data" / "svm_instances.json"
    out.write_text(json.dumps({"instances": cases}, indent=1) + "\n")
    print(f"wrote {len(cases)} instances to {out}")


if __name__ == "__main__":
    main()

"""Shared test utilities: dense oracles and random instance generators."""

import numpy as np

from eqflow import ConstraintSystem, factor, project_gradient


def dense_projector(basis):
    """Materialize the tangent-space projector by applying the projection
    operation to the canonical basis vectors."""
    return project_gradient(basis, np.eye(basis.n))


def random_constraints(rng, n_max=40):
    """A random full-rank-looking constraint system with consistent b."""
    n = int(rng.integers(2, n_max + 1))
    m = int(rng.integers(1, n + 1))
    a = rng.standard_normal((m, n))
    z = rng.standard_normal(n)
    return ConstraintSystem(a=a, b=a @ z)


def rank_deficient_constraints(rng, n_max=40):
    """A planted rank-deficient system (consistent by construction); returns
    (cs, planted_rank)."""
    n = int(rng.integers(3, n_max + 1))
    m = int(rng.integers(2, n + 1))
    r = int(rng.integers(1, m))
    a = rng.standard_normal((m, r)) @ rng.standard_normal((r, n))
    z = rng.standard_normal(n)
    return ConstraintSystem(a=a, b=a @ z), r


def svd_rank(a, rel_tol=1e-10):
    s = np.linalg.svd(a, compute_uv=False)
    return int(np.count_nonzero(s > rel_tol * s[0]))


def central_diff_gradient(f, x, rel_step=1e-6):
    """Component-wise central differences with per-coordinate step scaling."""
    g = np.zeros_like(x)
    for i in range(x.size):
        h = rel_step * max(1.0, abs(x[i]))
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def feasible_points(cs, count, seed):
    """Random points restored onto {x : Ax = b}."""
    from eqflow import restore_feasibility

    basis = factor(cs)
    rng = np.random.default_rng(seed)
    return [
        restore_feasibility(basis, rng.uniform(-2.0, 2.0, size=cs.n))
        for _ in range(count)
    ]


def dense_lbfgs_model(pair):
    """Materialize the memory-one quasi-Newton matrix."""
    n = pair.s.size
    if not pair.usable:
        return np.eye(n)
    s, y = pair.s, pair.y
    return np.eye(n) - np.outer(s, s) / (s @ s) + np.outer(y, y) / (y @ y)


def random_usable_pair(rng, n, min_cos=0.0):
    """A random usable (step, gradient-change) pair; ``min_cos`` bounds the
    angle between s and y away from 90 degrees so the model stays
    well-conditioned for tight oracle comparisons."""
    from eqflow import make_pair

    while True:
        s = rng.standard_normal(n)
        y = rng.standard_normal(n)
        pair = make_pair(s, y)
        cos = abs(float(s @ y)) / (np.linalg.norm(s) * np.linalg.norm(y))
        if pair.usable and cos >= min_cos:
            return pair


def rosenbrock_dense_hessian(x):
    """Analytic curvature of the chained banana function."""
    n = x.size
    h = np.zeros((n, n))
    for i in range(n - 1):
        h[i, i] += 1200.0 * x[i] ** 2 - 400.0 * x[i + 1] + 2.0
        h[i, i + 1] += -400.0 * x[i]
        h[i + 1, i] += -400.0 * x[i]
        h[i + 1, i + 1] += 200.0
    return h


def traces_equal(t1, t2):
    """Bit-identical trace comparison, ignoring per-iteration wall time."""
    if len(t1) != len(t2):
        return False
    for r1, r2 in zip(t1, t2):
        for name in (
            "k",
            "f",
            "kkt",
            "feas",
            "dt",
            "rho",
            "accepted",
            "phase",
            "hessian_rebuilt",
            "decrease",
            "step_norm",
            "pg_norm",
            "step_infeas",
        ):
            v1, v2 = getattr(r1, name), getattr(r2, name)
            if v1 != v2 and not (v1 != v1 and v2 != v2):  # NaN-safe
                return False
    return True

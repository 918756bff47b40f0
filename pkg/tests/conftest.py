"""Shared oracles and instance generators for the test suite.

The oracles deliberately avoid the package's LP layer: they solve the
dense, unreduced constraint rows with ``scipy.optimize.linprog`` or check
dominance by brute force over upper sets.
"""

import itertools
import sys

import numpy as np
import pytest
from scipy.optimize import linprog

from gsdtest.core import ScaleSchema, build_pooled
from gsdtest.errors import DegenerateBounds

FOUR_POINT_SCHEMA = ScaleSchema.from_level_counts(1, [2])
# ordinal second coordinate stored as rank: 1 -> 0, 2 -> 1
A, B, C, D = (1.0, 0.0), (1.0, 1.0), (2.0, 0.0), (2.0, 1.0)
FOUR_POINT_DELTA = [A, A, D, D]
FOUR_POINT_LAMBDA = [A, B, C, D]


def dense_system(cs):
    """``(A_ub, b_ub, A_eq, b_eq)`` over ``(v_0..v_{s-1}, xi)`` from ``cs.rows()``."""
    s = cs.s
    ub, eq = [], []
    for row in cs.rows():
        vec = np.zeros(s + 1)
        for i, c in row.coeffs.items():
            vec[i] += c
        if row.xi:
            vec[s] = -1.0
        if row.kind == ">=":
            ub.append(-vec)
        else:
            eq.append(np.concatenate([vec, [0.0]]))
    for idx, val in cs.fixed:
        vec = np.zeros(s + 1)
        vec[idx] = 1.0
        eq.append(np.concatenate([vec, [val]]))
    a_ub = np.array(ub).reshape(-1, s + 1)
    eq = np.array(eq)
    return a_ub, np.zeros(len(a_ub)), eq[:, : s + 1], eq[:, s + 1]


def oracle_xi_star(cs) -> float:
    a_ub, b_ub, a_eq, b_eq = dense_system(cs)
    c = np.zeros(cs.s + 1)
    c[-1] = -1.0
    bounds = [(None, None)] * cs.s + [(0.0, 1.0)]
    res = linprog(c, A_ub=a_ub if len(a_ub) else None, b_ub=b_ub if len(a_ub) else None,
                  A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    assert res.status == 0, res.message
    return float(res.x[-1])


def oracle_statistic(cs, objective, xi_value: float) -> float:
    a_ub, b_ub, a_eq, b_eq = dense_system(cs)
    c = np.concatenate([objective, [0.0]])
    bounds = [(None, None)] * cs.s + [(xi_value, xi_value)]
    res = linprog(c, A_ub=a_ub if len(a_ub) else None, b_ub=b_ub if len(a_ub) else None,
                  A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    assert res.status == 0, res.message
    return float(res.fun)


def upsets(points):
    """All upper sets of componentwise dominance on ``points`` (brute force)."""
    pts = np.asarray(points, dtype=float)
    s = len(pts)
    above = np.all(pts[:, None, :] >= pts[None, :, :], axis=2)  # above[i, j]: i >= j
    for mask in itertools.product((False, True), repeat=s):
        m = np.array(mask)
        # closed upwards: j in U and i >= j implies i in U
        if np.all(~(above & m[None, :]) | m[:, None]):
            yield m


def fsd_dominates(points, wx, wy, tol=1e-12) -> bool:
    """X first-order dominates Y: at least as much X-mass on every upper set."""
    wx, wy = np.asarray(wx), np.asarray(wy)
    return all(wx[m].sum() >= wy[m].sum() - tol for m in upsets(points))


def random_pooled(rng, s_max, r, z, n_max=6, levels=4, cardinal_range=4):
    """Random pooled sample on an integer grid, retried until non-degenerate."""
    schema = ScaleSchema.from_level_counts(z, [levels] * (r - z))
    while True:
        n, m = rng.integers(1, n_max + 1, 2)
        grid = []
        for j in range(r):
            hi = cardinal_range if j < z else levels
            grid.append(rng.integers(0, hi, n + m))
        pts = [tuple(float(c) for c in p) for p in np.stack(grid, 1)]
        try:
            pooled = build_pooled(pts[:n], pts[n:], schema)
        except DegenerateBounds:
            continue
        if pooled.s <= s_max:
            return pooled


@pytest.fixture
def four_point_pooled():
    return build_pooled(FOUR_POINT_DELTA, FOUR_POINT_LAMBDA, FOUR_POINT_SCHEMA)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])

"""Linear programs over the constraint system.

Three programs are solved against the same :class:`ConstraintSet`:

* the separation LP, maximising the uniform strict gap ``xi`` a normalised
  representation can achieve on the pooled points (``xi_star``);
* the statistic LP, minimising ``sum_l v_l (wx_l - wy_l)`` with ``xi`` pinned
  to ``eps * xi_star``;
* its credal envelopes over sets of candidate weight vectors.

The backend is HiGHS via ``highspy``. One :class:`LinearProgram` holds a
persistent model, so repeated solves with a new objective warm-start from the
previous basis. Strict R2 rows are handed to HiGHS lazily: the model starts
with the R1 rows and R2 equalities, and violated R2 rows are appended until
the optimum satisfies all of them. Since every appended row is a valid
constraint, the final optimum is that of the full system.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import highspy
import numpy as np
import scipy.sparse as sp

from gsdtest.constraints import ConstraintSet, pair_matrix, quad_matrix
from gsdtest.errors import EmptyCredalSet, InconsistentSystem, NumericalError

FEASIBILITY_TOL = 1e-9
CUT_TOL = 1e-10
DECISION_TOL = 1e-8
# small batches keep the model lean; most pool rows never bind
MAX_CUTS_PER_ROUND = 25
XI_GUARD = 1e-9

_INF = highspy.kHighsInf


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class SolveOutcome:
    status: Status
    value: Optional[float]
    solution: Optional[np.ndarray]


@dataclass(frozen=True, eq=False)
class EmpiricalPair:
    """Probability weights of the two groups over the pooled points."""

    wx: np.ndarray
    wy: np.ndarray

    def __post_init__(self):
        wx = np.asarray(self.wx, dtype=float)
        wy = np.asarray(self.wy, dtype=float)
        if wx.shape != wy.shape or wx.ndim != 1:
            raise ValueError("weight vectors must be 1-d and of equal length")
        for name, w in (("wx", wx), ("wy", wy)):
            if np.any(w < 0):
                raise ValueError(f"{name} has negative entries")
            if abs(w.sum() - 1.0) > 1e-12:
                raise ValueError(f"{name} sums to {w.sum()!r}, not 1")
        object.__setattr__(self, "wx", wx)
        object.__setattr__(self, "wy", wy)

    @classmethod
    def from_counts(cls, count_x, count_y) -> "EmpiricalPair":
        cx = np.asarray(count_x, dtype=float)
        cy = np.asarray(count_y, dtype=float)
        return cls(cx / cx.sum(), cy / cy.sum())

    @property
    def objective(self) -> np.ndarray:
        return self.wx - self.wy


def _highs_status(h: highspy.Highs) -> Optional[Status]:
    st = h.getModelStatus()
    if st == highspy.HighsModelStatus.kOptimal:
        return Status.OPTIMAL
    if st in (highspy.HighsModelStatus.kInfeasible,):
        return Status.INFEASIBLE
    if st in (highspy.HighsModelStatus.kUnbounded, highspy.HighsModelStatus.kUnboundedOrInfeasible):
        return Status.UNBOUNDED
    return None


def _run(h: highspy.Highs) -> Status:
    """Solve, falling back to dual simplex and then a cold presolved solve.

    Warm primal simplex occasionally stalls on degenerate vertices and
    reports an unknown status; the fallbacks restore the fast settings after.
    """
    h.run()
    status = _highs_status(h)
    if status is not None:
        return status
    h.setOptionValue("simplex_strategy", 1)
    h.run()
    status = _highs_status(h)
    if status is None:
        h.clearSolver()
        h.setOptionValue("presolve", "on")
        h.run()
        status = _highs_status(h)
        h.setOptionValue("presolve", "off")
    h.setOptionValue("simplex_strategy", 4)
    if status is None:
        raise NumericalError(f"HiGHS returned {h.modelStatusToString(h.getModelStatus())}")
    return status


class LinearProgram:
    """Persistent HiGHS model over ``(v_0, ..., v_{s-1}, xi)``.

    Parameters
    ----------
    cs : ConstraintSet
    seed_rows : array of int, optional
        Indices into ``cs.r2_strict`` to add up front (e.g. rows found active
        by an earlier solve), which saves cut rounds.
    """

    def __init__(self, cs: ConstraintSet, seed_rows: Optional[np.ndarray] = None):
        self.cs = cs
        self.s = cs.s
        self.xi_col = cs.s
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("threads", 1)
        # objective-only changes keep the basis primal feasible: warm primal simplex
        h.setOptionValue("presolve", "off")
        h.setOptionValue("simplex_strategy", 4)
        h.setOptionValue("primal_feasibility_tolerance", FEASIBILITY_TOL)
        h.setOptionValue("dual_feasibility_tolerance", FEASIBILITY_TOL)
        self.h = h

        ncol = cs.s + 1
        lo = np.zeros(ncol)
        hi = np.ones(ncol)
        for idx, val in cs.fixed:
            lo[idx] = hi[idx] = val
        h.addVars(ncol, lo, hi)

        if len(cs.r1_strict):
            self._add_rows(pair_matrix(cs.r1_strict, cs.s), with_xi=True, lower=0.0, upper=_INF)
        if len(cs.r1_indiff):
            self._add_rows(pair_matrix(cs.r1_indiff, cs.s), with_xi=False, lower=0.0, upper=0.0)
        if len(cs.r2_indiff):
            self._add_rows(quad_matrix(cs.r2_indiff, cs.s), with_xi=False, lower=0.0, upper=0.0)

        pool = cs.r2_strict
        self._pool = pool
        self._added = np.zeros(len(pool), dtype=bool)
        if seed_rows is not None and len(seed_rows):
            self._add_cuts(np.unique(np.asarray(seed_rows, dtype=np.int64)))

    def _add_rows(self, mat, with_xi: bool, lower: float, upper: float):
        mat = mat.tocsr()
        if with_xi:
            mat = sp.hstack([mat, -np.ones((mat.shape[0], 1))], format="csr")
        else:
            mat.resize((mat.shape[0], self.s + 1))
        n = mat.shape[0]
        self.h.addRows(
            n,
            np.full(n, lower),
            np.full(n, upper),
            mat.nnz,
            mat.indptr[:-1].astype(np.int32),
            mat.indices.astype(np.int32),
            mat.data.astype(float),
        )

    def _add_cuts(self, idx: np.ndarray):
        idx = idx[~self._added[idx]]
        if len(idx) == 0:
            return
        self._add_rows(quad_matrix(self._pool[idx], self.s), with_xi=True, lower=0.0, upper=_INF)
        self._added[idx] = True

    @property
    def cut_rows(self) -> np.ndarray:
        """Indices of pool rows currently in the model."""
        return np.flatnonzero(self._added)

    def set_xi_bounds(self, lo: float, hi: float):
        self.h.changeColBounds(self.xi_col, lo, hi)

    def _violations(self, x: np.ndarray) -> np.ndarray:
        pending = np.flatnonzero(~self._added)
        if len(pending) == 0:
            return pending, np.empty(0)
        q = self._pool[pending]
        slack = x[q[:, 0]] - x[q[:, 1]] - x[q[:, 2]] + x[q[:, 3]] - x[self.xi_col]
        bad = slack < -CUT_TOL
        return pending[bad], slack[bad]

    def minimize(self, cost: np.ndarray) -> SolveOutcome:
        """Minimise ``cost @ (v, xi)`` over the full constraint system."""
        cost = np.asarray(cost, dtype=float)
        h = self.h
        h.changeColsCost(len(cost), np.arange(len(cost), dtype=np.int32), cost)
        while True:
            status = _run(h)
            if status is not Status.OPTIMAL:
                return SolveOutcome(status, None, None)
            x = np.array(h.getSolution().col_value)
            idx, slack = self._violations(x)
            if len(idx) == 0:
                return SolveOutcome(Status.OPTIMAL, float(cost @ x), x)
            if len(idx) > MAX_CUTS_PER_ROUND:
                idx = idx[np.argsort(slack, kind="stable")[:MAX_CUTS_PER_ROUND]]
            self._add_cuts(np.sort(idx))


def _cost(s: int, obj_v=None, obj_xi: float = 0.0) -> np.ndarray:
    c = np.zeros(s + 1)
    if obj_v is not None:
        c[:s] = obj_v
    c[s] = obj_xi
    return c


def solve_xi_star(cs: ConstraintSet, program: Optional[LinearProgram] = None) -> float:
    """Largest uniform separation ``xi`` achievable by a normalised representation.

    A strictly positive value certifies that the observed subsystem is
    consistent.
    """
    lp = program or LinearProgram(cs)
    lp.set_xi_bounds(0.0, 1.0)
    out = lp.minimize(_cost(cs.s, obj_xi=-1.0))
    if out.status is not Status.OPTIMAL:
        raise InconsistentSystem(f"separation LP is {out.status.value}")
    xi = float(out.solution[cs.s])
    if xi <= FEASIBILITY_TOL:
        raise InconsistentSystem(f"no strictly separating representation (xi* = {xi:g})")
    return xi


class StatisticSolver:
    """Reusable solver for the (regularised) statistic at one ``eps``.

    Keeps a warm HiGHS model so that successive weight vectors only change
    the objective.
    """

    def __init__(
        self,
        cs: ConstraintSet,
        eps: float,
        xi_star: float,
        seed_rows: Optional[np.ndarray] = None,
    ):
        if not 0.0 <= eps <= 1.0:
            raise ValueError(f"eps must lie in [0, 1], got {eps}")
        self.cs = cs
        self.eps = eps
        self.xi0 = eps * xi_star
        self.lp = LinearProgram(cs, seed_rows)
        self.lp.set_xi_bounds(self.xi0, self.xi0)

    def solve(self, objective: np.ndarray) -> float:
        out = self.lp.minimize(_cost(self.cs.s, objective))
        if out.status is Status.INFEASIBLE and self.xi0 > 0:
            # xi_star carries solver error; back off by the feasibility tolerance
            self.xi0 = max(self.xi0 - XI_GUARD, 0.0)
            self.lp.set_xi_bounds(self.xi0, self.xi0)
            out = self.lp.minimize(_cost(self.cs.s, objective))
        if out.status is not Status.OPTIMAL:
            raise NumericalError(f"statistic LP is {out.status.value} (eps={self.eps})")
        return out.value

    def __call__(self, weights: EmpiricalPair) -> float:
        return self.solve(weights.objective)


def solve_statistic(cs: ConstraintSet, weights: EmpiricalPair, eps: float, xi_star: float) -> float:
    """Minimum expected-utility difference over representations separated by ``eps * xi_star``.

    With ``eps = 0`` this is the unregularised statistic, and a value of at
    least ``-DECISION_TOL`` means in-sample dominance of X over Y.
    """
    return StatisticSolver(cs, eps, xi_star)(weights)


def in_sample_dominates(value: float) -> bool:
    return value >= -DECISION_TOL


def linear_vacuous_extremes(weights: np.ndarray, gamma: float, extra: Sequence[int] = ()) -> list:
    """Extreme points ``gamma * delta_z + (1 - gamma) * w``, one per observed ``z``.

    ``extra`` adds Dirac contaminations at further indices, e.g. ``(0, 1)``
    for the bounds. Over the whole pooled ground set the contamination
    neighbourhood has an extreme point at every index; restricted to the
    observed support it only reaches the bounds when they were observed.
    """
    w = np.asarray(weights, dtype=float)
    out = []
    for z in sorted(set(np.flatnonzero(w > 0).tolist()) | set(extra)):
        e = (1.0 - gamma) * w
        e[z] += gamma
        out.append(e)
    return out


def solve_robust_enumeration(
    cs: ConstraintSet,
    extremes_x: Sequence[np.ndarray],
    extremes_y: Sequence[np.ndarray],
    eps: float,
    xi_star: float,
) -> tuple:
    """Lower and upper envelope of the statistic over all pairs of extreme points.

    The lower envelope is the smallest LP optimum over the product of the
    extreme sets; the upper one the largest.
    """
    if len(extremes_x) == 0 or len(extremes_y) == 0:
        raise EmptyCredalSet("each credal set needs at least one extreme point")
    solver = StatisticSolver(cs, eps, xi_star)
    values = [solver(EmpiricalPair(px, py)) for px in extremes_x for py in extremes_y]
    return min(values), max(values)


def gamma_shift(value, gamma: float):
    """Envelopes of a statistic under gamma-contamination of both groups.

    Every feasible representation has ``v(a_*) = 0`` and ``v(a^*) = 1``, so
    moving mass ``gamma`` to the bounds shifts the objective by exactly
    ``-gamma`` (lower) or ``+gamma`` (upper).
    """
    value = np.asarray(value, dtype=float)
    scaled = (1.0 - gamma) * value
    lower, upper = scaled - gamma, scaled + gamma
    if lower.ndim == 0:
        return float(lower), float(upper)
    return lower, upper


def solve_gamma_shortcut(
    cs: ConstraintSet, weights: EmpiricalPair, gamma: float, eps: float, xi_star: float
) -> tuple:
    """Envelopes from one LP: the least favourable pair moves mass ``gamma``
    of X to the lower bound and of Y to the upper bound (and vice versa)."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    d = solve_statistic(cs, weights, eps, xi_star)
    return gamma_shift(d, gamma)

"""Permutation test for generalized stochastic dominance.

The observed statistic is compared against its distribution over
reassignments of the pooled observations to groups of the original sizes,
either all ``C(n+m, n)`` of them (exact mode) or ``N`` uniform draws
(Monte-Carlo mode).

Robustness against gamma-contamination needs no extra LPs: the lower
envelope of the observed statistic is ``(1-gamma) d - gamma`` and the upper
envelope of each resampled statistic ``(1-gamma) d_I + gamma``, so one LP per
resample and ``eps`` serves the whole gamma grid.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from gsdtest.constraints import ConstraintSet
from gsdtest.core import PooledSample
from gsdtest.errors import ResampleBudgetTooSmall
from gsdtest.lp import StatisticSolver, gamma_shift, solve_xi_star

SCHEMA_VERSION = 1
# resampled statistics within this distance of the observed one count as ties
TIE_TOL = 1e-9
MAX_EXACT_SPLITS = 500_000

REVERSED_NOTE = (
    "Roles of the groups are swapped. A high p-value here gives no evidence "
    "that the groups are incomparable; a rejection in both directions does."
)
BOUNDS_NOTE = (
    "Bounds were synthesized as the componentwise minimum and maximum of the "
    "pooled data."
)


def _grid(values, name) -> tuple:
    vals = tuple(sorted({float(v) for v in values}))
    if not vals:
        raise ValueError(f"{name} must be non-empty")
    if vals[0] < 0.0 or vals[-1] > 1.0:
        raise ValueError(f"{name} must lie in [0, 1]")
    return vals


@dataclass(frozen=True)
class TestConfig:
    """Settings of a (robustified, regularised) permutation test.

    ``reversed`` asks the driver to also run the companion test with the
    groups swapped; :func:`run_test` itself never swaps.
    """

    __test__ = False

    epsilons: tuple = (0.0,)
    gammas: tuple = (0.0,)
    resamples: int = 1000
    exact: bool = False
    alpha: float = 0.05
    seed: int = 0
    reversed: bool = False
    workers: int = 1
    chunk_size: int = 200

    def __post_init__(self):
        object.__setattr__(self, "epsilons", _grid(self.epsilons, "epsilons"))
        object.__setattr__(self, "gammas", _grid(self.gammas, "gammas"))
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.exact and self.resamples < 1:
            raise ValueError("resamples must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.workers < 1 or self.chunk_size < 1:
            raise ValueError("workers and chunk_size must be positive")

    @property
    def mode(self) -> str:
        return "exact" if self.exact else "monte-carlo"

    def to_dict(self) -> dict:
        return {
            "epsilons": list(self.epsilons),
            "gammas": list(self.gammas),
            "resamples": self.resamples,
            "exact": self.exact,
            "alpha": self.alpha,
            "seed": self.seed,
            "reversed": self.reversed,
        }


@dataclass(frozen=True)
class GammaEntry:
    gamma: float
    observed_lower: float
    p_value: float
    reject: bool


@dataclass
class EpsilonResult:
    epsilon: float
    observed: float
    resamples: np.ndarray  # plain statistic per resample, in draw order
    entries: list = field(default_factory=list)

    def entry(self, gamma: float) -> GammaEntry:
        for e in self.entries:
            if e.gamma == gamma:
                return e
        raise KeyError(gamma)

    def upper_statistics(self, gamma: float) -> np.ndarray:
        return gamma_shift(self.resamples, gamma)[1]


@dataclass
class TestReport:
    __test__ = False

    results: list
    metadata: dict

    def result(self, eps: float) -> EpsilonResult:
        for r in self.results:
            if r.epsilon == eps:
                return r
        raise KeyError(eps)

    def p_value(self, eps: float, gamma: float = 0.0) -> float:
        return self.result(eps).entry(gamma).p_value

    def reject(self, eps: float, gamma: float = 0.0) -> bool:
        return self.result(eps).entry(gamma).reject

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "metadata": self.metadata,
            "results": [
                {
                    "epsilon": r.epsilon,
                    "observed": r.observed,
                    "resamples": r.resamples.tolist(),
                    "entries": [
                        {
                            "gamma": e.gamma,
                            "observed_lower": e.observed_lower,
                            "p_value": e.p_value,
                            "reject": e.reject,
                        }
                        for e in r.entries
                    ],
                }
                for r in self.results
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TestReport":
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {doc.get('schema_version')!r}")
        results = [
            EpsilonResult(
                epsilon=r["epsilon"],
                observed=r["observed"],
                resamples=np.asarray(r["resamples"], dtype=float),
                entries=[GammaEntry(**e) for e in r["entries"]],
            )
            for r in doc["results"]
        ]
        return cls(results, doc["metadata"])

    def __eq__(self, other):
        if not isinstance(other, TestReport):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def p_value(observed: float, resamples: np.ndarray, gamma: float, exact: bool) -> float:
    """Share of resampled upper envelopes at least as large as the observed lower envelope."""
    lower, _ = gamma_shift(observed, gamma)
    _, upper = gamma_shift(np.asarray(resamples, dtype=float), gamma)
    count = int(np.count_nonzero(upper >= lower - TIE_TOL))
    k = len(upper)
    return count / k if exact else (1 + count) / (1 + k)


def order_statistic_reject(observed: float, resamples: np.ndarray, gamma: float, alpha: float) -> bool:
    """Exact-mode rule: reject when the observed lower envelope exceeds the
    ``ceil((1-alpha) k)``-th smallest resampled upper envelope."""
    lower, _ = gamma_shift(observed, gamma)
    _, upper = gamma_shift(np.asarray(resamples, dtype=float), gamma)
    k = len(upper)
    ell = math.ceil((1 - Fraction(repr(alpha))) * k)
    return bool(lower > np.sort(upper)[ell - 1] + TIE_TOL)


def _entries(observed, resamples, gammas, alpha, exact) -> list:
    out = []
    for g in gammas:
        p = p_value(observed, resamples, g, exact)
        if exact:
            rej = order_statistic_reject(observed, resamples, g, alpha)
        else:
            rej = p <= alpha
        out.append(GammaEntry(g, gamma_shift(observed, g)[0], p, rej))
    return out


def split_counts(pooled: PooledSample, config: TestConfig) -> np.ndarray:
    """Group-X count vectors of every resample, one row per index set.

    Index sets are drawn sequentially from ``config.seed`` before any LP is
    solved, so the resamples do not depend on how solving is scheduled.
    """
    s, n, m = pooled.s, pooled.n, pooled.m
    labels = np.concatenate(
        [np.repeat(np.arange(s), pooled.count_x), np.repeat(np.arange(s), pooled.count_y)]
    )
    total = n + m
    if config.exact:
        k = math.comb(total, n)
        if k > MAX_EXACT_SPLITS:
            raise ValueError(f"exact mode needs {k} splits; use Monte-Carlo resampling")
        out = np.empty((k, s), dtype=np.int64)
        for row, idx in enumerate(itertools.combinations(range(total), n)):
            out[row] = np.bincount(labels[list(idx)], minlength=s)
        return out
    if config.resamples < 1.0 / config.alpha:
        raise ResampleBudgetTooSmall(
            f"{config.resamples} resamples cannot reach alpha={config.alpha}; "
            f"need at least {math.ceil(1.0 / config.alpha)}"
        )
    rng = np.random.default_rng(config.seed)
    out = np.empty((config.resamples, s), dtype=np.int64)
    for row in range(config.resamples):
        out[row] = np.bincount(labels[rng.permutation(total)[:n]], minlength=s)
    return out


def _solve_chunk(cs, eps, xi_star, seed_rows, objectives) -> np.ndarray:
    solver = StatisticSolver(cs, eps, xi_star, seed_rows)
    return np.array([solver.solve(c) for c in objectives])


def _objectives(counts: np.ndarray, totals: np.ndarray, n: int, m: int) -> np.ndarray:
    return counts / n - (totals - counts) / m


def run_test(
    pooled: PooledSample,
    cs: ConstraintSet,
    config: TestConfig,
    xi_star: Optional[float] = None,
) -> TestReport:
    """Permutation test of H0: Y dominates X, for every ``(eps, gamma)`` in the config."""
    if xi_star is None:
        xi_star = solve_xi_star(cs)
    n, m = pooled.n, pooled.m
    totals = pooled.count_x + pooled.count_y
    counts = split_counts(pooled, config)
    uniq, inverse = np.unique(counts, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    obj = _objectives(uniq, totals, n, m)
    obs_obj = _objectives(pooled.count_x, totals, n, m)
    is_obs = np.all(uniq == pooled.count_x, axis=1)

    chunks = [slice(i, i + config.chunk_size) for i in range(0, len(uniq), config.chunk_size)]
    observed, seeds = {}, {}
    for eps in config.epsilons:
        solver = StatisticSolver(cs, eps, xi_star)
        observed[eps] = solver.solve(obs_obj)
        seeds[eps] = solver.lp.cut_rows

    tasks = [(eps, sl) for eps in config.epsilons for sl in chunks]
    args = [(cs, eps, xi_star, seeds[eps], obj[sl]) for eps, sl in tasks]
    if config.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(_solve_chunk, *zip(*args)))
    else:
        parts = [_solve_chunk(*a) for a in args]

    values = {eps: np.empty(len(uniq)) for eps in config.epsilons}
    for (eps, sl), part in zip(tasks, parts):
        values[eps][sl] = part

    results = []
    for eps in config.epsilons:
        vals = values[eps]
        # the observed split must tie with itself exactly
        vals[is_obs] = observed[eps]
        res = vals[inverse]
        entries = _entries(observed[eps], res, config.gammas, config.alpha, config.exact)
        results.append(EpsilonResult(eps, observed[eps], res, entries))

    metadata = {
        "n": n,
        "m": m,
        "s": pooled.s,
        "xi_star": xi_star,
        "seed": config.seed,
        "mode": config.mode,
        "resamples": int(len(counts)),
        "distinct_resamples": int(len(uniq)),
        "alpha": config.alpha,
        "epsilons": list(config.epsilons),
        "gammas": list(config.gammas),
        "bounds": {"lower": list(pooled.lower), "upper": list(pooled.upper)},
        "bounds_synthesized": pooled.bounds_synthesized,
        "reversed": False,
    }
    if pooled.bounds_synthesized:
        metadata["bounds_note"] = BOUNDS_NOTE
    return TestReport(results, metadata)


def reversed_test(
    pooled: PooledSample,
    cs: ConstraintSet,
    config: TestConfig,
    xi_star: Optional[float] = None,
) -> TestReport:
    """Same test with the roles of X and Y swapped.

    The constraint system depends only on the pooled points, so ``cs`` and
    ``xi_star`` are shared with the forward test.
    """
    report = run_test(pooled.swapped(), cs, replace(config, reversed=True), xi_star)
    report.metadata["reversed"] = True
    report.metadata["interpretation"] = REVERSED_NOTE
    return report


def pvalue_curve(report: TestReport, gammas: Sequence[float]) -> dict:
    """p-value as a function of the contamination level, per ``eps``.

    Uses only the stored plain statistics; no LP is solved.
    """
    exact = report.metadata["mode"] == "exact"
    return {
        r.epsilon: [(float(g), p_value(r.observed, r.resamples, g, exact)) for g in gammas]
        for r in report.results
    }


def rejection_limit(curve: Sequence[tuple], alpha: float) -> Optional[float]:
    """Largest gamma of the grid up to which the test still rejects (None if it never does)."""
    best = None
    for g, p in curve:
        if p > alpha:
            break
        best = g
    return best


def gamma_threshold(curve: Sequence[tuple], alpha: float) -> Optional[float]:
    """Smallest gamma of the grid at which the p-value exceeds alpha."""
    for g, p in curve:
        if p > alpha:
            return g
    return None

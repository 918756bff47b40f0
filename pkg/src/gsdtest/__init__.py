"""Generalized stochastic dominance tests for mixed-scale multivariate data."""

from gsdtest.constraints import ConstraintSet, build_constraints, constraint_stats
from gsdtest.core import PooledSample, Relation, ScaleSchema, build_pooled, r1_compare, r2_compare
from gsdtest.lp import (
    EmpiricalPair,
    in_sample_dominates,
    solve_gamma_shortcut,
    solve_robust_enumeration,
    solve_statistic,
    solve_xi_star,
)
from gsdtest.permutation import TestConfig, TestReport, pvalue_curve, reversed_test, run_test

__all__ = [
    "ConstraintSet",
    "EmpiricalPair",
    "PooledSample",
    "Relation",
    "ScaleSchema",
    "TestConfig",
    "TestReport",
    "build_constraints",
    "build_pooled",
    "constraint_stats",
    "in_sample_dominates",
    "pvalue_curve",
    "r1_compare",
    "r2_compare",
    "reversed_test",
    "run_test",
    "solve_gamma_shortcut",
    "solve_robust_enumeration",
    "solve_statistic",
    "solve_xi_star",
]

"""Synthetic mixed-scale data for demos, tests and the bundled dataset."""

from __future__ import annotations

import csv
from importlib import resources
from pathlib import Path

import numpy as np

HEALTH_LEVELS = ("bad", "poor", "fair", "good", "very_good", "excellent")
EDUCATION_LEVELS = (
    "none",
    "primary",
    "lower_secondary",
    "upper_secondary",
    "vocational",
    "bachelor",
    "master",
    "doctorate",
)
BUNDLED_CSV = "welfare.csv"
BUNDLED_GROUPS = ("A", "B")


def welfare_points(rng: np.random.Generator, n: int, shift: float = 0.0) -> list:
    """``n`` points ``(income, health rank, education rank)``.

    ``shift`` moves all three marginals upwards together: log-income by
    ``shift`` and the success probability of both binomial ranks by
    ``shift / 4``.
    """
    p = min(max(0.5 + shift / 4, 0.0), 1.0)
    income = np.round(rng.lognormal(7.5 + shift, 0.6, n))
    health = rng.binomial(len(HEALTH_LEVELS) - 1, p, n)
    education = rng.binomial(len(EDUCATION_LEVELS) - 1, p, n)
    return [tuple(float(c) for c in row) for row in np.stack([income, health, education], 1)]


def small_mixed_points(rng: np.random.Generator, n: int) -> list:
    """Points on a coarse grid: one cardinal value in 0..3 and one 3-level ordinal."""
    card = rng.integers(0, 4, n)
    ordn = rng.integers(0, 3, n)
    return [(float(a), float(b)) for a, b in zip(card, ordn)]


def write_welfare_csv(path, n: int = 100, m: int = 100, shift: float = 0.25, seed: int = 20240601) -> Path:
    """Write a two-group welfare CSV; group A is shifted upwards by ``shift``."""
    rng = np.random.default_rng(seed)
    rows = [("A", p) for p in welfare_points(rng, n, shift)]
    rows += [("B", p) for p in welfare_points(rng, m, 0.0)]
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "group", "income", "health", "education"])
        for i, (g, (inc, h, e)) in enumerate(rows, start=1):
            w.writerow([i, g, int(inc), HEALTH_LEVELS[int(h)], EDUCATION_LEVELS[int(e)]])
    return path


def bundled_dataset() -> Path:
    """Path of the CSV shipped with the package."""
    return Path(str(resources.files("gsdtest") / "data" / BUNDLED_CSV))


def bundled_cli_args() -> list:
    """CLI flags describing the columns of :func:`bundled_dataset`."""
    return [
        "--input", str(bundled_dataset()),
        "--group-col", "group",
        "--groups", ",".join(BUNDLED_GROUPS),
        "--cardinal", "income",
        "--ordinal", "health:" + "<".join(HEALTH_LEVELS),
        "--ordinal", "education:" + "<".join(EDUCATION_LEVELS),
    ]

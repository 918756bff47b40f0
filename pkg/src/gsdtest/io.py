"""CSV ingestion, run manifests and result files."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from gsdtest.core import Point, ScaleSchema
from gsdtest.errors import (
    EmptyGroup,
    FileError,
    NonFiniteNumber,
    SchemaError,
    UnknownLevel,
)
from gsdtest.permutation import TestConfig, TestReport, pvalue_curve

MANIFEST_VERSION = 1


def tool_version() -> str:
    from importlib.metadata import PackageNotFoundError, version

    try:
        return version("artifact")
    except PackageNotFoundError:
        return "0+unknown"


@dataclass(frozen=True)
class DatasetSpec:
    """Where the data lives and how each column is scaled.

    ``bounds`` maps every used column to ``(lower, upper)``; ordinal bounds
    are level labels. It is all or nothing: either every column has a bound
    or bounds are synthesized from the data.
    """

    path: str
    group_col: str
    groups: tuple
    cardinal: tuple = ()
    ordinal: tuple = ()  # ((name, (level, ...)), ...), lowest level first
    bounds: Optional[tuple] = None  # ((name, lower, upper), ...)

    def __post_init__(self):
        object.__setattr__(self, "path", str(self.path))
        object.__setattr__(self, "groups", tuple(self.groups))
        object.__setattr__(self, "cardinal", tuple(self.cardinal))
        object.__setattr__(
            self, "ordinal", tuple((name, tuple(levels)) for name, levels in self.ordinal)
        )
        if len(self.groups) != 2 or self.groups[0] == self.groups[1]:
            raise ValueError("groups must be two distinct labels")
        cols = self.columns
        if not cols:
            raise ValueError("at least one cardinal or ordinal column is required")
        if len(set(cols)) != len(cols) or self.group_col in cols:
            raise ValueError("group, cardinal and ordinal columns must be disjoint")
        for name, levels in self.ordinal:
            if len(levels) < 2:
                raise ValueError(f"ordinal column {name!r} needs at least 2 levels")
            if len(set(levels)) != len(levels):
                raise ValueError(f"ordinal column {name!r} repeats a level")
        if self.bounds is not None:
            b = tuple((name, lo, hi) for name, lo, hi in self.bounds)
            object.__setattr__(self, "bounds", b)
            if sorted(name for name, _, _ in b) != sorted(cols):
                raise ValueError("bounds must be given for every used column or for none")

    @property
    def columns(self) -> tuple:
        return self.cardinal + tuple(name for name, _ in self.ordinal)

    def schema(self) -> ScaleSchema:
        return ScaleSchema(
            r=len(self.columns),
            z=len(self.cardinal),
            ordinal_levels=tuple(levels for _, levels in self.ordinal),
        )

    def bound_points(self) -> Optional[tuple]:
        """Bounds as ``(lower_point, upper_point)`` in column order, ranks for ordinals."""
        if self.bounds is None:
            return None
        by_name = {name: (lo, hi) for name, lo, hi in self.bounds}
        levels = dict(self.ordinal)
        lo_pt, hi_pt = [], []
        for name in self.cardinal:
            lo, hi = by_name[name]
            lo_pt.append(_cardinal(str(lo), None, name))
            hi_pt.append(_cardinal(str(hi), None, name))
        for name, _ in self.ordinal:
            lo, hi = by_name[name]
            lo_pt.append(_rank(str(lo), levels[name], None, name))
            hi_pt.append(_rank(str(hi), levels[name], None, name))
        return tuple(lo_pt), tuple(hi_pt)

    def to_dict(self) -> dict:
        return {
            "path": self.path,
            "group_col": self.group_col,
            "groups": list(self.groups),
            "cardinal": list(self.cardinal),
            "ordinal": [[name, list(levels)] for name, levels in self.ordinal],
            "bounds": None if self.bounds is None else [list(b) for b in self.bounds],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DatasetSpec":
        return cls(
            path=doc["path"],
            group_col=doc["group_col"],
            groups=doc["groups"],
            cardinal=doc["cardinal"],
            ordinal=[(name, levels) for name, levels in doc["ordinal"]],
            bounds=None if doc["bounds"] is None else [tuple(b) for b in doc["bounds"]],
        )


def _cardinal(cell: str, row, col) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise SchemaError(f"cannot parse {cell!r} as a number", row, col) from None
    if not math.isfinite(value):
        raise NonFiniteNumber(f"non-finite value {cell!r}", row, col)
    return value


def _rank(cell: str, levels: tuple, row, col) -> int:
    try:
        return levels.index(cell)
    except ValueError:
        raise UnknownLevel(f"level {cell!r} is not one of {list(levels)}", row, col) from None


def ingest(spec: DatasetSpec) -> tuple:
    """Read ``spec.path`` into ``(xs, ys, schema)``.

    Points list cardinal columns first, then ordinal ranks, each in the order
    declared in ``spec``. Rows whose group label is neither of ``spec.groups``
    are skipped; a missing value in any used column is an error. Row numbers
    in errors count the header as row 1.
    """
    path = Path(spec.path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError) as exc:
        raise FileError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise SchemaError("file is empty")
    header = [h.strip() for h in rows[0]]
    index = {}
    for col in (spec.group_col,) + spec.columns:
        if col not in header:
            raise SchemaError("column not found in header", 1, col)
        index[col] = header.index(col)

    levels = dict(spec.ordinal)
    xs, ys = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not any(cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise SchemaError(f"expected {len(header)} fields, got {len(row)}", lineno)
        label = row[index[spec.group_col]].strip()
        if label == "":
            raise SchemaError("missing value", lineno, spec.group_col)
        if label not in spec.groups:
            continue
        point = []
        for col in spec.columns:
            cell = row[index[col]].strip()
            if cell == "":
                raise SchemaError("missing value", lineno, col)
            if col in levels:
                point.append(float(_rank(cell, levels[col], lineno, col)))
            else:
                point.append(_cardinal(cell, lineno, col))
        (xs if label == spec.groups[0] else ys).append(tuple(point))
    for label, pts in zip(spec.groups, (xs, ys)):
        if not pts:
            raise EmptyGroup(f"group {label!r} has no rows in {path}")
    return xs, ys, spec.schema()


def _canonical(doc) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


def compute_digest(spec: DatasetSpec, config: TestConfig) -> str:
    """SHA-256 over the input file bytes, the column spec and the test config.

    The file path itself is left out so moving a file keeps its digest.
    """
    h = hashlib.sha256()
    try:
        h.update(Path(spec.path).read_bytes())
    except OSError as exc:
        raise FileError(f"cannot read {spec.path}: {exc}") from exc
    dataset = spec.to_dict()
    dataset.pop("path")
    h.update(_canonical({"dataset": dataset, "config": config.to_dict()}))
    return h.hexdigest()


@dataclass(frozen=True)
class RunManifest:
    dataset: DatasetSpec
    config: TestConfig
    version: str
    timestamp: str
    digest: str

    @classmethod
    def create(cls, dataset: DatasetSpec, config: TestConfig) -> "RunManifest":
        return cls(
            dataset=dataset,
            config=config,
            version=tool_version(),
            timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
            digest=compute_digest(dataset, config),
        )

    def verify(self) -> bool:
        return compute_digest(self.dataset, self.config) == self.digest

    def to_dict(self) -> dict:
        return {
            "manifest_version": MANIFEST_VERSION,
            "dataset": self.dataset.to_dict(),
            "config": self.config.to_dict(),
            "version": self.version,
            "timestamp": self.timestamp,
            "digest": self.digest,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RunManifest":
        if doc.get("manifest_version") != MANIFEST_VERSION:
            raise ValueError(f"unsupported manifest version {doc.get('manifest_version')!r}")
        return cls(
            dataset=DatasetSpec.from_dict(doc["dataset"]),
            config=TestConfig(**doc["config"]),
            version=doc["version"],
            timestamp=doc["timestamp"],
            digest=doc["digest"],
        )


def write_json(path: Path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_report(path) -> TestReport:
    return TestReport.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def read_manifest(path) -> RunManifest:
    return RunManifest.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def write_resamples(path: Path, report: TestReport) -> None:
    """Long-format resample distribution: one line per (eps, resample)."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epsilon", "resample", "statistic", "observed"])
        for r in report.results:
            for i, v in enumerate(r.resamples.tolist()):
                w.writerow([repr(r.epsilon), i, repr(v), repr(r.observed)])


def write_curve(path: Path, report: TestReport, gammas, alpha: float) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epsilon", "gamma", "p_value", "reject"])
        for eps, curve in pvalue_curve(report, gammas).items():
            for g, p in curve:
                w.writerow([repr(eps), repr(g), repr(p), int(report.reject(eps, g))])


def write_report_files(out: Path, report: TestReport, config: TestConfig, suffix: str = "") -> list:
    out = Path(out)
    paths = [out / f"report{suffix}.json", out / f"resamples{suffix}.csv", out / f"pvalue_curve{suffix}.csv"]
    write_json(paths[0], report.to_dict())
    write_resamples(paths[1], report)
    write_curve(paths[2], report, config.gammas, config.alpha)
    return paths

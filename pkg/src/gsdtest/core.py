"""Mixed-scale points and the preference system they induce.

Points live in ``R^r`` where the first ``z`` coordinates are cardinal and the
remaining ``r - z`` are ordinal. Ordinal coordinates are stored as integer
ranks (0 = lowest declared level). Two relations are defined on such points:

* ``R1`` -- componentwise dominance, ``a >= b`` in every coordinate.
* ``R2`` -- a relation on pairs ``(a, b)`` of ``R1``: the pair ``(x, y)`` is
  at least as large an improvement as ``(x', y')`` when every cardinal
  difference ``x_j - y_j`` is at least ``x'_j - y'_j`` and every ordinal
  coordinate is nested, ``x_j >= x'_j >= y'_j >= y_j``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from gsdtest.errors import DegenerateBounds, InvalidBounds, SchemaMismatch

Point = tuple  # tuple[float, ...] of length r


class Relation(str, enum.Enum):
    STRICTLY_ABOVE = "strictly_above"
    INDIFFERENT = "indifferent"
    STRICTLY_BELOW = "strictly_below"
    INCOMPARABLE = "incomparable"
    NOT_APPLICABLE = "not_applicable"


@dataclass(frozen=True)
class ScaleSchema:
    """Declares which dimensions are cardinal and how ordinal levels are ordered.

    Attributes:
        r: total number of dimensions.
        z: number of leading cardinal dimensions.
        ordinal_levels: one tuple of level labels per ordinal dimension,
            lowest level first.
    """

    r: int
    z: int
    ordinal_levels: tuple = ()

    def __post_init__(self):
        levels = tuple(tuple(lv) for lv in self.ordinal_levels)
        object.__setattr__(self, "ordinal_levels", levels)
        if self.r < 1:
            raise SchemaMismatch(f"r must be positive, got {self.r}")
        if not 0 <= self.z <= self.r:
            raise SchemaMismatch(f"z must satisfy 0 <= z <= r, got z={self.z}, r={self.r}")
        if len(levels) != self.r - self.z:
            raise SchemaMismatch(
                f"expected {self.r - self.z} ordinal level lists, got {len(levels)}"
            )
        for j, lv in enumerate(levels):
            if len(lv) < 2:
                raise SchemaMismatch(f"ordinal dimension {self.z + j} needs >= 2 levels")
            if len(set(lv)) != len(lv):
                raise SchemaMismatch(f"duplicate level labels in ordinal dimension {self.z + j}")

    @classmethod
    def cardinal(cls, r: int) -> "ScaleSchema":
        return cls(r=r, z=r)

    @classmethod
    def from_level_counts(cls, z: int, counts: Sequence[int]) -> "ScaleSchema":
        """Schema whose ordinal levels are simply ``0, 1, ..., k-1``."""
        return cls(r=z + len(counts), z=z, ordinal_levels=tuple(tuple(range(k)) for k in counts))

    @property
    def n_ordinal(self) -> int:
        return self.r - self.z

    def rank(self, dim: int, label) -> int:
        """Rank of ``label`` in ordinal dimension ``dim`` (absolute index)."""
        levels = self.ordinal_levels[dim - self.z]
        try:
            return levels.index(label)
        except ValueError:
            raise SchemaMismatch(f"unknown level {label!r} in dimension {dim}") from None

    def validate(self, point: Iterable) -> Point:
        """Return ``point`` as a tuple of floats, raising if it does not conform."""
        coords = tuple(point)
        if len(coords) != self.r:
            raise SchemaMismatch(f"expected {self.r} coordinates, got {len(coords)}")
        out = []
        for j, c in enumerate(coords):
            try:
                c = float(c)
            except (TypeError, ValueError):
                raise SchemaMismatch(f"coordinate {j} is not numeric: {c!r}") from None
            if not math.isfinite(c):
                raise SchemaMismatch(f"coordinate {j} is not finite: {c!r}")
            if j >= self.z:
                k = len(self.ordinal_levels[j - self.z])
                if c != int(c) or not 0 <= c < k:
                    raise SchemaMismatch(
                        f"coordinate {j} must be a rank in 0..{k - 1}, got {c!r}"
                    )
            out.append(c)
        return tuple(out)


def _dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    return all(x >= y for x, y in zip(a, b))


def r1_compare(a: Point, b: Point, schema: ScaleSchema) -> Relation:
    """Compare two points under componentwise dominance."""
    a = schema.validate(a)
    b = schema.validate(b)
    ab, ba = _dominates(a, b), _dominates(b, a)
    if ab and ba:
        return Relation.INDIFFERENT
    if ab:
        return Relation.STRICTLY_ABOVE
    if ba:
        return Relation.STRICTLY_BELOW
    return Relation.INCOMPARABLE


def r2_holds(pair1, pair2, z: int) -> bool:
    """Whether ``pair1`` is R2-related to ``pair2`` (no validation, no R1 check)."""
    (x, y), (xp, yp) = pair1, pair2
    for j in range(len(x)):
        if j < z:
            if x[j] - y[j] < xp[j] - yp[j]:
                return False
        elif not (x[j] >= xp[j] >= yp[j] >= y[j]):
            return False
    return True


def r2_compare(pair1, pair2, schema: ScaleSchema) -> Relation:
    """Compare two pairs of points under R2.

    Both pairs must be elements of R1 (first component dominates the second);
    otherwise ``NOT_APPLICABLE`` is returned.
    """
    p1 = (schema.validate(pair1[0]), schema.validate(pair1[1]))
    p2 = (schema.validate(pair2[0]), schema.validate(pair2[1]))
    if not (_dominates(*p1) and _dominates(*p2)):
        return Relation.NOT_APPLICABLE
    fwd = r2_holds(p1, p2, schema.z)
    bwd = r2_holds(p2, p1, schema.z)
    if fwd and bwd:
        return Relation.INDIFFERENT
    if fwd:
        return Relation.STRICTLY_ABOVE
    if bwd:
        return Relation.STRICTLY_BELOW
    return Relation.INCOMPARABLE


@dataclass(frozen=True, eq=False)
class PooledSample:
    """Distinct pooled points with per-group multiplicities.

    ``points[0]`` is the lower bound and ``points[1]`` the upper bound; the
    remaining points are sorted lexicographically by ordinal ranks, then by
    cardinal coordinates.
    """

    schema: ScaleSchema
    points: np.ndarray  # (s, r) float
    count_x: np.ndarray  # (s,) int
    count_y: np.ndarray  # (s,) int
    bounds_synthesized: bool = False
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for name in ("points", "count_x", "count_y"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(
            self, "_index", {tuple(p): i for i, p in enumerate(self.points.tolist())}
        )

    @property
    def s(self) -> int:
        return len(self.points)

    @property
    def n(self) -> int:
        return int(self.count_x.sum())

    @property
    def m(self) -> int:
        return int(self.count_y.sum())

    @property
    def lower(self) -> Point:
        return tuple(self.points[0].tolist())

    @property
    def upper(self) -> Point:
        return tuple(self.points[1].tolist())

    def index_of(self, point: Point) -> int:
        return self._index[tuple(float(c) for c in point)]

    def point(self, i: int) -> Point:
        return tuple(self.points[i].tolist())

    def with_counts(self, count_x, count_y) -> "PooledSample":
        """Same ground set with different group counts."""
        return PooledSample(self.schema, self.points, count_x, count_y, self.bounds_synthesized)

    def swapped(self) -> "PooledSample":
        return self.with_counts(self.count_y, self.count_x)

    def __eq__(self, other):
        if not isinstance(other, PooledSample):
            return NotImplemented
        return (
            self.schema == other.schema
            and self.bounds_synthesized == other.bounds_synthesized
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.count_x, other.count_x)
            and np.array_equal(self.count_y, other.count_y)
        )

    __hash__ = None


def build_pooled(
    xs: Sequence[Point],
    ys: Sequence[Point],
    schema: ScaleSchema,
    bounds: Optional[tuple] = None,
) -> PooledSample:
    """Pool two samples into their distinct points plus lower/upper bounds.

    When ``bounds`` is omitted the componentwise minimum and maximum over all
    data points are used, whether or not they were observed.
    """
    if len(xs) < 1 or len(ys) < 1:
        raise ValueError("both samples must be non-empty")
    xs = [schema.validate(p) for p in xs]
    ys = [schema.validate(p) for p in ys]
    data = np.array(xs + ys, dtype=float).reshape(-1, schema.r)

    if bounds is None:
        lo = tuple(data.min(axis=0).tolist())
        hi = tuple(data.max(axis=0).tolist())
        synthesized = True
    else:
        lo, hi = (schema.validate(b) for b in bounds)
        synthesized = False
        if not (np.all(data >= np.array(lo)) and np.all(data <= np.array(hi))):
            raise InvalidBounds("supplied bounds do not enclose every data point")
        if not _dominates(hi, lo):
            raise InvalidBounds("upper bound does not dominate lower bound")
    if lo == hi:
        raise DegenerateBounds("lower and upper bound coincide (all points identical)")

    others = sorted({p for p in xs + ys} - {lo, hi})
    if others:
        arr = np.array(others, dtype=float)
        # primary key: ordinal ranks left to right, then cardinal coordinates
        keys = [arr[:, j] for j in reversed(range(schema.z))]
        keys += [arr[:, j] for j in reversed(range(schema.z, schema.r))]
        arr = arr[np.lexsort(keys)]
        others = [tuple(p) for p in arr.tolist()]
    points = [lo, hi] + others
    index = {p: i for i, p in enumerate(points)}
    cx = np.zeros(len(points), dtype=np.int64)
    cy = np.zeros(len(points), dtype=np.int64)
    for p in xs:
        cx[index[p]] += 1
    for p in ys:
        cy[index[p]] += 1
    return PooledSample(schema, np.array(points, dtype=float), cx, cy, synthesized)

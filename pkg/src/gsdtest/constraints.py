"""Linear constraint system over representation values of the pooled points.

For pooled points ``z_0 = a_*, z_1 = a^*, z_2, ..., z_{s-1}`` the system
constrains weights ``v_0..v_{s-1}`` and a separation threshold ``xi``::

    v_0 = 0, v_1 = 1
    v_i - v_j >= xi                      for (z_i, z_j) strictly R1-related
    v_k - v_l - v_r + v_t >= xi          for ((z_k, z_l), (z_r, z_t)) strictly R2-related
    v_k - v_l - v_r + v_t  = 0           for R2-indifferent pairs of pairs

Rows are stored as integer index arrays rather than Python objects: R1 rows
as ``(i, j)`` and R2 rows as raw quadruples ``(k, l, r, t)`` whose
coefficients ``(+1, -1, -1, +1)`` are summed when materialised.

The system depends only on the distinct pooled points, never on the group
counts, so it is built once and shared by every resample.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np
import scipy.sparse as sp

from gsdtest.core import PooledSample, Relation, r1_compare, r2_compare

R1_INDIFFERENCE = "R1-indifference"
R1_STRICT = "R1-strict"
R2_INDIFFERENCE = "R2-indifference"
R2_STRICT = "R2-strict"


class Row(NamedTuple):
    coeffs: dict  # variable index -> coefficient
    xi: bool  # whether xi enters with coefficient -1
    kind: str  # ">=" or "="
    tag: str


def _as_rows(a, width):
    return np.asarray(a, dtype=np.int64).reshape(-1, width)


@dataclass(frozen=True, eq=False)
class ConstraintSet:
    s: int
    r1_strict: np.ndarray  # (a, 2) rows v_i - v_j >= xi
    r2_strict: np.ndarray  # (b, 4) rows v_k - v_l - v_r + v_t >= xi
    r2_indiff: np.ndarray  # (c, 4) rows v_k - v_l - v_r + v_t = 0
    r1_indiff: np.ndarray = field(default_factory=lambda: np.empty((0, 2), np.int64))
    fixed: tuple = ((0, 0.0), (1, 1.0))
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "r1_strict", _as_rows(self.r1_strict, 2))
        object.__setattr__(self, "r1_indiff", _as_rows(self.r1_indiff, 2))
        object.__setattr__(self, "r2_strict", _as_rows(self.r2_strict, 4))
        object.__setattr__(self, "r2_indiff", _as_rows(self.r2_indiff, 4))
        for name in ("r1_strict", "r1_indiff", "r2_strict", "r2_indiff"):
            getattr(self, name).setflags(write=False)
        for name in ("r1_strict", "r1_indiff", "r2_strict", "r2_indiff"):
            arr = getattr(self, name)
            if arr.size and (arr.min() < 0 or arr.max() >= self.s):
                raise ValueError(f"{name} references a variable outside 0..{self.s - 1}")

    def __eq__(self, other):
        if not isinstance(other, ConstraintSet):
            return NotImplemented
        return self.s == other.s and all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("r1_strict", "r1_indiff", "r2_strict", "r2_indiff")
        )

    __hash__ = None

    def rows(self) -> Iterator[Row]:
        for i, j in self.r1_indiff.tolist():
            yield Row({i: 1, j: -1}, False, "=", R1_INDIFFERENCE)
        for i, j in self.r1_strict.tolist():
            yield Row({i: 1, j: -1}, True, ">=", R1_STRICT)
        for q in self.r2_indiff.tolist():
            yield Row(_quad_coeffs(q), False, "=", R2_INDIFFERENCE)
        for q in self.r2_strict.tolist():
            yield Row(_quad_coeffs(q), True, ">=", R2_STRICT)

    def dump(self) -> str:
        """Plain-text listing, one provenance-tagged constraint per line."""
        lines = [f"# s={self.s}"]
        for idx, val in self.fixed:
            lines.append(f"fixed: v{idx} = {val:g}")
        for row in self.rows():
            terms = []
            for idx in sorted(row.coeffs):
                c = row.coeffs[idx]
                sign = "+" if c > 0 else "-"
                mag = "" if abs(c) == 1 else f"{abs(c)}*"
                terms.append(f"{sign} {mag}v{idx}")
            lhs = " ".join(terms).lstrip("+ ")
            if row.xi:
                lhs += " - xi"
            lines.append(f"{row.tag}: {lhs} {row.kind} 0")
        return "\n".join(lines) + "\n"


def _quad_coeffs(q) -> dict:
    k, l, r, t = q
    out: dict = {}
    for idx, c in ((k, 1), (l, -1), (r, -1), (t, 1)):
        out[idx] = out.get(idx, 0) + c
    return {i: c for i, c in out.items() if c != 0}


def quad_matrix(quads: np.ndarray, s: int) -> sp.csr_matrix:
    """Sparse coefficient matrix for quadruple rows ``v_k - v_l - v_r + v_t``."""
    quads = _as_rows(quads, 4)
    n = len(quads)
    rows = np.repeat(np.arange(n), 4)
    vals = np.tile(np.array([1.0, -1.0, -1.0, 1.0]), n)
    mat = sp.coo_matrix((vals, (rows, quads.ravel())), shape=(n, s))
    mat.sum_duplicates()
    mat.eliminate_zeros()
    return mat.tocsr()


def pair_matrix(pairs: np.ndarray, s: int) -> sp.csr_matrix:
    pairs = _as_rows(pairs, 2)
    n = len(pairs)
    rows = np.repeat(np.arange(n), 2)
    vals = np.tile(np.array([1.0, -1.0]), n)
    return sp.coo_matrix((vals, (rows, pairs.ravel())), shape=(n, s)).tocsr()


def dominance_matrix(points: np.ndarray) -> np.ndarray:
    """``D[i, j]`` is True when point i dominates point j componentwise."""
    return np.all(points[:, None, :] >= points[None, :, :], axis=2)


def transitive_reduction(strict: np.ndarray) -> np.ndarray:
    """Hasse diagram of a strict partial order given as a boolean matrix."""
    m = strict.astype(np.int32)
    two_step = (m @ m) > 0
    return strict & ~two_step


def _canonical_keys(quads: np.ndarray, symmetric: bool) -> np.ndarray:
    k, l, r, t = (quads[:, i].copy() for i in range(4))
    cancel = k == r
    k[cancel] = -1
    r[cancel] = -1
    cancel = t == l
    t[cancel] = -1
    l[cancel] = -1
    plus = np.sort(np.stack([k, t], axis=1), axis=1)
    minus = np.sort(np.stack([l, r], axis=1), axis=1)
    if symmetric:
        # an equality row and its negation are the same constraint
        swap = (plus[:, 0] > minus[:, 0]) | (
            (plus[:, 0] == minus[:, 0]) & (plus[:, 1] > minus[:, 1])
        )
        plus[swap], minus[swap] = minus[swap].copy(), plus[swap].copy()
    return np.concatenate([plus, minus], axis=1)


def _dedup(quads: np.ndarray, symmetric: bool) -> np.ndarray:
    if len(quads) == 0:
        return quads
    keys = _canonical_keys(quads, symmetric)
    _, first = np.unique(keys, axis=0, return_index=True)
    return quads[np.sort(first)]


def _covers(hasse: np.ndarray) -> np.ndarray:
    """Row i lists the j with ``hasse[i, j]``, padded with -1."""
    lists = [np.flatnonzero(row) for row in hasse]
    width = max((len(x) for x in lists), default=0)
    out = -np.ones((len(lists), max(width, 1)), np.int64)
    for i, x in enumerate(lists):
        out[i, : len(x)] = x
    return out


def build_constraints(pooled: PooledSample, schema=None, reduce: bool = True) -> ConstraintSet:
    """Materialise the constraint system for a pooled sample.

    R1-strict rows are transitively reduced (chains imply the rest since
    ``xi >= 0``). R2 pairs of pairs are enumerated with sorted pruning: the
    dominating element ``z_r`` of the inner pair must lie between ``z_l``
    and ``z_k`` in the first ordinal dimension, so candidates come from a
    contiguous window of pairs sorted by that rank.

    With ``reduce`` a strict R2 row is dropped when moving one of its four
    points a single covering step (``k`` or ``t`` down, ``l`` or ``r`` up)
    still yields a weakly R2-related quadruple: the moved row holds with
    slack ``>= 0`` and the R1 step contributes ``>= xi``. Rows surviving this
    test are minimal; everything dropped follows from them, the R1 rows and
    the R2 equalities.
    """
    schema = schema or pooled.schema
    pts = np.asarray(pooled.points, dtype=float)
    s = len(pts)
    z, r = schema.z, schema.r

    dom = dominance_matrix(pts)
    strict = dom & ~np.eye(s, dtype=bool)
    hasse = transitive_reduction(strict)
    r1_rows = np.argwhere(hasse)
    lower = _covers(hasse)
    upper = _covers(hasse.T)

    card = pts[:, :z]
    ordn = pts[:, z:]

    def weak_r2(k, l, rr, tt):
        ok = dom[k, l] & dom[rr, tt]
        if r > z:
            ok = ok & np.all(ordn[k] >= ordn[rr], axis=-1) & np.all(ordn[tt] >= ordn[l], axis=-1)
        if z:
            ok = ok & np.all(card[k] - card[l] >= card[rr] - card[tt], axis=-1)
        return ok

    K, L = np.nonzero(strict)
    npairs = len(K)
    strict_q, indiff_q = [], []
    evaluated = enumerated = 0
    if npairs:
        if r > z:
            order = np.argsort(ordn[K, 0], kind="stable")
            K_s, L_s = K[order], L[order]
            key = ordn[K_s, 0]
        else:
            K_s, L_s = K, L
        cd = card[K_s] - card[L_s]
        for k, l in zip(K.tolist(), L.tolist()):
            if r > z:
                lo = np.searchsorted(key, ordn[l, 0], side="left")
                hi = np.searchsorted(key, ordn[k, 0], side="right")
            else:
                lo, hi = 0, npairs
            if hi <= lo:
                continue
            evaluated += hi - lo
            rr, tt = K_s[lo:hi], L_s[lo:hi]
            ok = ~((rr == k) & (tt == l))
            if r > z:
                ok &= np.all(ordn[k] >= ordn[rr], axis=1)
                ok &= np.all(ordn[tt] >= ordn[l], axis=1)
            if z:
                ok &= np.all(card[k] - card[l] >= cd[lo:hi], axis=1)
            if not ok.any():
                continue
            rr, tt, cdw = rr[ok], tt[ok], cd[lo:hi][ok]
            same = np.ones(len(rr), bool)
            if r > z:
                same &= np.all(ordn[rr] == ordn[k], axis=1)
                same &= np.all(ordn[tt] == ordn[l], axis=1)
            if z:
                same &= np.all(card[k] - card[l] == cdw, axis=1)
            if same.any():
                indiff_q.append(np.stack([np.full(same.sum(), k), np.full(same.sum(), l),
                                          rr[same], tt[same]], axis=1))
            rr, tt = rr[~same], tt[~same]
            enumerated += len(rr)
            keep = (rr != k) & (tt != l)  # two-term rows coincide with R1 rows
            if reduce:
                for kk in lower[k][lower[k] >= 0]:
                    keep &= ~weak_r2(kk, l, rr, tt)
                for ll in upper[l][upper[l] >= 0]:
                    keep &= ~weak_r2(k, ll, rr, tt)
                for c in range(upper.shape[1]):
                    r2_ = upper[rr, c]
                    m = keep & (r2_ >= 0)
                    keep[m] &= ~weak_r2(k, l, r2_[m], tt[m])
                for c in range(lower.shape[1]):
                    t2 = lower[tt, c]
                    m = keep & (t2 >= 0)
                    keep[m] &= ~weak_r2(k, l, rr[m], t2[m])
            if keep.any():
                strict_q.append(np.stack([np.full(keep.sum(), k), np.full(keep.sum(), l),
                                          rr[keep], tt[keep]], axis=1))
        evaluated -= npairs  # the self-comparison in each window is not a candidate

    r2s = np.concatenate(strict_q) if strict_q else np.empty((0, 4), np.int64)
    r2i = np.concatenate(indiff_q) if indiff_q else np.empty((0, 4), np.int64)
    r2s = _dedup(r2s, symmetric=False)
    r2i = _dedup(r2i, symmetric=True)

    stats = {
        "r1_strict_closure": int(npairs),
        "r2_strict_enumerated": int(enumerated),
        "candidate_comparisons": int(npairs * (npairs - 1)),
        "evaluated_comparisons": int(max(evaluated, 0)),
    }
    return ConstraintSet(s=s, r1_strict=r1_rows, r2_strict=r2s, r2_indiff=r2i, stats=stats)


def naive_constraints(pooled: PooledSample) -> ConstraintSet:
    """Unreduced quadruple-loop enumeration, used as an oracle.

    Every ordered pair and pair-of-pairs is classified with the scalar
    :func:`~gsdtest.core.r1_compare` / :func:`~gsdtest.core.r2_compare`,
    including reflexive pairs. Nothing is pruned, reduced or deduplicated.
    """
    schema = pooled.schema
    pts = [pooled.point(i) for i in range(pooled.s)]
    s = len(pts)
    r1s, r1i, r2s, r2i = [], [], [], []
    r1_pairs = []
    for i, j in itertools.product(range(s), repeat=2):
        rel = r1_compare(pts[i], pts[j], schema)
        if rel in (Relation.STRICTLY_ABOVE, Relation.INDIFFERENT):
            r1_pairs.append((i, j))
        if rel is Relation.STRICTLY_ABOVE:
            r1s.append((i, j))
        elif rel is Relation.INDIFFERENT and i != j:
            r1i.append((i, j))
    for (k, l), (r_, t) in itertools.product(r1_pairs, repeat=2):
        rel = r2_compare((pts[k], pts[l]), (pts[r_], pts[t]), schema)
        if rel is Relation.STRICTLY_ABOVE:
            r2s.append((k, l, r_, t))
        elif rel is Relation.INDIFFERENT:
            r2i.append((k, l, r_, t))
    return ConstraintSet(s=s, r1_strict=r1s, r1_indiff=r1i, r2_strict=r2s, r2_indiff=r2i)


def constraint_stats(cs: ConstraintSet) -> dict:
    """Row counts per provenance tag and the pruning ratio of the R2 enumeration."""
    total = cs.stats.get("candidate_comparisons", 0)
    evaluated = cs.stats.get("evaluated_comparisons", total)
    return {
        R1_INDIFFERENCE: int(len(cs.r1_indiff)),
        R1_STRICT: int(len(cs.r1_strict)),
        R2_INDIFFERENCE: int(len(cs.r2_indiff)),
        R2_STRICT: int(len(cs.r2_strict)),
        "R1-strict-closure": int(cs.stats.get("r1_strict_closure", len(cs.r1_strict))),
        "R2-strict-enumerated": int(cs.stats.get("r2_strict_enumerated", len(cs.r2_strict))),
        "pruning_ratio": (total - evaluated) / total if total else 0.0,
    }

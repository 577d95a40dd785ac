"""Labeled-leg tensor algebra over exact Gaussian rationals.

A LegMatrix is a square operator on an ordered tensor product of labeled
auxiliary legs.  Leg order is part of the identity of the object: two
matrices with permuted legs are different objects, related by an explicit
permutation operation.  Multi-indices are row-major in leg order; this
convention is normative for the JSON file format.

Storage is dense in semantics (every entry of the d x d array is defined)
but rows are kept as column->value maps with zeros implicit, so that
products of operators that act on few legs cost time proportional to the
nonzero structure.  All public accessors present the dense view.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from .scalars import ONE, QQi, ZERO

__all__ = [
    "Leg",
    "IndexSet",
    "LegMatrix",
    "SingularMatrixError",
    "kron",
    "embed",
    "permutation_operator",
]


class SingularMatrixError(ValueError):
    """Exact Gaussian elimination hit a zero pivot column."""

    def __init__(self, stage):
        self.stage = stage
        super().__init__(f"singular matrix: no pivot at elimination stage {stage}")


@dataclass(frozen=True, order=True)
class Leg:
    """One auxiliary-space factor: an opaque ordered label and its dimension."""

    id: str
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"leg {self.id!r}: dimension must be positive")


class IndexSet:
    """An ordered sequence of pairwise-distinct legs.

    Supports the reversal and head/tail-drop operations the fusion
    recursions need, plus optional per-leg spectral-parameter metadata.
    """

    __slots__ = ("legs", "spectral")

    def __init__(self, legs: Sequence[Leg], spectral: dict | None = None):
        legs = tuple(legs)
        ids = [l.id for l in legs]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate leg labels in index set: {ids}")
        self.legs = legs
        self.spectral = dict(spectral) if spectral else {}

    # -- sequence protocol --------------------------------------------------

    def __len__(self):
        return len(self.legs)

    def __iter__(self):
        return iter(self.legs)

    def __getitem__(self, i):
        return self.legs[i]

    def __eq__(self, other):
        return isinstance(other, IndexSet) and self.legs == other.legs

    def __hash__(self):
        return hash(self.legs)

    def __repr__(self):
        return "IndexSet(" + ",".join(str(l.id) for l in self.legs) + ")"

    def ids(self):
        return tuple(l.id for l in self.legs)

    def dims(self):
        return tuple(l.dim for l in self.legs)

    def dim(self):
        d = 1
        for l in self.legs:
            d *= l.dim
        return d

    def position(self, leg_id) -> int:
        for k, l in enumerate(self.legs):
            if l.id == leg_id:
                return k
        raise KeyError(f"leg {leg_id!r} not in {self}")

    # -- set calculus used by fusion ---------------------------------------

    def reversed(self):
        return IndexSet(tuple(reversed(self.legs)), self.spectral)

    def drop_head(self):
        """The set deprived of its first (lowest) element."""
        if not self.legs:
            raise ValueError("cannot drop from an empty index set")
        return IndexSet(self.legs[1:], self.spectral)

    def drop_tail(self):
        """The set deprived of its last (highest) element."""
        if not self.legs:
            raise ValueError("cannot drop from an empty index set")
        return IndexSet(self.legs[:-1], self.spectral)

    def concat(self, other: "IndexSet"):
        merged = dict(self.spectral)
        merged.update(other.spectral)
        return IndexSet(self.legs + other.legs, merged)

    def is_subset_of(self, other: "IndexSet"):
        return set(self.ids()) <= set(other.ids())


def _strides(dims):
    s = [1] * len(dims)
    for k in range(len(dims) - 2, -1, -1):
        s[k] = s[k + 1] * dims[k + 1]
    return s


class LegMatrix:
    """Dense square operator on the tensor product of an IndexSet's legs."""

    __slots__ = ("legs", "rows", "_dims", "_strides")

    def __init__(self, legs: IndexSet, rows=None):
        self.legs = legs
        self._dims = legs.dims()
        self._strides = _strides(self._dims)
        d = legs.dim()
        if rows is None:
            rows = [dict() for _ in range(d)]
        if len(rows) != d:
            raise ValueError(f"expected {d} rows, got {len(rows)}")
        self.rows = rows

    # -- construction -------------------------------------------------------

    @classmethod
    def identity(cls, legs: IndexSet):
        m = cls(legs)
        for r in range(legs.dim()):
            m.rows[r][r] = ONE
        return m

    @classmethod
    def zeros(cls, legs: IndexSet):
        return cls(legs)

    @classmethod
    def from_entries(cls, legs: IndexSet, entries):
        """Build from a dense row-major list of d*d scalars."""
        d = legs.dim()
        if len(entries) != d * d:
            raise ValueError(f"expected {d * d} entries, got {len(entries)}")
        m = cls(legs)
        for r in range(d):
            row = m.rows[r]
            base = r * d
            for c in range(d):
                v = entries[base + c]
                if v:
                    row[c] = v
        return m

    @classmethod
    def from_dict(cls, legs: IndexSet, entries: dict):
        m = cls(legs)
        for (r, c), v in entries.items():
            if v:
                m.rows[r][c] = v
        return m

    # -- indexing -----------------------------------------------------------

    def dim(self):
        return len(self.rows)

    def ravel(self, multi) -> int:
        return sum(a * s for a, s in zip(multi, self._strides))

    def unravel(self, flat: int):
        out = []
        for s in self._strides:
            out.append(flat // s)
            flat %= s
        return tuple(out)

    def entry(self, r, c) -> QQi:
        if not isinstance(r, int):
            r = self.ravel(r)
        if not isinstance(c, int):
            c = self.ravel(c)
        return self.rows[r].get(c, ZERO)

    def dense_entries(self):
        """Row-major list of all d*d entries (the normative file layout)."""
        d = self.dim()
        out = []
        for r in range(d):
            row = self.rows[r]
            out.extend(row.get(c, ZERO) for c in range(d))
        return out

    def nnz(self):
        return sum(len(r) for r in self.rows)

    # -- algebra ------------------------------------------------------------

    def _require_same_legs(self, other):
        if self.legs.legs != other.legs.legs:
            raise ValueError(f"leg mismatch: {self.legs} vs {other.legs}")

    def __add__(self, other):
        self._require_same_legs(other)
        out = LegMatrix(self.legs)
        for r in range(self.dim()):
            row = dict(self.rows[r])
            for c, v in other.rows[r].items():
                w = row.get(c)
                s = v if w is None else w + v
                if s:
                    row[c] = s
                elif w is not None:
                    del row[c]
            out.rows[r] = row
        return out

    def __sub__(self, other):
        return self + other.scalar_mul(QQi(-1))

    def __neg__(self):
        return self.scalar_mul(QQi(-1))

    def scalar_mul(self, s: QQi):
        out = LegMatrix(self.legs)
        if not s:
            return out
        for r in range(self.dim()):
            out.rows[r] = {c: s * v for c, v in self.rows[r].items()}
        return out

    def __matmul__(self, other):
        self._require_same_legs(other)
        out = LegMatrix(self.legs)
        orows = other.rows
        for r in range(self.dim()):
            acc: dict = {}
            for k, x in self.rows[r].items():
                xr, xi = x.re, x.im
                if not xi:
                    for c, y in orows[k].items():
                        prev = acc.get(c)
                        z = QQi(xr * y.re, xr * y.im) if y.im else QQi(xr * y.re)
                        acc[c] = z if prev is None else prev + z
                else:
                    for c, y in orows[k].items():
                        prev = acc.get(c)
                        z = x * y
                        acc[c] = z if prev is None else prev + z
            out.rows[r] = {c: v for c, v in acc.items() if v}
        return out

    def __eq__(self, other):
        if not isinstance(other, LegMatrix):
            return NotImplemented
        if self.legs.legs != other.legs.legs:
            return False
        for r in range(self.dim()):
            a, b = self.rows[r], other.rows[r]
            for c in a.keys() | b.keys():
                if a.get(c, ZERO) != b.get(c, ZERO):
                    return False
        return True

    def is_zero(self):
        return all(not v for row in self.rows for v in row.values())

    def is_identity(self):
        return self == LegMatrix.identity(self.legs)

    def first_mismatch(self, other):
        """(row_multi, col_multi, self_val, other_val) of the first differing
        entry, or None when equal."""
        for r in range(self.dim()):
            a, b = self.rows[r], other.rows[r]
            for c in sorted(a.keys() | b.keys()):
                va, vb = a.get(c, ZERO), b.get(c, ZERO)
                if va != vb:
                    return (self.unravel(r), self.unravel(c), va, vb)
        return None

    def proportional_to_identity(self):
        """The scalar z with self == z*Id, or None."""
        z = self.entry(0, 0)
        d = self.dim()
        for r in range(d):
            row = self.rows[r]
            for c, v in row.items():
                if c != r and v:
                    return None
            if row.get(r, ZERO) != z:
                return None
        return z

    def inverse(self):
        """Exact inverse by Gaussian elimination with row pivoting."""
        d = self.dim()
        a = [[self.rows[r].get(c, ZERO) for c in range(d)] for r in range(d)]
        inv = [[ONE if r == c else ZERO for c in range(d)] for r in range(d)]
        for col in range(d):
            piv = None
            for r in range(col, d):
                if a[r][col]:
                    piv = r
                    break
            if piv is None:
                raise SingularMatrixError(col)
            if piv != col:
                a[col], a[piv] = a[piv], a[col]
                inv[col], inv[piv] = inv[piv], inv[col]
            p = a[col][col].inverse()
            a[col] = [p * v for v in a[col]]
            inv[col] = [p * v for v in inv[col]]
            for r in range(d):
                if r == col:
                    continue
                f = a[r][col]
                if not f:
                    continue
                a[r] = [v - f * w for v, w in zip(a[r], a[col])]
                inv[r] = [v - f * w for v, w in zip(inv[r], inv[col])]
        out = LegMatrix(self.legs)
        for r in range(d):
            out.rows[r] = {c: v for c, v in enumerate(inv[r]) if v}
        return out

    # -- leg operations -----------------------------------------------------

    def permute_legs(self, sigma: Sequence[int]):
        """Conjugate by the permutation operator of `sigma`.

        `sigma` maps result positions to source positions: the entry of the
        result at multi-index (a_0..a_{L-1}) equals the source entry at the
        multi-index whose position sigma[k] holds a_k.  For two legs,
        permute_legs(A, (1, 0)) is the matrix usually written A_21.
        """
        L = len(self._dims)
        if sorted(sigma) != list(range(L)):
            raise ValueError(f"invalid permutation {sigma} for {L} legs")
        for k in range(L):
            if self._dims[k] != self._dims[sigma[k]]:
                raise ValueError("permutation mixes legs of unequal dimension")
        out = LegMatrix(self.legs)

        def src(multi):
            # result slot k reads from source slot sigma[k]
            m = [0] * L
            for k in range(L):
                m[sigma[k]] = multi[k]
            return self.ravel(tuple(m))

        fwd = {src(self.unravel(i)): i for i in range(self.dim())}
        for r in range(self.dim()):
            srow = self.rows[src(self.unravel(r))]
            out.rows[r] = {fwd[c]: v for c, v in srow.items()}
        return out

    def reordered(self, target: IndexSet):
        """The same operator presented with its legs in `target` order.

        `target` must hold exactly this matrix's legs, possibly permuted.
        Entries are re-raveled accordingly; no conjugation happens — this is
        a change of presentation, not of the operator.
        """
        if sorted(target.ids()) != sorted(self.legs.ids()):
            raise ValueError(f"target {target} is not a permutation of {self.legs}")
        perm = [self.legs.position(i) for i in target.ids()]
        out = LegMatrix(target)
        for r in range(self.dim()):
            rm = self.unravel(r)
            nr = out.ravel(tuple(rm[p] for p in perm))
            row = out.rows[nr]
            for c, v in self.rows[r].items():
                cm = self.unravel(c)
                row[out.ravel(tuple(cm[p] for p in perm))] = v
        return out

    def partial_transpose(self, leg_ids: Iterable):
        """Swap row and column indices on the selected legs only."""
        pos = [self.legs.position(i) for i in set(leg_ids)]
        out = LegMatrix(self.legs)
        for r in range(self.dim()):
            rm = self.unravel(r)
            for c, v in self.rows[r].items():
                cm = list(self.unravel(c))
                nrm = list(rm)
                for p in pos:
                    nrm[p], cm[p] = cm[p], nrm[p]
                out.rows[self.ravel(tuple(nrm))][self.ravel(tuple(cm))] = v
        return out

    def transpose(self):
        return self.partial_transpose(self.legs.ids())

    def partial_trace(self, leg_ids: Iterable):
        """Sum diagonal entries over the selected legs.

        The result lives on the remaining legs (a 1x1 matrix on the empty
        index set when every leg is traced; see `trace`).
        """
        traced = set(leg_ids)
        pos = [self.legs.position(i) for i in traced]
        keep = [k for k in range(len(self._dims)) if k not in pos]
        out_legs = IndexSet(
            [self.legs[k] for k in keep],
            {i: v for i, v in self.legs.spectral.items() if i not in traced},
        )
        out = LegMatrix(out_legs)
        for r in range(self.dim()):
            rm = self.unravel(r)
            for c, v in self.rows[r].items():
                cm = self.unravel(c)
                if any(rm[p] != cm[p] for p in pos):
                    continue
                orow = out.ravel(tuple(rm[k] for k in keep))
                ocol = out.ravel(tuple(cm[k] for k in keep))
                prev = out.rows[orow].get(ocol)
                s = v if prev is None else prev + v
                if s:
                    out.rows[orow][ocol] = s
                elif prev is not None:
                    del out.rows[orow][ocol]
        return out

    def trace(self) -> QQi:
        t = ZERO
        for r in range(self.dim()):
            v = self.rows[r].get(r)
            if v is not None:
                t = t + v
        return t

    # -- serialization ------------------------------------------------------

    def to_json_obj(self):
        return {
            "legs": [{"id": l.id, "dim": l.dim} for l in self.legs],
            "entries": [v.to_quad() for v in self.dense_entries()],
        }

    def to_json(self):
        return json.dumps(self.to_json_obj(), sort_keys=True)

    @classmethod
    def from_json_obj(cls, obj):
        legs = IndexSet([Leg(str(l["id"]), int(l["dim"])) for l in obj["legs"]])
        entries = [QQi.from_quad(q) for q in obj["entries"]]
        return cls.from_entries(legs, entries)

    @classmethod
    def from_json(cls, text):
        return cls.from_json_obj(json.loads(text))

    def __repr__(self):
        return f"LegMatrix({self.legs!r}, dim={self.dim()}, nnz={self.nnz()})"


# -- free functions ---------------------------------------------------------


def kron(x: LegMatrix, y: LegMatrix) -> LegMatrix:
    """Tensor product on the concatenated index sets; legs must be disjoint."""
    if set(x.legs.ids()) & set(y.legs.ids()):
        raise ValueError("kron requires disjoint leg label sets")
    legs = x.legs.concat(y.legs)
    out = LegMatrix(legs)
    dy = y.dim()
    for rx in range(x.dim()):
        for cx, vx in x.rows[rx].items():
            for ry in range(dy):
                orow = out.rows[rx * dy + ry]
                for cy, vy in y.rows[ry].items():
                    orow[cx * dy + cy] = vx * vy
    return out


def embed(x: LegMatrix, target: IndexSet) -> LegMatrix:
    """Realize subscript notation: x acting on a sub-collection of `target`.

    x is tensored with the identity on absent legs and its legs are moved to
    their positions in `target`.
    """
    tids = target.ids()
    xids = x.legs.ids()
    missing = [i for i in xids if i not in tids]
    if missing:
        raise ValueError(f"legs {missing} of operand not in target {target}")
    xpos = [target.position(i) for i in xids]
    other = [k for k in range(len(target)) if k not in xpos]
    tdims = target.dims()
    out = LegMatrix(target)
    # enumerate assignments of the identity legs
    free_dims = [tdims[k] for k in other]
    free_count = 1
    for d in free_dims:
        free_count *= d
    fstrides = _strides(free_dims)

    def free_multi(f):
        return [(f // s) % d for s, d in zip(fstrides, free_dims)] if free_dims else []

    tstrides = _strides(tdims)
    for rx in range(x.dim()):
        rxm = x.unravel(rx)
        for cx, vx in x.rows[rx].items():
            cxm = x.unravel(cx)
            for f in range(free_count):
                fm = free_multi(f)
                row = [0] * len(tdims)
                col = [0] * len(tdims)
                for p, a, b in zip(xpos, rxm, cxm):
                    row[p], col[p] = a, b
                for p, a in zip(other, fm):
                    row[p] = col[p] = a
                r = sum(a * s for a, s in zip(row, tstrides))
                c = sum(a * s for a, s in zip(col, tstrides))
                out.rows[r][c] = vx
    return out


def permutation_operator(legs: IndexSet, sigma: Sequence[int] | None = None) -> LegMatrix:
    """The operator sending basis vector e_b to e_{sigma(b)}.

    Default sigma is the transposition of two legs (the operator usually
    written P_12); general sigma maps result positions to source positions.
    """
    L = len(legs)
    if sigma is None:
        if L != 2:
            raise ValueError("default permutation needs exactly two legs")
        sigma = (1, 0)
    out = LegMatrix(legs)
    for c in range(legs.dim()):
        cm = out.unravel(c)
        r = out.ravel(tuple(cm[sigma[k]] for k in range(L)))
        out.rows[r][c] = ONE
    return out

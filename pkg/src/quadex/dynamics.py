"""Parameter-dependent matrices, leg-keyed shifts, and difference operators.

Matrices whose entries depend on a point lambda in the Cartan dual (plus
named extra parameters) are handled by exact evaluation at rational sample
points, never by symbolic rational-function arithmetic.  Dynamical shifts
lambda -> lambda + gamma*h keyed on a leg become entrywise evaluations at
shifted points, keyed by the row (SL) or column (SC) index of that leg.

Shift operators S_mu (lambda -> lambda + gamma*mu) generate a normal-ordered
difference-operator algebra with composition
    (c S_mu)(d S_nu) = c(lambda) d(lambda + gamma*mu) S_{mu+nu}.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Sequence

from gmpy2 import mpq

from .scalars import ONE, QQi, ZERO
from .tensor import IndexSet, LegMatrix, embed

__all__ = [
    "Context",
    "DynMatrix",
    "DiffOp",
    "ShiftMatrix",
    "AmbiguousShiftError",
    "WeightTagError",
    "exp_D",
    "sl_sc",
    "push_through",
    "dyn_transpose",
    "trace_cyclic_check",
    "diffop_equal",
    "dyn_equal",
    "shiftmatrix_equal",
    "verify_weight_tags",
    "require_weight_tags",
    "sample_contexts",
]


class AmbiguousShiftError(ValueError):
    """Leg-keyed shift on a leg where row and column keying disagree and no
    explicit SL/SC mode was given."""


class WeightTagError(ValueError):
    """A declared zero-weight tag failed verification."""


@dataclass(frozen=True)
class Context:
    """One exact evaluation point: coordinates lambda_i, the shift step gamma,
    and named extra parameters (spectral parameters, coupling constants)."""

    lam: tuple | None
    gamma: QQi = ONE
    extra: tuple = ()

    @property
    def n(self):
        return len(self.lam) if self.lam is not None else 0

    def coord(self, i) -> QQi:
        return self.lam[i]

    def get(self, name) -> QQi:
        for k, v in self.extra:
            if k == name:
                return v
        raise KeyError(f"context has no parameter {name!r}")

    def with_extra(self, **kv):
        d = dict(self.extra)
        d.update(kv)
        return Context(self.lam, self.gamma, tuple(sorted(d.items())))

    def shifted(self, mu: Sequence[int]):
        """The point lambda + gamma*mu."""
        if not any(mu):
            return self
        if self.lam is None:
            raise ValueError("cannot shift a context without coordinates")
        lam = tuple(l + self.gamma * m if m else l for l, m in zip(self.lam, mu))
        return Context(lam, self.gamma, self.extra)


def sample_contexts(rng: random.Random, count, n, gamma=ONE, extras=(), bound=10**4):
    """Generic rational sample points for identity checking.

    Coordinates are random rationals with numerator/denominator up to
    `bound`; a draw is rejected when any difference lambda_i - lambda_j lands
    on the pole lattice {0, +-gamma, +-2gamma, +-3gamma}.  `extras` names
    additional scalar parameters drawn the same way.
    """
    gamma = gamma if isinstance(gamma, QQi) else QQi(gamma)
    lattice = [QQi(gamma.re * k, gamma.im * k) for k in (-3, -2, -1, 0, 1, 2, 3)]

    def draw():
        return QQi(mpq(rng.randint(-bound, bound), rng.randint(1, bound)))

    out = []
    while len(out) < count:
        lam = tuple(draw() for _ in range(n))
        ok = True
        for i in range(n):
            for j in range(i + 1, n):
                if any(lam[i] - lam[j] == z for z in lattice):
                    ok = False
        if not ok:
            continue
        extra = tuple(sorted((name, draw()) for name in extras))
        out.append(Context(lam, gamma, extra))
    return out


class DynMatrix:
    """An evaluable map Context -> LegMatrix with declared weight metadata.

    `diag_legs` lists legs on which the matrix commutes with every Cartan
    generator (equivalently: it is diagonal in that leg's index).  `zw_groups`
    lists groups of legs carrying total zero weight: nonzero entries have
    identical unordered multisets of row and column indices over the group.
    Tags are verified by `verify_weight_tags`, not trusted.
    """

    __slots__ = ("legs", "fn", "name", "diag_legs", "zw_groups", "_cache")

    def __init__(self, legs: IndexSet, fn: Callable[[Context], LegMatrix],
                 name="", diag_legs=(), zw_groups=()):
        self.legs = legs
        self.fn = fn
        self.name = name
        self.diag_legs = frozenset(diag_legs)
        self.zw_groups = tuple(frozenset(g) for g in zw_groups)
        self._cache: dict = {}

    @classmethod
    def constant(cls, mat: LegMatrix, name="", diag_legs=(), zw_groups=()):
        return cls(mat.legs, lambda ctx: mat, name, diag_legs, zw_groups)

    @classmethod
    def identity(cls, legs: IndexSet):
        mat = LegMatrix.identity(legs)
        return cls(legs, lambda ctx: mat, "Id",
                   diag_legs=legs.ids(), zw_groups=[legs.ids()])

    def __call__(self, ctx: Context) -> LegMatrix:
        hit = self._cache.get(ctx)
        if hit is None:
            hit = self.fn(ctx)
            self._cache[ctx] = hit
        return hit

    def _merge_tags(self, other):
        return (self.diag_legs & other.diag_legs,
                tuple(g for g in self.zw_groups if g in other.zw_groups))

    def __matmul__(self, other: "DynMatrix"):
        d, z = self._merge_tags(other)
        return DynMatrix(self.legs, lambda ctx: self(ctx) @ other(ctx),
                         f"({self.name}@{other.name})", d, z)

    def __add__(self, other: "DynMatrix"):
        return DynMatrix(self.legs, lambda ctx: self(ctx) + other(ctx),
                         f"({self.name}+{other.name})")

    def __sub__(self, other: "DynMatrix"):
        return DynMatrix(self.legs, lambda ctx: self(ctx) - other(ctx),
                         f"({self.name}-{other.name})")

    def scalar_mul(self, s):
        fn = s if callable(s) else (lambda ctx: s)
        return DynMatrix(self.legs, lambda ctx: self(ctx).scalar_mul(fn(ctx)),
                         f"(s*{self.name})", self.diag_legs, self.zw_groups)

    def inverse(self):
        return DynMatrix(self.legs, lambda ctx: self(ctx).inverse(),
                         f"{self.name}^-1", self.diag_legs, self.zw_groups)

    def partial_transpose(self, leg_ids):
        ids = tuple(leg_ids)
        return DynMatrix(self.legs, lambda ctx: self(ctx).partial_transpose(ids),
                         f"{self.name}^t{ids}", self.diag_legs, self.zw_groups)

    def transpose(self):
        return self.partial_transpose(self.legs.ids())

    def permute_legs(self, sigma):
        sigma = tuple(sigma)
        # single-leg diagonality is permutation-invariant only leg-wise;
        # conservatively drop tags (callers re-tag and verify)
        return DynMatrix(self.legs, lambda ctx: self(ctx).permute_legs(sigma),
                         f"{self.name}^pi{sigma}")

    def reordered(self, target: IndexSet):
        return DynMatrix(target, lambda ctx: self(ctx).reordered(target),
                         self.name, self.diag_legs, self.zw_groups)

    def embedded(self, target: IndexSet):
        new_ids = set(target.ids()) - set(self.legs.ids())
        return DynMatrix(target, lambda ctx: embed(self(ctx), target),
                         self.name,
                         self.diag_legs | new_ids,
                         self.zw_groups + tuple(frozenset([i]) for i in new_ids))

    def with_tags(self, diag_legs=None, zw_groups=None):
        return DynMatrix(
            self.legs, self.fn, self.name,
            self.diag_legs if diag_legs is None else diag_legs,
            self.zw_groups if zw_groups is None else zw_groups)

    def renamed(self, name):
        out = DynMatrix(self.legs, self.fn, name, self.diag_legs, self.zw_groups)
        out._cache = self._cache
        return out

    def const_shifted(self, mu):
        """Evaluate at lambda + gamma*mu for a fixed integer vector mu."""
        mu = tuple(mu)
        return DynMatrix(self.legs, lambda ctx: self(ctx.shifted(mu)),
                         f"{self.name}(+{mu})", self.diag_legs, self.zw_groups)

    def leg_shifted(self, keyed_leg_ids, sign=1, mode="auto"):
        """Entrywise evaluation at lambda + sign*gamma*h over the keyed legs.

        The shift vector of an entry adds sign units to coordinate i for every
        keyed leg whose index equals i, with the index read from the row
        (mode "SL"), the column (mode "SC"), or either with a consistency
        check (mode "auto" — raises AmbiguousShiftError on disagreement).
        """
        ids = tuple(keyed_leg_ids)
        pos = [self.legs.position(i) for i in ids]
        if mode not in ("auto", "SL", "SC"):
            raise ValueError(f"unknown shift mode {mode!r}")

        def ev(ctx, keying):
            n = ctx.n
            for p in pos:
                if self.legs[p].dim != n:
                    raise ValueError(
                        f"leg {self.legs[p].id!r} has dim {self.legs[p].dim}, "
                        f"but the context has {n} coordinates")
            out = LegMatrix(self.legs)
            if keying == "row":
                for r in range(out.dim()):
                    rm = out.unravel(r)
                    mu = [0] * n
                    for p in pos:
                        mu[rm[p]] += sign
                    out.rows[r] = dict(self(ctx.shifted(mu)).rows[r])
            else:
                by_mu: dict = {}
                for c in range(out.dim()):
                    cm = out.unravel(c)
                    mu = [0] * n
                    for p in pos:
                        mu[cm[p]] += sign
                    by_mu.setdefault(tuple(mu), []).append(c)
                for mu, cols in by_mu.items():
                    mat = self(ctx.shifted(mu))
                    for r in range(out.dim()):
                        src = mat.rows[r]
                        dst = out.rows[r]
                        for c in cols:
                            v = src.get(c)
                            if v is not None:
                                dst[c] = v
            return out

        def fn(ctx):
            if mode == "SL":
                return ev(ctx, "row")
            if mode == "SC":
                return ev(ctx, "col")
            a, b = ev(ctx, "row"), ev(ctx, "col")
            if a != b:
                w = a.first_mismatch(b)
                raise AmbiguousShiftError(
                    f"shift of {self.name!r} keyed on legs {ids} is ambiguous "
                    f"(row/column keying disagree at entry {w[0]},{w[1]}); "
                    "pass an explicit SL or SC mode")
            return a

        return DynMatrix(self.legs, fn,
                         f"{self.name}({'+' if sign > 0 else '-'}h_{ids})",
                         self.diag_legs, self.zw_groups)

    def __repr__(self):
        return f"DynMatrix({self.name or '?'}, legs={self.legs!r})"


def sl_sc(x: DynMatrix, leg_ids, mode, sign=1) -> DynMatrix:
    """The SL (row-keyed, +gamma) / SC (column-keyed, -gamma) shifted matrix.

    sl_sc(x, legs, "SL") has entries x_{ab} evaluated at lambda with one unit
    of gamma added to the coordinate named by each keyed row index; "SC"
    subtracts one unit keyed by column indices.  `sign=-1` inverts either.
    """
    if mode == "SL":
        return x.leg_shifted(leg_ids, sign=sign, mode="SL")
    if mode == "SC":
        return x.leg_shifted(leg_ids, sign=-sign, mode="SC")
    raise ValueError(f"mode must be 'SL' or 'SC', got {mode!r}")


def dyn_equal(x: DynMatrix, y: DynMatrix, ctxs):
    """Exact entrywise comparison at every context; (equal, witness)."""
    for ctx in ctxs:
        a, b = x(ctx), y(ctx)
        if a != b:
            return False, (ctx,) + a.first_mismatch(b)
    return True, None


def verify_weight_tags(x: DynMatrix, ctxs) -> list:
    """Check declared weight tags against evaluations; returns findings."""
    findings = []
    for ctx in ctxs:
        m = x(ctx)
        for leg in sorted(x.diag_legs):
            p = x.legs.position(leg)
            for r in range(m.dim()):
                rm = m.unravel(r)
                for c, v in m.rows[r].items():
                    if v and m.unravel(c)[p] != rm[p]:
                        findings.append(
                            (x.name, f"leg {leg!r} not zero-weight",
                             m.unravel(r), m.unravel(c)))
                        break
        for grp in x.zw_groups:
            pos = [x.legs.position(i) for i in grp]
            for r in range(m.dim()):
                rm = m.unravel(r)
                for c, v in m.rows[r].items():
                    cm = m.unravel(c)
                    if v and sorted(rm[p] for p in pos) != sorted(cm[p] for p in pos):
                        findings.append(
                            (x.name, f"group {tuple(sorted(grp))} not total zero-weight",
                             rm, cm))
                        break
    return findings


def require_weight_tags(x: DynMatrix, ctxs):
    findings = verify_weight_tags(x, ctxs)
    if findings:
        raise WeightTagError(f"{findings[0][0]}: {findings[0][1]} "
                             f"(entry {findings[0][2]},{findings[0][3]})")


# -- difference operators ----------------------------------------------------


class DiffOp:
    """A finite sum of terms c(lambda) S_mu, normal-ordered (all shifts on
    the right).  Coefficients stay unevaluated; `eval` produces the exact
    {mu: coefficient} table at one context."""

    __slots__ = ("_fn", "_cache")

    def __init__(self, evalfn: Callable[[Context], dict]):
        self._fn = evalfn
        self._cache: dict = {}

    @classmethod
    def zero(cls):
        return cls(lambda ctx: {})

    @classmethod
    def scalar(cls, s):
        fn = s if callable(s) else (lambda ctx: s)

        def ev(ctx):
            v = fn(ctx)
            return {(0,) * ctx.n: v} if v else {}

        return cls(ev)

    @classmethod
    def shift(cls, mu, coeff=None):
        mu = tuple(mu)
        fn = coeff if callable(coeff) else (lambda ctx: ONE if coeff is None else coeff)

        def ev(ctx):
            v = fn(ctx)
            return {mu: v} if v else {}

        return cls(ev)

    def eval(self, ctx: Context) -> dict:
        hit = self._cache.get(ctx)
        if hit is None:
            hit = {mu: v for mu, v in self._fn(ctx).items() if v}
            self._cache[ctx] = hit
        return hit

    def __add__(self, other):
        def ev(ctx):
            out = dict(self.eval(ctx))
            for mu, v in other.eval(ctx).items():
                w = out.get(mu)
                out[mu] = v if w is None else w + v
            return out

        return DiffOp(ev)

    def __sub__(self, other):
        return self + other.scalar_mul(QQi(-1))

    def scalar_mul(self, s):
        return DiffOp(lambda ctx: {mu: s * v for mu, v in self.eval(ctx).items()})

    def __mul__(self, other):
        """Composition: (c S_mu)(d S_nu) = c d(lambda+gamma*mu) S_{mu+nu}."""

        def ev(ctx):
            out: dict = {}
            for mu, c in self.eval(ctx).items():
                shifted = ctx.shifted(mu)
                for nu, d in other.eval(shifted).items():
                    key = tuple(a + b for a, b in zip(mu, nu))
                    w = out.get(key)
                    z = c * d
                    out[key] = z if w is None else w + z
            return out

        return DiffOp(ev)

    def commutator(self, other):
        return self * other - other * self

    def dump(self, ctxs) -> list:
        """Regression-baseline form: per shift vector, exact coefficient
        values at the given points."""
        shifts = sorted({mu for ctx in ctxs for mu in self.eval(ctx)})
        return [
            {
                "shift": list(mu),
                "coeff_at": [
                    {"lambda": [v.to_quad() for v in ctx.lam],
                     "value": self.eval(ctx).get(mu, ZERO).to_quad()}
                    for ctx in ctxs
                ],
            }
            for mu in shifts
        ]


def diffop_equal(p: DiffOp, q: DiffOp, ctxs):
    """Exact coefficient-wise comparison at every context.

    Returns (equal, witness); witness is (mu, ctx, p_value, q_value) for the
    first disagreement.
    """
    for ctx in ctxs:
        a, b = p.eval(ctx), q.eval(ctx)
        for mu in sorted(a.keys() | b.keys()):
            va, vb = a.get(mu, ZERO), b.get(mu, ZERO)
            if va != vb:
                return False, (mu, ctx, va, vb)
    return True, None


# -- shift-operator-valued matrices ------------------------------------------


class ShiftMatrix:
    """A square matrix whose entries are difference operators.

    Evaluation at a context yields "op-rows": list over rows of
    {col: {mu: coefficient}}, with all coefficients evaluated at that
    context (shifts normal-ordered to the right).  Multiplication composes
    entries with the difference-operator law, which forces the right factor
    to be re-evaluated at shifted contexts — hence the lazy representation.
    """

    __slots__ = ("legs", "_fn", "_cache")

    def __init__(self, legs: IndexSet, evalfn):
        self.legs = legs
        self._fn = evalfn
        self._cache: dict = {}

    def eval(self, ctx: Context):
        hit = self._cache.get(ctx)
        if hit is None:
            hit = self._fn(ctx)
            self._cache[ctx] = hit
        return hit

    @classmethod
    def from_dyn(cls, x: DynMatrix):
        def ev(ctx):
            m = x(ctx)
            zero = (0,) * ctx.n
            return [{c: {zero: v} for c, v in row.items()} for row in m.rows]

        return cls(x.legs, ev)

    @classmethod
    def identity(cls, legs: IndexSet):
        def ev(ctx):
            zero = (0,) * ctx.n
            return [{r: {zero: ONE}} for r in range(legs.dim())]

        return cls(legs, ev)

    def __matmul__(self, other: "ShiftMatrix"):
        if self.legs.legs != other.legs.legs:
            raise ValueError("leg mismatch in ShiftMatrix product")

        def ev(ctx):
            left = self.eval(ctx)
            rights: dict = {}
            d = len(left)
            out = [dict() for _ in range(d)]
            for r in range(d):
                acc = out[r]
                for k, ops in left[r].items():
                    for mu, c in ops.items():
                        rmat = rights.get(mu)
                        if rmat is None:
                            rmat = other.eval(ctx.shifted(mu))
                            rights[mu] = rmat
                        for c2, ops2 in rmat[k].items():
                            cell = acc.setdefault(c2, {})
                            for nu, dcoef in ops2.items():
                                key = tuple(a + b for a, b in zip(mu, nu))
                                w = cell.get(key)
                                z = c * dcoef
                                cell[key] = z if w is None else w + z
            # drop exact zeros
            for row in out:
                for c2 in list(row):
                    row[c2] = {m: v for m, v in row[c2].items() if v}
                    if not row[c2]:
                        del row[c2]
            return out

        return ShiftMatrix(self.legs, ev)

    def __sub__(self, other):
        def ev(ctx):
            a = self.eval(ctx)
            b = other.eval(ctx)
            out = []
            for ra, rb in zip(a, b):
                row: dict = {}
                for c in ra.keys() | rb.keys():
                    cell: dict = {}
                    for mu, v in ra.get(c, {}).items():
                        cell[mu] = v
                    for mu, v in rb.get(c, {}).items():
                        w = cell.get(mu, ZERO) - v
                        if w:
                            cell[mu] = w
                        elif mu in cell:
                            del cell[mu]
                    if cell:
                        row[c] = cell
                out.append(row)
            return out

        return ShiftMatrix(self.legs, ev)

    def transpose(self):
        """Plain entry transposition; operator entries are untouched."""

        def ev(ctx):
            src = self.eval(ctx)
            out = [dict() for _ in src]
            for r, row in enumerate(src):
                for c, cell in row.items():
                    out[c][r] = cell
            return out

        return ShiftMatrix(self.legs, ev)

    def trace(self) -> DiffOp:
        def ev(ctx):
            out: dict = {}
            for r, row in enumerate(self.eval(ctx)):
                for mu, v in row.get(r, {}).items():
                    w = out.get(mu)
                    out[mu] = v if w is None else w + v
            return out

        return DiffOp(ev)

    def is_zero_at(self, ctx):
        return all(not cell for row in self.eval(ctx) for cell in row.values())

    def first_nonzero(self, ctxs):
        for ctx in ctxs:
            for r, row in enumerate(self.eval(ctx)):
                for c, cell in sorted(row.items()):
                    for mu, v in sorted(cell.items()):
                        if v:
                            return (ctx, r, c, mu, v)
        return None


def shiftmatrix_equal(a: ShiftMatrix, b: ShiftMatrix, ctxs):
    w = (a - b).first_nonzero(ctxs)
    return w is None, w


def exp_D(m_set: IndexSet, sign=1) -> ShiftMatrix:
    """The diagonal shift-operator matrix with entry S_{sign*mu(a)} at a,
    where mu(a)_i counts how many legs of the multi-index a carry index i."""

    def ev(ctx):
        n = ctx.n
        for leg in m_set:
            if leg.dim != n:
                raise ValueError(
                    f"leg {leg.id!r} has dim {leg.dim}, context has {n} coordinates")
        probe = LegMatrix(m_set)
        out = []
        for a in range(m_set.dim()):
            mu = [0] * n
            for i in probe.unravel(a):
                mu[i] += sign
            out.append({a: {tuple(mu): ONE}})
        return out

    return ShiftMatrix(m_set, ev)


def push_through(x: DynMatrix, ctxs, sign=-1):
    """The matrix x_bar with e^{sign*D_G} x = x_bar e^{sign*D_G} on the
    total-zero-weight group G = all legs of x.

    Verifies total zero weight at the given contexts first; x_bar is the
    row-keyed shift of x by sign*gamma on every leg.
    """
    grp = x.legs.ids()
    probe = x.with_tags(diag_legs=(), zw_groups=[grp])
    require_weight_tags(probe, ctxs)
    return x.leg_shifted(grp, sign=sign, mode="SL")


def dyn_transpose(r: DynMatrix, s: DynMatrix, ctxs):
    """Transposition identity for shift-operator words:
    (R e^{D} S)^t = (S^SL)^t e^{D} (R^SC)^t.

    Returns (lhs, rhs, equal, witness) with both sides as ShiftMatrix.
    """
    legs = r.legs
    e = exp_D(legs, +1)
    lhs = (ShiftMatrix.from_dyn(r) @ e @ ShiftMatrix.from_dyn(s)).transpose()
    rhs = (ShiftMatrix.from_dyn(sl_sc(s, legs.ids(), "SL").transpose())
           @ e
           @ ShiftMatrix.from_dyn(sl_sc(r, legs.ids(), "SC").transpose()))
    ok, w = shiftmatrix_equal(lhs, rhs, ctxs)
    return lhs, rhs, ok, w


def trace_cyclic_check(d: DynMatrix, x: DynMatrix, ctxs):
    """Residual of Tr(D X D^{-1} e^{D_legs}) - Tr(X e^{D_legs}) for a
    total-zero-weight D; returns (equal, witness)."""
    probe = d.with_tags(diag_legs=(), zw_groups=[d.legs.ids()])
    require_weight_tags(probe, ctxs)
    e = exp_D(d.legs, +1)
    lhs = (ShiftMatrix.from_dyn(d @ x @ d.inverse()) @ e).trace()
    rhs = (ShiftMatrix.from_dyn(x) @ e).trace()
    return diffop_equal(lhs, rhs, ctxs)

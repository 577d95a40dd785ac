"""Fusion of exchange-algebra structure matrices onto tensor products of
auxiliary legs, fused solutions, and the coupling matrix linking the two
fusion procedures.

Fused matrices are built by recursion on the head of the row group (with the
regime's shift decorations); the equally valid column-split recursion is kept
as an independent cross-check (`verify_split_agreement`).  Bars on index sets
are expressed by passing reversed IndexSets.
"""

from __future__ import annotations

from .catalog import (
    FULLYDYN,
    NONDYN,
    SEMIDYN,
    StructureQuadruple,
    dual_pair,
    dualize,
)
from .dynamics import DynMatrix, dyn_equal, sl_sc
from .tensor import IndexSet, Leg

__all__ = [
    "BudgetError",
    "check_budget",
    "legs_of",
    "fuse",
    "fuse_exchange_matrix",
    "verify_split_agreement",
    "verify_fused_yb",
    "fuse_T",
    "fuse_K",
    "verify_fused_exchange",
    "verify_fused_dual_exchange",
    "build_L",
    "verify_kernel",
    "second_fusion_T",
    "second_fusion_K",
    "closed_second_T",
]

DEFAULT_BUDGET = 729


class BudgetError(ValueError):
    """A requested verification exceeds the configured dimension budget."""


def check_budget(index_sets, budget=DEFAULT_BUDGET):
    total = 1
    for s in index_sets:
        for leg in s:
            total *= leg.dim
    if total > budget:
        raise BudgetError(
            f"total dimension {total} exceeds the budget {budget}; "
            "raise the budget explicitly to run this check")
    return total


def legs_of(q: StructureQuadruple, labels) -> IndexSet:
    return IndexSet([q.leg(x) for x in labels])


def _union(*sets: IndexSet) -> IndexSet:
    legs = []
    for s in sets:
        legs.extend(list(s))
    return IndexSet(legs)


def _sh(x: DynMatrix, leg_ids) -> DynMatrix:
    ids = list(leg_ids)
    return x.leg_shifted(ids) if ids else x


def fuse(q: StructureQuadruple, which, rows: IndexSet, cols: IndexSet,
         split="row") -> DynMatrix:
    """Fused structure matrix over the ordered leg groups (rows, cols),
    on the target rows + cols.

    Bars are the caller's responsibility: pass `rows.reversed()` or
    `cols.reversed()` where the construction calls for a reversed group.
    `split` selects the recursion used at each level ("row" or "col" first);
    both must agree, which `verify_split_agreement` checks.
    """
    target = _union(rows, cols)
    if len(rows) == 1 and len(cols) == 1:
        return q._mk(which, rows[0], cols[0])
    if (len(rows) > 1 and split == "row") or len(cols) == 1:
        head, rest = rows[0], rows.drop_head()
        x1 = fuse(q, which, IndexSet([head]), cols, split).embedded(target)
        x2 = fuse(q, which, rest, cols, split).embedded(target)
        if q.regime == NONDYN:
            return x1 @ x2
        if q.regime == SEMIDYN:
            if which in ("B", "D"):
                return x1 @ _sh(x2, [head.id])
            return x1 @ x2
        if which in ("B", "D"):
            return x1 @ _sh(x2, [head.id])
        return _sh(x1, rest.ids()) @ x2
    head, rest = cols[0], cols.drop_head()
    x1 = fuse(q, which, rows, IndexSet([head]), split).embedded(target)
    x2 = fuse(q, which, rows, rest, split).embedded(target)
    if q.regime == NONDYN:
        return x1 @ x2
    if q.regime == SEMIDYN:
        if which == "C":
            return x1 @ _sh(x2, [head.id])
        if which == "D":
            return _sh(x1, rest.ids()) @ x2
        return x1 @ x2
    if which in ("A", "C"):
        # C's shift keys on the column head, mirroring B's row split; keying
        # it on the row head contradicts the fused consistency equations
        return x1 @ _sh(x2, [head.id])
    return _sh(x1, rest.ids()) @ x2


def fuse_exchange_matrix(q, which, m: IndexSet, np: IndexSet,
                         pattern="first") -> DynMatrix:
    """The fused structure matrix as it enters the fused exchange relation.

    `pattern` "first": A and D carry a reversed second group; "second"
    (the kernel-coupled relация): A and C carry a reversed first group,
    B and D a reversed second group.
    """
    if pattern == "first":
        cols = np.reversed() if which in ("A", "D") else np
        return fuse(q, which, m, cols).reordered(_union(m, np))
    if pattern == "second":
        rows = m.reversed() if which in ("A", "C") else m
        cols = np.reversed() if which in ("B", "D") else np
        return fuse(q, which, rows, cols).reordered(_union(m, np))
    raise ValueError(f"unknown pattern {pattern!r}")


def verify_split_agreement(q, which, rows, cols, ctxs):
    """Row-split and column-split recursions must build the same matrix."""
    a = fuse(q, which, rows, cols, split="row")
    b = fuse(q, which, rows, cols, split="col").reordered(a.legs)
    return dyn_equal(a, b, ctxs)


def verify_fused_yb(q, m: IndexSet, np: IndexSet, lp: IndexSet, ctxs,
                    budget=DEFAULT_BUDGET):
    """All four fused consistency equations on the leg groups (m, np, lp);
    returns a report list of {name, status, witness}."""
    check_budget([m, np, lp], budget)
    target = _union(m, np, lp)

    def f(which, rows, cols):
        return fuse(q, which, rows, cols).reordered(
            _union(rows, cols)).embedded(target)

    def sh(x, s: IndexSet):
        return _sh(x, s.ids())

    a_mn = f("A", m, np.reversed())
    a_ml = f("A", m, lp.reversed())
    a_nl = f("A", np, lp.reversed())
    c_ml, c_nl = f("C", m, lp), f("C", np, lp)
    d_mn = f("D", m, np.reversed())
    d_ml = f("D", m, lp.reversed())
    d_nl = f("D", np, lp.reversed())
    b_ml, b_nl = f("B", m, lp), f("B", np, lp)

    if q.regime == NONDYN:
        eqs = [
            ("fused-yb-A", a_mn @ a_ml @ a_nl, a_nl @ a_ml @ a_mn),
            ("fused-yb-AC", a_mn @ c_ml @ c_nl, c_nl @ c_ml @ a_mn),
            ("fused-yb-D", d_mn @ d_ml @ d_nl, d_nl @ d_ml @ d_mn),
            ("fused-yb-DB", d_mn @ b_ml @ b_nl, b_nl @ b_ml @ d_mn),
        ]
    elif q.regime == SEMIDYN:
        eqs = [
            ("fused-yb-A", a_mn @ a_ml @ a_nl, a_nl @ a_ml @ a_mn),
            ("fused-yb-AC", a_mn @ c_ml @ c_nl, c_nl @ c_ml @ sh(a_mn, lp)),
            ("fused-yb-D", sh(d_mn, lp) @ d_ml @ sh(d_nl, m),
             d_nl @ sh(d_ml, np) @ d_mn),
            ("fused-yb-DB", d_mn @ b_ml @ sh(b_nl, m),
             b_nl @ sh(b_ml, np) @ d_mn),
        ]
    else:
        eqs = [
            ("fused-yb-A", a_mn @ sh(a_ml, np) @ a_nl,
             sh(a_nl, m) @ a_ml @ sh(a_mn, lp)),
            ("fused-yb-AC", a_mn @ sh(c_ml, np) @ c_nl,
             sh(c_nl, m) @ c_ml @ sh(a_mn, lp)),
            ("fused-yb-D", sh(d_mn, lp) @ d_ml @ sh(d_nl, m),
             d_nl @ sh(d_ml, np) @ d_mn),
            ("fused-yb-DB", sh(d_mn, lp) @ b_ml @ sh(b_nl, m),
             b_nl @ sh(b_ml, np) @ d_mn),
        ]
    report = []
    for name, lhs, rhs in eqs:
        ok, w = dyn_equal(lhs, rhs, ctxs)
        report.append({"name": name, "status": "pass" if ok else "fail",
                       "witness": None if ok else repr(w)})
    return report


# -- fused solutions ---------------------------------------------------------


def _product(factors):
    out = factors[0]
    for f in factors[1:]:
        out = out @ f
    return out


def fuse_T(q, t_factory, m: IndexSet) -> DynMatrix:
    """The fused solution of the first fusion procedure on the legs of m."""
    legs = list(m)
    factors = []
    for i, leg in enumerate(legs):
        t = t_factory(leg).embedded(m)
        if q.regime == SEMIDYN:
            t = _sh(t, [l.id for l in legs[:i]])
        elif q.regime == FULLYDYN:
            t = _sh(t, [l.id for k, l in enumerate(legs) if k != i])
        factors.append(t)
        for j in range(i + 1, len(legs)):
            b = q.B(leg, legs[j]).embedded(m)
            if q.regime == SEMIDYN:
                b = _sh(b, [l.id for l in legs[:i]])
            elif q.regime == FULLYDYN:
                outside = ([l.id for l in legs[:i]]
                           + [l.id for l in legs[j + 1:]])
                b = _sh(b, outside)
            factors.append(b)
    return _product(factors)


def fuse_K(q, k_factory, m: IndexSet) -> DynMatrix:
    """The fused dual solution: same product structure as fuse_T with the
    pairwise dual of B in place of B."""
    legs = list(m)
    factors = []
    for i, leg in enumerate(legs):
        k = k_factory(leg).embedded(m)
        if q.regime == SEMIDYN:
            k = _sh(k, [l.id for l in legs[:i]])
        elif q.regime == FULLYDYN:
            k = _sh(k, [l.id for kk, l in enumerate(legs) if kk != i])
        factors.append(k)
        for j in range(i + 1, len(legs)):
            bd = dual_pair(q, "B", leg, legs[j]).embedded(m)
            if q.regime == SEMIDYN:
                bd = _sh(bd, [l.id for l in legs[:i]])
            elif q.regime == FULLYDYN:
                outside = ([l.id for l in legs[:i]]
                           + [l.id for l in legs[j + 1:]])
                bd = _sh(bd, outside)
            factors.append(bd)
    return _product(factors)


def verify_fused_exchange(q, m: IndexSet, np: IndexSet, t_m: DynMatrix,
                          t_np: DynMatrix, ctxs, pattern="first",
                          budget=DEFAULT_BUDGET):
    """Check the fused exchange relation for given fused solutions
    t_m (on m's legs) and t_np (on np's legs)."""
    check_budget([m, np], budget)
    target = _union(m, np)
    a, b, c, d = (fuse_exchange_matrix(q, w, m, np, pattern) for w in "ABCD")
    tm = t_m.embedded(target)
    tn = t_np.embedded(target)
    if q.regime == NONDYN:
        return dyn_equal(a @ tm @ b @ tn, tn @ c @ tm @ d, ctxs)
    if q.regime == SEMIDYN:
        return dyn_equal(a @ tm @ b @ _sh(tn, m.ids()),
                         tn @ c @ _sh(tm, np.ids()) @ d, ctxs)
    return dyn_equal(
        a @ _sh(tm, np.ids()) @ b @ _sh(tn, m.ids()),
        _sh(tn, m.ids()) @ c @ _sh(tm, np.ids()) @ d, ctxs)


def verify_fused_dual_exchange(q, m: IndexSet, np: IndexSet, k_m: DynMatrix,
                               k_np: DynMatrix, ctxs, pattern="first",
                               budget=DEFAULT_BUDGET):
    """Check the dual fused exchange relation, built as the dual of the
    fused structure matrices."""
    check_budget([m, np], budget)
    target = _union(m, np)
    a_d, b_d, c_d, d_d = (
        dualize(fuse_exchange_matrix(q, w, m, np, pattern), w, q.regime,
                m.ids(), np.ids())
        for w in "ABCD")
    km = k_m.embedded(target)
    kn = k_np.embedded(target)
    if q.regime == NONDYN:
        return dyn_equal(a_d @ km @ b_d @ kn, kn @ c_d @ km @ d_d, ctxs)
    if q.regime == SEMIDYN:
        return dyn_equal(a_d @ km @ b_d @ _sh(kn, m.ids()),
                         kn @ c_d @ _sh(km, np.ids()) @ d_d, ctxs)
    return dyn_equal(
        a_d @ _sh(km, np.ids()) @ b_d @ _sh(kn, m.ids()),
        _sh(kn, m.ids()) @ c_d @ _sh(km, np.ids()) @ d_d, ctxs)


# -- second fusion -----------------------------------------------------------


def build_L(q, m: IndexSet) -> DynMatrix:
    """The coupling matrix: the ordered product of all pairwise A over m."""
    legs = list(m)
    if len(legs) == 1:
        return DynMatrix.identity(m)
    factors = []
    for i, la in enumerate(legs):
        for lb in legs[i + 1:]:
            factors.append(q.A(la, lb).embedded(m))
    return _product(factors)


def verify_kernel(q, m: IndexSet, np: IndexSet, ctxs, budget=DEFAULT_BUDGET):
    """The four commutation rules coupling the two fusion procedures
    (non-dynamical and semi-dynamical regimes)."""
    if q.regime == FULLYDYN:
        raise ValueError("the coupling matrix is not defined in the fully "
                         "dynamical regime")
    check_budget([m, np], budget)
    target = _union(m, np)
    l_m = build_L(q, m).embedded(target)
    l_np = build_L(q, np).embedded(target)

    def f(which, rows, cols):
        return fuse(q, which, rows, cols).reordered(
            _union(rows, cols)).embedded(target)

    a_mn = f("A", m, np.reversed())
    semi = q.regime == SEMIDYN
    eqs = [
        ("kernel-A-left", l_m @ a_mn,
         f("A", m.reversed(), np.reversed()) @ l_m),
        ("kernel-A-right", l_np @ a_mn, f("A", m, np) @ l_np),
        ("kernel-B", l_np @ f("B", m, np),
         f("B", m, np.reversed()) @ (_sh(l_np, m.ids()) if semi else l_np)),
        ("kernel-C", l_m @ f("C", m, np),
         f("C", m.reversed(), np) @ (_sh(l_m, np.ids()) if semi else l_m)),
    ]
    report = []
    for name, lhs, rhs in eqs:
        ok, w = dyn_equal(lhs, rhs, ctxs)
        report.append({"name": name, "status": "pass" if ok else "fail",
                       "witness": None if ok else repr(w)})
    return report


def second_fusion_T(q, t_factory, m: IndexSet) -> DynMatrix:
    """Fused solution of the second (coupled) procedure: L_M times the first
    fused solution."""
    return build_L(q, m) @ fuse_T(q, t_factory, m)


def second_fusion_K(q, k_factory, m: IndexSet) -> DynMatrix:
    """Dual fused solution of the second procedure:
    (L_M^{t over m})^{-1} times the first dual fused solution."""
    lt = build_L(q, m).transpose().inverse()
    return lt @ fuse_K(q, k_factory, m)


def closed_second_T(q, t_factory, m: IndexSet) -> DynMatrix:
    """Closed product form of the second-procedure fused solution; must agree
    with second_fusion_T."""
    if q.regime == FULLYDYN:
        raise ValueError("no closed second-fusion form in the fully "
                         "dynamical regime")
    legs = list(m)
    factors = []
    for i, leg in enumerate(legs):
        before = [l.id for l in legs[:i]]

        def block(x):
            return _sh(x, before) if q.regime == SEMIDYN else x

        for lb in legs[i + 1:]:
            factors.append(block(q.A(leg, lb).embedded(m)))
        factors.append(block(t_factory(leg).embedded(m)))
        for lb in reversed(legs[i + 1:]):
            factors.append(block(q.B(leg, lb).embedded(m)))
    return _product(factors)

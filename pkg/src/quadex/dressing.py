"""Dressing factors for fused solutions: the coupling pairs (Q, S) that
multiply a fused solution from the left and right while preserving the fused
exchange relation, together with their defining commutation constraints.
"""

from __future__ import annotations

from .catalog import FULLYDYN, NONDYN, SEMIDYN, StructureQuadruple, dualize
from .dynamics import DynMatrix, dyn_equal
from .fusion import (
    DEFAULT_BUDGET,
    build_L,
    check_budget,
    fuse_exchange_matrix,
    _sh,
    _union,
)
from .tensor import IndexSet, permutation_operator

__all__ = [
    "build_Q",
    "build_S",
    "dress",
    "verify_dressing_constraints",
    "verify_dual_dressing_constraints",
    "second_fusion_Q",
    "formal_contexts",
]


def _checked(q: StructureQuadruple, which, la, lb) -> DynMatrix:
    """P_{ab} X_{ab}: the pair matrix premultiplied by the leg swap."""
    pair = IndexSet([la, lb])
    p = DynMatrix.constant(permutation_operator(pair), name="P")
    return (p @ q._mk(which, la, lb)).renamed(f"{which}v_{la.id}{lb.id}")


def build_Q(q: StructureQuadruple, m: IndexSet) -> DynMatrix:
    """Left dressing factor: the chain of swap-twisted A over neighbours."""
    legs = list(m)
    if len(legs) == 1:
        return DynMatrix.identity(m)
    out = None
    for i in range(len(legs) - 1):
        f = _checked(q, "A", legs[i], legs[i + 1]).embedded(m)
        if q.regime == FULLYDYN:
            f = _sh(f, [l.id for l in legs[i + 2:]])
        out = f if out is None else out @ f
    return out


def build_S(q: StructureQuadruple, m: IndexSet) -> DynMatrix:
    """Right dressing factor: the chain of swap-twisted D over neighbours."""
    legs = list(m)
    if len(legs) == 1:
        return DynMatrix.identity(m)
    out = None
    for i in range(len(legs) - 1):
        f = _checked(q, "D", legs[i], legs[i + 1]).embedded(m)
        if q.regime in (SEMIDYN, FULLYDYN):
            f = _sh(f, [l.id for l in legs[:i]])
        out = f if out is None else out @ f
    return out


def dress(q_m: DynMatrix, t_m: DynMatrix, s_m: DynMatrix) -> DynMatrix:
    return q_m @ t_m @ s_m


def verify_dressing_constraints(q, m: IndexSet, np: IndexSet,
                                q_m: DynMatrix, q_np: DynMatrix,
                                s_m: DynMatrix, s_np: DynMatrix,
                                ctxs, pattern="first",
                                budget=DEFAULT_BUDGET):
    """The eight commutation constraints a dressing pair must satisfy;
    returns a report list of {name, status, witness}."""
    check_budget([m, np], budget)
    target = _union(m, np)
    a, b, c, d = (fuse_exchange_matrix(q, w, m, np, pattern) for w in "ABCD")
    qm, qn = q_m.embedded(target), q_np.embedded(target)
    sm, sn = s_m.embedded(target), s_np.embedded(target)
    mi, ni = m.ids(), np.ids()

    if q.regime == NONDYN:
        eqs = [
            ("dress-QA-left", qm @ a, a @ qm),
            ("dress-QA-right", qn @ a, a @ qn),
            ("dress-QB", qn @ b, b @ qn),
            ("dress-QC", qm @ c, c @ qm),
            ("dress-SD-left", sm @ d, d @ sm),
            ("dress-SD-right", sn @ d, d @ sn),
            ("dress-SC", sn @ c, c @ sn),
            ("dress-SB", sm @ b, b @ sm),
        ]
    elif q.regime == SEMIDYN:
        eqs = [
            ("dress-QA-left", qm @ a, a @ qm),
            ("dress-QA-right", qn @ a, a @ qn),
            ("dress-QB", qn @ b, b @ _sh(qn, mi)),
            ("dress-QC", qm @ c, c @ _sh(qm, ni)),
            ("dress-SC", sn @ c, c @ sn),
            ("dress-SB", sm @ b, b @ sm),
            ("dress-SD-left", _sh(sm, ni) @ d, d @ sm),
            ("dress-SD-right", sn @ d, d @ _sh(sn, mi)),
        ]
    else:
        eqs = [
            ("dress-QA-left", qm @ a, a @ _sh(qm, ni)),
            ("dress-QA-right", _sh(qn, mi) @ a, a @ qn),
            ("dress-QB", qn @ b, b @ _sh(qn, mi)),
            ("dress-QC", qm @ c, c @ _sh(qm, ni)),
            ("dress-SC", _sh(sn, mi) @ c, c @ sn),
            ("dress-SB", _sh(sm, ni) @ b, b @ sm),
            ("dress-SD-left", _sh(sm, ni) @ d, d @ sm),
            ("dress-SD-right", sn @ d, d @ _sh(sn, mi)),
        ]
    report = []
    for name, lhs, rhs in eqs:
        ok, w = dyn_equal(lhs, rhs, ctxs)
        report.append({"name": name, "status": "pass" if ok else "fail",
                       "witness": None if ok else repr(w)})
    return report


def verify_dual_dressing_constraints(q, m: IndexSet, np: IndexSet,
                                     q_m: DynMatrix, q_np: DynMatrix,
                                     s_m: DynMatrix, s_np: DynMatrix,
                                     ctxs, budget=DEFAULT_BUDGET):
    """Transposed dressing factors must commute with the dual fused
    structure matrices (non-dynamical regime)."""
    if q.regime != NONDYN:
        raise ValueError("dual dressing constraints are only formulated in "
                         "the non-dynamical regime")
    check_budget([m, np], budget)
    target = _union(m, np)
    a_d, b_d, c_d, d_d = (
        dualize(fuse_exchange_matrix(q, w, m, np), w, q.regime,
                m.ids(), np.ids())
        for w in "ABCD")
    qm = q_m.transpose().embedded(target)
    qn = q_np.transpose().embedded(target)
    sm = s_m.transpose().embedded(target)
    sn = s_np.transpose().embedded(target)
    eqs = [
        ("dual-dress-QA-left", qm @ a_d, a_d @ qm),
        ("dual-dress-QA-right", qn @ a_d, a_d @ qn),
        ("dual-dress-QB", qn @ b_d, b_d @ qn),
        ("dual-dress-QC", qm @ c_d, c_d @ qm),
        ("dual-dress-SD-left", sm @ d_d, d_d @ sm),
        ("dual-dress-SD-right", sn @ d_d, d_d @ sn),
        ("dual-dress-SC", sn @ c_d, c_d @ sn),
        ("dual-dress-SB", sm @ b_d, b_d @ sm),
    ]
    report = []
    for name, lhs, rhs in eqs:
        ok, w = dyn_equal(lhs, rhs, ctxs)
        report.append({"name": name, "status": "pass" if ok else "fail",
                       "witness": None if ok else repr(w)})
    return report


def second_fusion_Q(q, m: IndexSet) -> DynMatrix:
    """Left dressing factor for the second fusion procedure: conjugation of
    the first-procedure factor by the coupling matrix.  The right factor is
    unchanged."""
    l_m = build_L(q, m)
    return l_m @ build_Q(q, m) @ l_m.inverse()


def formal_contexts(q, rng, count, groups, gamma=None, extra_ids=()):
    """Contexts in which all legs of each group share one spectral value.

    For spectral quadruples the neighbour-chain dressing factors satisfy
    their constraints only at coincident spectral points within each fused
    group; `groups` is an iterable of iterables of leg ids, each sharing a
    single sampled value.  `extra_ids` get independent values.
    """
    from .catalog import quadruple_contexts

    reps = [tuple(g) for g in groups]
    base = quadruple_contexts(
        q, rng, count, [g[0] for g in reps] + list(extra_ids),
        **({"gamma": gamma} if gamma is not None else {}))
    if not q.spectral:
        return base
    out = []
    for ctx in base:
        extra = dict(ctx.extra)
        for g in reps:
            for leg_id in g[1:]:
                extra[f"u:{leg_id}"] = extra[f"u:{g[0]}"]
        out.append(type(ctx)(ctx.lam, ctx.gamma, tuple(sorted(extra.items()))))
    return out

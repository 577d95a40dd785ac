"""Commuting transfer operators: traces of fused solutions against dual
solutions, their pairwise commutation, decoupling of undressed traces, the
identification of the two fusion pipelines, and screening of dual-solution
candidates.
"""

from __future__ import annotations

from dataclasses import dataclass

from .catalog import (
    FULLYDYN,
    NONDYN,
    SEMIDYN,
    StructureQuadruple,
    dual_exchange_sides,
    verify_solution,
)
from .dressing import build_Q, build_S, second_fusion_Q
from .dynamics import (
    Context,
    DiffOp,
    DynMatrix,
    ShiftMatrix,
    diffop_equal,
    exp_D,
    sl_sc,
)
from .fusion import fuse_K, fuse_T, second_fusion_K, second_fusion_T
from .scalars import ONE, ZERO, QQi
from .tensor import IndexSet

__all__ = [
    "Hamiltonian",
    "trace_nondyn",
    "trace_semidyn",
    "trace_fullydyn",
    "assemble",
    "commute",
    "decoupling_check",
    "pipeline_identification",
    "dual_candidate_screen",
    "mat_trace",
]


def mat_trace(x: DynMatrix, ctx: Context) -> QQi:
    m = x(ctx)
    out = ZERO
    for r in range(x.legs.dim()):
        v = m.rows[r].get(r)
        if v is not None:
            out = out + v
    return out


@dataclass(frozen=True)
class Hamiltonian:
    """A trace operator: an exact scalar function of the context in the
    non-dynamical regime, a difference operator otherwise."""

    regime: str
    m: IndexSet
    recipe: str
    scalar_fn: object = None
    op: DiffOp = None

    def value(self, ctx: Context):
        return self.scalar_fn(ctx) if self.op is None else self.op.eval(ctx)


def trace_nondyn(t_m: DynMatrix, k_m: DynMatrix, recipe="") -> Hamiltonian:
    if t_m.legs.legs != k_m.legs.legs:
        raise ValueError("leg mismatch between solution and dual solution")
    prod = k_m.transpose() @ t_m
    return Hamiltonian(NONDYN, t_m.legs, recipe,
                       scalar_fn=lambda ctx: mat_trace(prod, ctx))


def _sc_t(k_m: DynMatrix) -> DynMatrix:
    return sl_sc(k_m, k_m.legs.ids(), "SC").transpose()


def trace_semidyn(t_m: DynMatrix, k_m: DynMatrix, recipe="",
                  pipeline="direct") -> Hamiltonian:
    """Tr over all legs of T e^{D} (K^{SC})^t; `pipeline` "transposed" uses
    the equivalent form Tr(T^t K e^{D}) instead."""
    if t_m.legs.legs != k_m.legs.legs:
        raise ValueError("leg mismatch between solution and dual solution")
    e = exp_D(t_m.legs, +1)
    if pipeline == "direct":
        word = (ShiftMatrix.from_dyn(t_m) @ e
                @ ShiftMatrix.from_dyn(_sc_t(k_m)))
    elif pipeline == "transposed":
        word = (ShiftMatrix.from_dyn(t_m.transpose())
                @ ShiftMatrix.from_dyn(k_m) @ e)
    else:
        raise ValueError(f"unknown pipeline {pipeline!r}")
    return Hamiltonian(SEMIDYN, t_m.legs, recipe, op=word.trace())


def trace_fullydyn(t_m: DynMatrix, k_m: DynMatrix, recipe="") -> Hamiltonian:
    """Tr over all legs of e^{-D} T e^{D} (K^{SC})^t."""
    if t_m.legs.legs != k_m.legs.legs:
        raise ValueError("leg mismatch between solution and dual solution")
    legs = t_m.legs
    word = (exp_D(legs, -1) @ ShiftMatrix.from_dyn(t_m) @ exp_D(legs, +1)
            @ ShiftMatrix.from_dyn(_sc_t(k_m)))
    return Hamiltonian(FULLYDYN, legs, recipe, op=word.trace())


def assemble(q: StructureQuadruple, sol, m: IndexSet, dressed=False,
             k_factory=None, pipeline="direct") -> Hamiltonian:
    """Build the trace operator for the fused solution on m, optionally
    dressed, against the fused dual solution."""
    kf = k_factory if k_factory is not None else sol.dual_K
    if kf is None:
        raise ValueError(
            f"no dual solution recorded for {q.name}; supply k_factory")
    t_m = fuse_T(q, sol.T, m)
    if dressed:
        t_m = build_Q(q, m) @ t_m @ build_S(q, m)
    k_m = fuse_K(q, kf, m)
    recipe = (f"{q.name}/{q.regime} legs={m.ids()} "
              f"dressed={dressed} pipeline={pipeline}")
    if q.regime == NONDYN:
        return trace_nondyn(t_m, k_m, recipe)
    if q.regime == SEMIDYN:
        return trace_semidyn(t_m, k_m, recipe, pipeline=pipeline)
    return trace_fullydyn(t_m, k_m, recipe)


# -- commutation -------------------------------------------------------------


def commute(h1: Hamiltonian, h2: Hamiltonian, ctxs) -> dict:
    """Per-shift-vector residuals of the commutator at every context."""
    if h1.regime != h2.regime:
        raise ValueError("cannot commute operators from different regimes")
    if h1.op is None:
        # exact scalars commute identically; report as such
        return {"kind": "scalar", "status": "pass", "samples": len(ctxs),
                "residuals": []}
    comm = h1.op.commutator(h2.op)
    residuals = []
    for ctx in ctxs:
        for mu, v in sorted(comm.eval(ctx).items()):
            if v:
                residuals.append({"shift": list(mu),
                                  "lambda": [x.to_quad() for x in ctx.lam],
                                  "value": v.to_quad()})
    return {"kind": "difference-operator",
            "status": "pass" if not residuals else "fail",
            "samples": len(ctxs), "residuals": residuals}


# -- decoupling --------------------------------------------------------------


def decoupling_check(q, sol, m: IndexSet, ctxs, dressed=False):
    """Whether the trace over m equals the |m|-th power of the single-leg
    trace.  Holds exactly for undressed solutions; dressing is expected to
    break it (the non-triviality witness).

    Returns (equal, witness).
    """
    h_m = assemble(q, sol, m, dressed=dressed)
    h_1 = assemble(q, sol, IndexSet([list(m)[0]]))
    k = len(list(m))
    if h_m.op is None:
        for ctx in ctxs:
            lhs = h_m.value(ctx)
            rhs = ONE
            for _ in range(k):
                rhs = rhs * h_1.value(ctx)
            if lhs != rhs:
                return False, (ctx, lhs, rhs)
        return True, None
    power = h_1.op
    for _ in range(k - 1):
        power = power * h_1.op
    return diffop_equal(h_m.op, power, ctxs)


# -- identification of the two fusion pipelines ------------------------------


def pipeline_identification(q, sol, m: IndexSet, ctxs, k_factory=None):
    """The dressed trace built through the coupled (second) fusion pipeline
    equals the one built through the plain pipeline:
    Tr(K2^t Q2 T2 S2) = Tr(K^t Q T S).

    Non-dynamical regime only; returns (equal, witness, values).
    """
    if q.regime != NONDYN:
        raise ValueError("pipeline identification is formulated in the "
                         "non-dynamical regime")
    kf = k_factory if k_factory is not None else sol.dual_K
    if kf is None:
        raise ValueError(f"no dual solution recorded for {q.name}")
    s_m = build_S(q, m)
    plain = trace_nondyn(build_Q(q, m) @ fuse_T(q, sol.T, m) @ s_m,
                         fuse_K(q, kf, m), recipe="plain pipeline")
    coupled = trace_nondyn(
        second_fusion_Q(q, m) @ second_fusion_T(q, sol.T, m) @ s_m,
        second_fusion_K(q, kf, m), recipe="coupled pipeline")
    values = []
    for ctx in ctxs:
        a, b = plain.value(ctx), coupled.value(ctx)
        values.append((a, b))
        if a != b:
            return False, (ctx, a, b), values
    return True, None, values


# -- dual-solution screening -------------------------------------------------


def _diag_factory(diag):
    def kf(leg):
        mat = DynMatrix.identity(IndexSet([leg]))

        def ev(ctx):
            m = type(mat(ctx))(IndexSet([leg]))
            for i, v in enumerate(diag):
                m.rows[i][i] = v
            return m

        return DynMatrix(IndexSet([leg]), ev, name="Kdiag",
                         diag_legs=[leg.id], zw_groups=[(leg.id,)])

    return kf


def _residual_polys(q, ctxs, samples):
    """Entries of the dual-relation residual for K = diag(1, y), as exact
    polynomials a + b*y + c*y**2 interpolated from three evaluations."""
    evals = {}
    for y in samples:
        lhs, rhs = dual_exchange_sides(
            q, _diag_factory([ONE, y]), q.leg(1), q.leg(2))
        diff = lhs - rhs
        for ctx in ctxs:
            mat = diff(ctx)
            for r, row in enumerate(mat.rows):
                for c, v in row.items():
                    evals.setdefault((ctx, r, c), {})[y] = v
    y0, y1, y2 = samples
    polys = set()
    for vals in evals.values():
        v0 = vals.get(y0, ZERO)
        v1 = vals.get(y1, ZERO)
        v2 = vals.get(y2, ZERO)
        # exact interpolation on the nodes 0, 1, 2
        a = v0
        cc = (v2 - v1 - v1 + v0) / QQi(2)
        b = v1 - v0 - cc
        if a or b or cc:
            polys.add((tuple(a.to_quad()), tuple(b.to_quad()),
                       tuple(cc.to_quad())))
    return [tuple(QQi.from_quad(t) for t in p) for p in sorted(polys)]


def dual_candidate_screen(q: StructureQuadruple, ctxs, ansatz="identity",
                          diag=None) -> dict:
    """Evaluate dual-relation residuals for a candidate dual solution.

    ansatz "identity": K = Id.  ansatz "constant-diagonal": K = diag(d) for
    a supplied d, or, for n = 2, the scale-fixed family diag(1, y) solved
    exactly by common-root analysis of the interpolated residual
    polynomials.  The zero matrix is excluded by construction (the leading
    entry is pinned to 1).
    """
    if ansatz == "identity":
        ok, w = verify_solution(
            q, lambda leg: DynMatrix.identity(IndexSet([leg])), ctxs,
            dual=True)
        return {"ansatz": "identity", "status": "pass" if ok else "fail",
                "witness": None if ok else repr(w)}
    if ansatz != "constant-diagonal":
        raise ValueError(f"unknown ansatz {ansatz!r}")
    if diag is not None:
        ok, w = verify_solution(q, _diag_factory(list(diag)), ctxs, dual=True)
        return {"ansatz": "constant-diagonal", "diag": [v.to_quad() for v in diag],
                "status": "pass" if ok else "fail",
                "witness": None if ok else repr(w)}
    if q.n != 2:
        raise ValueError("automatic constant-diagonal screening solves the "
                         "one-parameter family and needs n = 2; pass `diag` "
                         "explicitly for larger n")
    samples = (ZERO, ONE, ONE + ONE)
    polys = _residual_polys(q, ctxs, samples)
    if not polys:
        return {"ansatz": "constant-diagonal", "status": "pass",
                "solutions": "all diag(1, y)", "witness": None}
    # common roots of every residual polynomial: intersect root sets of the
    # linear ones, then test survivors against the rest
    candidates = None
    for a, b, c in polys:
        if c == ZERO and b != ZERO:
            root = ZERO - a / b
            roots = {tuple(root.to_quad())}
            candidates = roots if candidates is None else candidates & roots
    if candidates is None:
        # no linear entry to pin y; fall back to testing small rationals
        candidates = {tuple(QQi(k).to_quad()) for k in (-2, -1, 1, 2, 3)}
    solutions = []
    for cq in sorted(candidates):
        y = QQi.from_quad(cq)
        if all((a + b * y + c * y * y) == ZERO for a, b, c in polys):
            ok, _ = verify_solution(q, _diag_factory([ONE, y]), ctxs,
                                    dual=True)
            if ok:
                solutions.append(cq)
    return {"ansatz": "constant-diagonal",
            "status": "pass" if solutions else "fail",
            "solutions": [list(s) for s in solutions] if solutions else [],
            "witness": None if solutions else
            "no constant diag(1, y) satisfies the dual relation"}

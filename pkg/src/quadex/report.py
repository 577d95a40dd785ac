"""Suite driver: resolve a quadruple, run the selected verification groups
in dependency order, and assemble a deterministic machine-readable report.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import asdict, dataclass, field

from gmpy2 import mpq

from .catalog import (
    FULLYDYN,
    NONDYN,
    SEMIDYN,
    RegimeError,
    check_regime,
    crossing_checks,
    load_quadruple,
    make_dkm_diagonal,
    make_felder_rational,
    make_kulish_sklyanin,
    make_rs_rational,
    make_twisted_yangian,
    make_yangian,
    quadruple_contexts,
    twisted_dual_identifications,
    verify_solution,
)
from .dressing import (
    build_Q,
    build_S,
    formal_contexts,
    second_fusion_Q,
    verify_dressing_constraints,
    verify_dual_dressing_constraints,
)
from .dynamics import (
    Context,
    DynMatrix,
    dyn_equal,
    dyn_transpose,
    exp_D,
    push_through,
    ShiftMatrix,
    shiftmatrix_equal,
    trace_cyclic_check,
)
from .fusion import (
    DEFAULT_BUDGET,
    BudgetError,
    closed_second_T,
    fuse_K,
    fuse_T,
    legs_of,
    second_fusion_K,
    second_fusion_T,
    verify_fused_dual_exchange,
    verify_fused_exchange,
    verify_fused_yb,
    verify_kernel,
    verify_split_agreement,
)
from .scalars import QQi
from .tensor import IndexSet, LegMatrix
from .traces import assemble, commute, decoupling_check, dual_candidate_screen, \
    pipeline_identification

__all__ = [
    "CATALOG",
    "GROUPS",
    "StructuralError",
    "SuiteConfig",
    "run_suite",
    "render_json",
    "summary_lines",
]

CATALOG = {
    "yangian": make_yangian,
    "kulish-sklyanin": make_kulish_sklyanin,
    "twisted-yangian": make_twisted_yangian,
    "dkm-diagonal": make_dkm_diagonal,
    "rs-rational": make_rs_rational,
    "felder-rational": make_felder_rational,
}

GROUPS = (
    "regime", "crossing", "fused-consistency", "split-agreement",
    "exchange", "fused-exchange", "kernel", "second-fusion",
    "dressing", "dual-dressing", "lemmas", "decoupling",
    "identification", "commutation", "dual-screen",
)


class StructuralError(Exception):
    """Configuration or input problems: these abort the run (exit code 2),
    unlike mathematical findings, which are report entries."""


@dataclass
class SuiteConfig:
    quadruple: str = "rs-rational"   # catalog name or path to a bundle file
    regime: str | None = None        # expected regime; mismatch is structural
    n: int = 2
    m_size: int = 2
    np_size: int = 2
    l_size: int = 1
    samples: int = 4
    seed: int = 7
    gamma: str = "1"                 # exact rational, e.g. "1", "2/3"
    budget: int = DEFAULT_BUDGET
    formal: bool = False             # coincident spectral values per group
    force: bool = False              # load a bundle even if validation fails
    timing: bool = False
    out: str | None = None
    checks: tuple = ()               # group-name filter; empty means all

    @classmethod
    def from_dict(cls, data: dict) -> "SuiteConfig":
        known = {f for f in cls.__dataclass_fields__}
        bad = set(data) - known
        if bad:
            raise StructuralError(f"unknown config keys: {sorted(bad)}")
        cfg = cls(**data)
        cfg.checks = tuple(cfg.checks)
        return cfg

    @classmethod
    def from_file(cls, path) -> "SuiteConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise StructuralError(f"unreadable config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise StructuralError(f"config {path} is not a JSON object")
        return cls.from_dict(data)


def _gamma_of(config) -> QQi:
    try:
        return QQi(mpq(config.gamma))
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise StructuralError(f"bad gamma {config.gamma!r}: {exc}") from exc


def _labels(config):
    m = tuple(str(i + 1) for i in range(config.m_size))
    np_ = tuple(f"{i + 1}p" for i in range(config.np_size))
    lp = tuple(f"{i + 1}s" for i in range(config.l_size))
    return m, np_, lp


def _resolve(config, ctxs=None):
    name = config.quadruple
    if name in CATALOG:
        q, sol = CATALOG[name](config.n)
    else:
        try:
            q = load_quadruple(name, ctxs=ctxs, force=config.force)
        except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
            if isinstance(exc, RegimeError) and not config.force:
                raise StructuralError(
                    f"bundle {name} fails validation: {exc}; "
                    "pass --force to load anyway") from exc
            raise StructuralError(f"cannot load quadruple {name}: {exc}") from exc
        sol = None
    if config.regime is not None and config.regime != q.regime:
        raise StructuralError(
            f"expected regime {config.regime}, quadruple is {q.regime}")
    return q, sol


def _entry(name, ok, witness=None):
    return {"name": name, "status": "pass" if ok else "fail",
            "witness": None if ok else repr(witness)}


def _skip(name, reason):
    return {"name": name, "status": "skip", "witness": reason}


def _random_zw_diagonal(legs: IndexSet, salt):
    """A context-dependent diagonal matrix (diagonal matrices satisfy the
    total-zero-weight condition trivially)."""

    def ev(ctx):
        m = LegMatrix(legs)
        probe = LegMatrix(legs)
        for a in range(legs.dim()):
            v = QQi(1 + salt)
            for pos, i in enumerate(probe.unravel(a)):
                v = v + ctx.lam[i] * QQi(pos + 1) + QQi(i * salt)
            m.rows[a][a] = v
        return m

    return DynMatrix(legs, ev, name=f"diag{salt}",
                     zw_groups=[legs.ids()])


def _lemma_group(q, ctxs, rng, extra=10):
    from .catalog import generic_scalar_matrix

    checks = []
    la, lb = q.leg(1), q.leg(2)
    pair = IndexSet([la, lb])
    members = {}
    for w in "ABCD":
        x = q._mk(w, la, lb)
        members[w] = x.embedded(pair) if len(x.legs.legs) == 1 else x

    # transposition identity on pairs of members
    for left, right in (("A", "B"), ("C", "D")):
        _, _, ok, w = dyn_transpose(members[left], members[right], ctxs)
        checks.append(_entry(f"lemma-transposition-{left}{right}", ok, w))

    # shift/cyclicity identities need the total-zero-weight hypothesis
    full = frozenset(pair.ids())
    probe = DynMatrix.constant(generic_scalar_matrix(la, salt=2)).embedded(pair)
    for w, x in members.items():
        if full not in x.zw_groups:
            continue
        bar = push_through(x, ctxs, sign=-1)
        e = exp_D(pair, -1)
        ok, wit = shiftmatrix_equal(e @ ShiftMatrix.from_dyn(x),
                                    ShiftMatrix.from_dyn(bar) @ e, ctxs)
        checks.append(_entry(f"lemma-shift-{w}", ok, wit))
        ok, wit = trace_cyclic_check(x, probe, ctxs)
        checks.append(_entry(f"lemma-cyclicity-{w}", ok, wit))

    for k in range(extra):
        r = DynMatrix.constant(generic_scalar_matrix(la, salt=rng.randrange(1, 50))).embedded(pair)
        s = DynMatrix.constant(generic_scalar_matrix(lb, salt=rng.randrange(1, 50))).embedded(pair)
        _, _, ok, w = dyn_transpose(r, s, ctxs)
        checks.append(_entry(f"lemma-transposition-random-{k}", ok, w))
        d = _random_zw_diagonal(pair, salt=rng.randrange(1, 50))
        bar = push_through(d, ctxs, sign=-1)
        e = exp_D(pair, -1)
        ok, wit = shiftmatrix_equal(e @ ShiftMatrix.from_dyn(d),
                                    ShiftMatrix.from_dyn(bar) @ e, ctxs)
        checks.append(_entry(f"lemma-shift-random-{k}", ok, wit))
        ok, wit = trace_cyclic_check(d, probe, ctxs)
        checks.append(_entry(f"lemma-cyclicity-random-{k}", ok, wit))
    return checks


def run_suite(config: SuiteConfig) -> dict:
    wanted = set(config.checks) if config.checks else set(GROUPS)
    unknown = wanted - set(GROUPS)
    if unknown:
        raise StructuralError(f"unknown check groups: {sorted(unknown)}")

    rng = random.Random(config.seed)
    gamma = _gamma_of(config)
    lm, lnp, llp = _labels(config)

    q, sol = _resolve(config)
    m, np_, lp = legs_of(q, lm), legs_of(q, lnp), legs_of(q, llp)
    # the base consistency system always runs on legs 1, 2, 3
    all_ids = list(dict.fromkeys(lm + lnp + llp + ("1", "2", "3")))
    if config.formal and q.spectral:
        covered = set(lm) | set(lnp) | set(llp)
        ctxs = formal_contexts(
            q, rng, config.samples, [m.ids(), np_.ids(), lp.ids()],
            gamma=gamma, extra_ids=[i for i in all_ids if i not in covered])
    else:
        ctxs = quadruple_contexts(q, rng, config.samples, all_ids, gamma=gamma)

    checks = []
    timings = {}

    def group(name, fn):
        if name not in wanted:
            return
        t0 = time.perf_counter()
        try:
            items = fn()
        except BudgetError as exc:
            raise StructuralError(str(exc)) from exc
        for item in items:
            checks.append({"group": name, **item})
        timings[name] = round((time.perf_counter() - t0) * 1000, 3)

    group("regime", lambda: check_regime(q, ctxs))

    def crossing():
        if q.name != "twisted-yangian":
            return [_skip("crossing", "only defined for the reflection "
                          "quadruple built from the rational R")]
        return (crossing_checks(q.n, ctxs)
                + twisted_dual_identifications(q.n, ctxs))

    group("crossing", crossing)

    group("fused-consistency",
          lambda: verify_fused_yb(q, m, np_, lp, ctxs, budget=config.budget))

    def split():
        out = []
        for w in "ABCD":
            cols = np_.reversed() if w in "AD" else np_
            ok, wit = verify_split_agreement(q, w, m, cols, ctxs)
            out.append(_entry(f"split-{w}", ok, wit))
        return out

    group("split-agreement", split)

    def exchange():
        if sol is None:
            return [_skip("exchange", "no reference solution for this "
                          "quadruple source")]
        out = []
        ok, wit = verify_solution(q, sol.T, ctxs)
        out.append(_entry("exchange-base", ok, wit))
        if sol.dual_K is None:
            out.append(_skip("exchange-dual", "no dual solution recorded: "
                             + (sol.notes or "none found")))
        else:
            ok, wit = verify_solution(q, sol.dual_K, ctxs, dual=True)
            out.append(_entry("exchange-dual", ok, wit))
        return out

    group("exchange", exchange)

    def fused_exchange():
        if sol is None:
            return [_skip("fused-exchange", "no reference solution")]
        out = []
        t_m, t_np = fuse_T(q, sol.T, m), fuse_T(q, sol.T, np_)
        ok, wit = verify_fused_exchange(q, m, np_, t_m, t_np, ctxs,
                                        budget=config.budget)
        out.append(_entry("fused-exchange", ok, wit))
        if sol.dual_K is None:
            out.append(_skip("fused-exchange-dual", "no dual solution"))
        else:
            k_m, k_np = fuse_K(q, sol.dual_K, m), fuse_K(q, sol.dual_K, np_)
            ok, wit = verify_fused_dual_exchange(q, m, np_, k_m, k_np, ctxs,
                                                 budget=config.budget)
            out.append(_entry("fused-exchange-dual", ok, wit))
        return out

    group("fused-exchange", fused_exchange)

    def kernel():
        if q.regime == FULLYDYN:
            return [_skip("kernel", "coupling matrix undefined in the fully "
                          "dynamical regime")]
        return verify_kernel(q, m, np_, ctxs, budget=config.budget)

    group("kernel", kernel)

    def second():
        if q.regime == FULLYDYN:
            return [_skip("second-fusion", "undefined in the fully dynamical "
                          "regime")]
        if sol is None:
            return [_skip("second-fusion", "no reference solution")]
        out = []
        t2_m = second_fusion_T(q, sol.T, m)
        ok, wit = dyn_equal(t2_m, closed_second_T(q, sol.T, m), ctxs)
        out.append(_entry("second-fusion-closed-form", ok, wit))
        t2_np = second_fusion_T(q, sol.T, np_)
        ok, wit = verify_fused_exchange(q, m, np_, t2_m, t2_np, ctxs,
                                        pattern="second", budget=config.budget)
        out.append(_entry("second-fusion-exchange", ok, wit))
        if sol.dual_K is None:
            out.append(_skip("second-fusion-dual", "no dual solution"))
        else:
            k2_m = second_fusion_K(q, sol.dual_K, m)
            k2_np = second_fusion_K(q, sol.dual_K, np_)
            ok, wit = verify_fused_dual_exchange(q, m, np_, k2_m, k2_np, ctxs,
                                                 pattern="second",
                                                 budget=config.budget)
            out.append(_entry("second-fusion-dual", ok, wit))
        return out

    group("second-fusion", second)

    def dressing():
        if q.spectral and not config.formal:
            return [_skip("dressing", "needs --formal: the neighbour-chain "
                          "factors require coincident spectral values "
                          "within each leg group")]
        qm, qn = build_Q(q, m), build_Q(q, np_)
        sm, sn = build_S(q, m), build_S(q, np_)
        out = verify_dressing_constraints(q, m, np_, qm, qn, sm, sn, ctxs,
                                          budget=config.budget)
        if sol is not None:
            t_m = qm @ fuse_T(q, sol.T, m) @ sm
            t_np = qn @ fuse_T(q, sol.T, np_) @ sn
            ok, wit = verify_fused_exchange(q, m, np_, t_m, t_np, ctxs,
                                            budget=config.budget)
            out.append(_entry("dressed-exchange", ok, wit))
        if q.regime != FULLYDYN:
            for item in verify_dressing_constraints(
                    q, m, np_, second_fusion_Q(q, m), second_fusion_Q(q, np_),
                    sm, sn, ctxs, pattern="second", budget=config.budget):
                out.append({**item, "name": "second-" + item["name"]})
        return out

    group("dressing", dressing)

    def dual_dressing():
        if q.regime != NONDYN:
            return [_skip("dual-dressing", "formulated only in the "
                          "non-dynamical regime")]
        if q.spectral and not config.formal:
            return [_skip("dual-dressing", "needs --formal")]
        return verify_dual_dressing_constraints(
            q, m, np_, build_Q(q, m), build_Q(q, np_),
            build_S(q, m), build_S(q, np_), ctxs, budget=config.budget)

    group("dual-dressing", dual_dressing)

    group("lemmas", lambda: _lemma_group(q, ctxs, rng))

    def decoupling():
        if sol is None or sol.dual_K is None:
            return [_skip("decoupling", "needs a solution and a dual "
                          "solution")]
        out = []
        for size in range(2, max(2, config.m_size) + 1):
            sub = IndexSet(list(m)[:size])
            ok, wit = decoupling_check(q, sol, sub, ctxs)
            out.append(_entry(f"decoupling-undressed-{size}", ok, wit))
        return out

    group("decoupling", decoupling)

    def identification():
        if q.regime != NONDYN:
            return [_skip("identification", "formulated only in the "
                          "non-dynamical regime")]
        if sol is None or sol.dual_K is None:
            return [_skip("identification", "needs a solution and a dual")]
        if q.spectral and not config.formal:
            return [_skip("identification", "needs --formal")]
        ok, wit, _ = pipeline_identification(q, sol, m, ctxs)
        return [_entry("identification", ok, wit)]

    group("identification", identification)

    def commutation():
        if sol is None or sol.dual_K is None:
            note = "" if sol is None else (sol.notes or "")
            return [_skip("commutation",
                          "needs a solution and a dual solution"
                          + (f"; {note}" if note else ""))]
        dressed = not q.spectral or config.formal
        h1 = assemble(q, sol, m, dressed=dressed)
        h2 = assemble(q, sol, np_, dressed=dressed)
        rep = commute(h1, h2, ctxs)
        item = {"name": f"commutation-{'dressed' if dressed else 'plain'}",
                "status": rep["status"], "witness": None,
                "kind": rep["kind"], "samples": rep["samples"]}
        if rep["residuals"]:
            item["witness"] = rep["residuals"][:5]
        return [item]

    group("commutation", commutation)

    def screen():
        out = [{"name": "dual-screen-identity", "witness": None,
                **dual_candidate_screen(q, ctxs)}]
        if q.n == 2:
            rep = dual_candidate_screen(q, ctxs, ansatz="constant-diagonal")
            out.append({"name": "dual-screen-constant-diagonal",
                        "witness": rep.get("witness"), **rep})
        else:
            out.append(_skip("dual-screen-constant-diagonal",
                             "automatic diagonal elimination implemented "
                             "for two-dimensional legs"))
        for item in out:
            item.pop("ansatz", None)
            if item["status"] == "fail":
                # an empty ansatz family is a reported gap, not a failed
                # identity: the screen's job is to decide either way
                item["status"] = "gap"
        return out

    group("dual-screen", screen)

    failed = [c for c in checks if c["status"] == "fail"]
    report = {
        "suite": "quadex",
        "quadruple": q.name,
        "regime": q.regime,
        "n": q.n,
        "config": {k: (list(v) if isinstance(v, tuple) else v)
                   for k, v in asdict(config).items() if k != "out"},
        "checks": checks,
        "counts": {
            "pass": sum(1 for c in checks if c["status"] == "pass"),
            "fail": len(failed),
            "skip": sum(1 for c in checks if c["status"] == "skip"),
            "gap": sum(1 for c in checks if c["status"] == "gap"),
        },
        "status": "pass" if not failed else "finding",
    }
    if config.timing:
        report["timing_ms"] = timings
    return report


def render_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def summary_lines(report: dict):
    yield (f"{report['quadruple']} [{report['regime']}, n={report['n']}] "
           f"-> {report['status']}")
    for c in report["checks"]:
        yield f"  {c['group']}/{c['name']}: {c['status']}"
    counts = report["counts"]
    yield (f"  totals: {counts['pass']} pass, {counts['fail']} fail, "
           f"{counts['skip']} skip, {counts['gap']} gap")

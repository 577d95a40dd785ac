"""Acceptance suite: one check per shipped guarantee, each printing a single
pass/fail line.  Every comparison is exact (zero residual in exact
arithmetic); there are no tolerances anywhere.
"""

import random
import time

import pytest

from quadex.catalog import (
    check_regime,
    crossing_checks,
    dyn_equal,
    make_dkm_diagonal,
    make_felder_rational,
    make_kulish_sklyanin,
    make_rs_rational,
    make_twisted_yangian,
    make_yangian,
    quadruple_contexts,
    twisted_dual_identifications,
    yb_equations,
)
from quadex.dressing import (
    build_Q,
    build_S,
    formal_contexts,
    verify_dressing_constraints,
)
from quadex.fusion import (
    BudgetError,
    check_budget,
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
)
from quadex.report import SuiteConfig, _lemma_group, render_json, run_suite
from quadex.traces import (
    assemble,
    commute,
    decoupling_check,
    dual_candidate_screen,
    pipeline_identification,
)

NONDYN_MAKERS = {
    "yangian": make_yangian,
    "kulish-sklyanin": make_kulish_sklyanin,
    "twisted-yangian": make_twisted_yangian,
}


def emit(num, name, ok, note=""):
    tail = f"  ({note})" if note else ""
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {num:2d} {name}{tail}")
    assert ok, f"criterion {num} {name} failed"


def ctxs_for(q, count=4, seed=31, labels=("1", "2", "3", "1p", "2p", "1s"),
             formal=False):
    rng = random.Random(seed)
    if formal and q.spectral:
        return formal_contexts(q, rng, count,
                               [("1", "2", "3"), ("1p", "2p"), ("1s",)])
    return quadruple_contexts(q, rng, count, list(labels))


def all_pass(report):
    return all(item["status"] == "pass" for item in report)


def test_criterion_01_consistency_systems():
    ok = True
    note = []
    for name, maker in NONDYN_MAKERS.items():
        for n in (2, 3):
            q, _ = maker(n)
            t0 = time.perf_counter()
            ctxs = ctxs_for(q)
            for eq_name, lhs, rhs in yb_equations(q):
                good, w = dyn_equal(lhs, rhs, ctxs)
                ok = ok and good
            note.append(f"{name} n={n}: {time.perf_counter() - t0:.1f}s")
    for n in (2, 3):
        q, _ = make_rs_rational(n)
        t0 = time.perf_counter()
        ctxs = ctxs_for(q, count=20)
        for eq_name, lhs, rhs in yb_equations(q):
            good, w = dyn_equal(lhs, rhs, ctxs)
            ok = ok and good
        note.append(f"rs n={n}: {time.perf_counter() - t0:.1f}s")
    emit(1, "consistency systems", ok, "; ".join(note))


def test_criterion_02_unitarity_and_crossing():
    ok = True
    for n in (2, 3):
        q, _ = make_yangian(n)
        ctxs = ctxs_for(q, labels=("1", "2"))
        ok = ok and all_pass(crossing_checks(n, ctxs))
        ok = ok and all_pass(twisted_dual_identifications(n, ctxs))
    emit(2, "unitarity and crossing identities", ok)


def test_criterion_03_fused_consistency():
    ok = True
    cases = [
        (make_yangian, 2, [(1, 1, 1), (2, 1, 1), (1, 2, 1), (1, 1, 2),
                           (2, 2, 1), (2, 1, 2), (1, 2, 2), (3, 1, 1),
                           (2, 2, 2)]),
        (make_kulish_sklyanin, 2, [(2, 2, 1), (2, 1, 2), (1, 2, 2)]),
        (make_twisted_yangian, 2, [(2, 2, 1), (1, 2, 2)]),
        (make_dkm_diagonal, 2, [(2, 2, 2), (3, 2, 1)]),
        (make_rs_rational, 2, [(2, 2, 1), (2, 1, 2), (1, 2, 2), (2, 2, 2)]),
        (make_rs_rational, 3, [(2, 1, 1), (1, 2, 1), (2, 2, 1)]),
        (make_felder_rational, 2, [(2, 2, 1), (2, 1, 2), (1, 2, 2),
                                   (2, 2, 2)]),
    ]
    count = 0
    for maker, n, patterns in cases:
        q, _ = maker(n)
        for (a, b, c) in patterns:
            labels_m = tuple(str(i + 1) for i in range(a))
            labels_np = tuple(f"{i + 1}p" for i in range(b))
            labels_l = tuple(f"{i + 1}s" for i in range(c))
            m, np_, lp = (legs_of(q, labels_m), legs_of(q, labels_np),
                          legs_of(q, labels_l))
            assert check_budget([m, np_, lp]) <= 729
            ctxs = quadruple_contexts(
                q, random.Random(41), 2,
                list(labels_m + labels_np + labels_l))
            ok = ok and all_pass(verify_fused_yb(q, m, np_, lp, ctxs))
            count += 1
    q3, _ = make_rs_rational(3)
    with pytest.raises(BudgetError):
        check_budget([legs_of(q3, ("1", "2", "3", "1p", "2p", "3p", "1s"))])
    emit(3, "fused consistency systems", ok, f"{count} size patterns")


def test_criterion_04_fused_solutions():
    ok = True
    entries = [(maker, 2) for maker in (make_yangian, make_kulish_sklyanin,
                                        make_twisted_yangian,
                                        make_dkm_diagonal, make_rs_rational,
                                        make_felder_rational)]
    entries.append((make_rs_rational, 3))
    for maker, n in entries:
        q, sol = maker(n)
        for sizes in ((1, 1), (1, 2), (2, 1), (2, 2)):
            lm = tuple(str(i + 1) for i in range(sizes[0]))
            lnp = tuple(f"{i + 1}p" for i in range(sizes[1]))
            m, np_ = legs_of(q, lm), legs_of(q, lnp)
            ctxs = quadruple_contexts(q, random.Random(43), 2,
                                      list(lm + lnp))
            good, w = verify_fused_exchange(
                q, m, np_, fuse_T(q, sol.T, m), fuse_T(q, sol.T, np_), ctxs)
            ok = ok and good
            if sol.dual_K is not None:
                good, w = verify_fused_dual_exchange(
                    q, m, np_, fuse_K(q, sol.dual_K, m),
                    fuse_K(q, sol.dual_K, np_), ctxs)
                ok = ok and good
    emit(4, "fused solutions of the exchange relations", ok)


def test_criterion_05_coupling_and_second_fusion():
    ok = True
    for maker, n in ((make_yangian, 2), (make_kulish_sklyanin, 2),
                     (make_twisted_yangian, 2), (make_dkm_diagonal, 2),
                     (make_rs_rational, 2), (make_rs_rational, 3)):
        q, sol = maker(n)
        m, np_ = legs_of(q, ("1", "2")), legs_of(q, ("1p", "2p"))
        ctxs = quadruple_contexts(q, random.Random(47), 2,
                                  ["1", "2", "3", "1p", "2p"])
        ok = ok and all_pass(verify_kernel(q, m, np_, ctxs))
        m3 = legs_of(q, ("1", "2", "3"))
        good, w = dyn_equal(second_fusion_T(q, sol.T, m3),
                            closed_second_T(q, sol.T, m3), ctxs)
        ok = ok and good
        good, w = verify_fused_exchange(
            q, m, np_, second_fusion_T(q, sol.T, m),
            second_fusion_T(q, sol.T, np_), ctxs, pattern="second")
        ok = ok and good
        good, w = verify_fused_dual_exchange(
            q, m, np_, second_fusion_K(q, sol.dual_K, m),
            second_fusion_K(q, sol.dual_K, np_), ctxs, pattern="second")
        ok = ok and good
    emit(5, "coupling matrix and second fusion", ok)


def test_criterion_06_dressing_constraints():
    ok = True
    for maker, n in ((make_yangian, 2), (make_kulish_sklyanin, 2),
                     (make_twisted_yangian, 2), (make_dkm_diagonal, 2),
                     (make_rs_rational, 2), (make_rs_rational, 3),
                     (make_felder_rational, 2)):
        q, _ = maker(n)
        for lm, lnp in ((("1", "2"), ("1p",)), (("1", "2"), ("1p", "2p")),
                        (("1", "2", "3"), ("1p",)),
                        (("1", "2", "3"), ("1p", "2p"))):
            if n ** (len(lm) + len(lnp)) > 729:
                continue
            m, np_ = legs_of(q, lm), legs_of(q, lnp)
            rng = random.Random(53)
            if q.spectral:
                ctxs = formal_contexts(q, rng, 2, [m.ids(), np_.ids()])
            else:
                ctxs = quadruple_contexts(q, rng, 2, list(lm + lnp))
            rep = verify_dressing_constraints(
                q, m, np_, build_Q(q, m), build_Q(q, np_),
                build_S(q, m), build_S(q, np_), ctxs)
            ok = ok and all_pass(rep)
    emit(6, "dressing constraint tables (set sizes up to 3)", ok)


def test_criterion_07_operator_lemmas():
    ok = True
    for maker, n in ((make_yangian, 2), (make_kulish_sklyanin, 2),
                     (make_twisted_yangian, 2), (make_dkm_diagonal, 2),
                     (make_rs_rational, 2), (make_rs_rational, 3),
                     (make_felder_rational, 2)):
        q, _ = maker(n)
        ctxs = ctxs_for(q, labels=("1", "2"))
        ok = ok and all_pass(_lemma_group(q, ctxs, random.Random(59),
                                          extra=10))
    emit(7, "transposition, shift, and cyclicity lemmas", ok)


def test_criterion_08_undressed_decoupling():
    ok = True
    for maker, n in ((make_yangian, 2), (make_kulish_sklyanin, 2),
                     (make_twisted_yangian, 2), (make_dkm_diagonal, 2),
                     (make_rs_rational, 2)):
        q, sol = maker(n)
        ctxs = ctxs_for(q, labels=("1", "2", "3"))
        for size in (2, 3):
            m = legs_of(q, ("1", "2", "3")[:size])
            good, w = decoupling_check(q, sol, m, ctxs)
            ok = ok and good
    emit(8, "undressed traces decouple into powers", ok)


def test_criterion_09_dressed_commutation():
    q, sol = make_rs_rational(2)
    screen = dual_candidate_screen(
        q, quadruple_contexts(q, random.Random(61), 4, ["1", "2"]))
    ok = screen["status"] == "pass"
    for sizes in ((1, 1), (1, 2), (2, 1), (2, 2)):
        lm = ("1", "2")[:sizes[0]]
        lnp = ("1p", "2p")[:sizes[1]]
        ctxs = quadruple_contexts(q, random.Random(61), 20, list(lm + lnp))
        h1 = assemble(q, sol, legs_of(q, lm), dressed=True)
        h2 = assemble(q, sol, legs_of(q, lnp), dressed=True)
        ok = ok and commute(h1, h2, ctxs)["status"] == "pass"
    # non-triviality of the dressing: on two legs the dressed solution
    # coincides with the undressed one (exact identity for this quadruple),
    # so the witness that dressing breaks decoupling lives on three legs
    ctxs3 = quadruple_contexts(q, random.Random(61), 6, ["1", "2", "3"])
    two_leg_degenerate, _ = decoupling_check(
        q, sol, legs_of(q, ("1", "2")), ctxs3, dressed=True)
    three_leg_broken = not decoupling_check(
        q, sol, legs_of(q, ("1", "2", "3")), ctxs3, dressed=True)[0]
    ok = ok and three_leg_broken
    note = ("screened K; 20 sample points; "
            + ("two-leg dressing exactly degenerate, non-triviality "
               "witnessed on three legs" if two_leg_degenerate
               else "two-leg witness"))
    emit(9, "dressed semi-dynamical commutation", ok, note)


def test_criterion_10_pipeline_identification():
    ok = True
    for maker in (make_yangian, make_twisted_yangian):
        q, sol = maker(2)
        ctxs = ctxs_for(q, labels=("1", "2"))
        good, w, _ = pipeline_identification(q, sol, legs_of(q, ("1", "2")),
                                             ctxs)
        ok = ok and good
    emit(10, "both trace pipelines agree", ok)


def test_criterion_11_deterministic_reports():
    ok = True
    for cfg in (SuiteConfig(quadruple="rs-rational", seed=67),
                SuiteConfig(quadruple="twisted-yangian", seed=67,
                            formal=True,
                            checks=("regime", "crossing", "dressing"))):
        a = render_json(run_suite(cfg))
        b = render_json(run_suite(cfg))
        ok = ok and a == b
    emit(11, "byte-identical reports under a fixed seed", ok)

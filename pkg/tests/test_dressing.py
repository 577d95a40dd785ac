import random

import pytest

from quadex.catalog import (
    make_dkm_diagonal,
    make_felder_rational,
    make_kulish_sklyanin,
    make_rs_rational,
    make_twisted_yangian,
    make_yangian,
    quadruple_contexts,
)
from quadex.dressing import (
    build_Q,
    build_S,
    dress,
    formal_contexts,
    second_fusion_Q,
    verify_dressing_constraints,
    verify_dual_dressing_constraints,
)
from quadex.dynamics import DynMatrix, dyn_equal
from quadex.fusion import _sh, fuse_T, legs_of, verify_fused_exchange
from quadex.tensor import IndexSet

MAKERS = {
    "yangian": (make_yangian, 2),
    "kulish-sklyanin": (make_kulish_sklyanin, 2),
    "twisted": (make_twisted_yangian, 2),
    "dkm": (make_dkm_diagonal, 2),
    "rs2": (make_rs_rational, 2),
    "rs3": (make_rs_rational, 3),
    "felder": (make_felder_rational, 2),
}


def setup(key, lm=("1", "2"), lnp=("1p", "2p"), seed=23, count=2):
    maker, n = MAKERS[key]
    q, sol = maker(n)
    m, np_ = legs_of(q, lm), legs_of(q, lnp)
    if q.spectral:
        # neighbour-chain dressing factors need one spectral value per group
        ctxs = formal_contexts(q, random.Random(seed), count,
                               [m.ids(), np_.ids()])
    else:
        ids = [l.id for l in list(m) + list(np_)]
        ctxs = quadruple_contexts(q, random.Random(seed), count, ids)
    return q, sol, m, np_, ctxs


def failures(report):
    return [r for r in report if r["status"] != "pass"]


def factors(q, m, np_):
    return (build_Q(q, m), build_Q(q, np_), build_S(q, m), build_S(q, np_))


# -- shape -------------------------------------------------------------------


def test_singleton_factors_are_identity():
    q, _, m, _, ctxs = setup("rs2", lm=("1",))
    for f in (build_Q(q, m), build_S(q, m)):
        ok, w = dyn_equal(f, DynMatrix.identity(m), ctxs)
        assert ok, w


def test_factor_is_swap_times_pair_matrix_on_two_legs():
    q, _, m, _, ctxs = setup("dkm")
    la, lb = list(m)
    from quadex.tensor import permutation_operator

    p = DynMatrix.constant(permutation_operator(IndexSet([la, lb])))
    ok, w = dyn_equal(build_Q(q, m), p @ q.A(la, lb), ctxs)
    assert ok, w
    ok, w = dyn_equal(build_S(q, m), p @ q.D(la, lb), ctxs)
    assert ok, w


# -- constraint tables -------------------------------------------------------


@pytest.mark.parametrize("key", list(MAKERS))
def test_dressing_constraints_two_by_two(key):
    q, _, m, np_, ctxs = setup(key)
    rep = verify_dressing_constraints(q, m, np_, *factors(q, m, np_), ctxs)
    assert not failures(rep), failures(rep)


@pytest.mark.parametrize("key", ["dkm", "rs2", "felder"])
def test_dressing_constraints_three_by_one(key):
    q, _, m, np_, ctxs = setup(key, lm=("1", "2", "3"), lnp=("1p",))
    rep = verify_dressing_constraints(q, m, np_, *factors(q, m, np_), ctxs)
    assert not failures(rep), failures(rep)


@pytest.mark.parametrize("key", ["yangian", "twisted", "rs2"])
def test_dressing_constraints_three_by_two(key):
    q, _, m, np_, ctxs = setup(key, lm=("1", "2", "3"))
    rep = verify_dressing_constraints(q, m, np_, *factors(q, m, np_), ctxs)
    assert not failures(rep), failures(rep)


# -- dressed solutions -------------------------------------------------------


@pytest.mark.parametrize("key", list(MAKERS))
def test_dressed_solution_satisfies_fused_exchange(key):
    q, sol, m, np_, ctxs = setup(key)
    qm, qn, sm, sn = factors(q, m, np_)
    tm = dress(qm, fuse_T(q, sol.T, m), sm)
    tn = dress(qn, fuse_T(q, sol.T, np_), sn)
    ok, w = verify_fused_exchange(q, m, np_, tm, tn, ctxs)
    assert ok, w


def test_dressed_solution_differs_from_undressed():
    q, sol, m, np_, ctxs = setup("rs2", lm=("1", "2", "3"))
    qm, _, sm, _ = factors(q, m, np_)
    tm = fuse_T(q, sol.T, m)
    ok, _ = dyn_equal(dress(qm, tm, sm), tm, ctxs)
    assert not ok


# -- second (coupled) fusion pattern -----------------------------------------


@pytest.mark.parametrize("key", ["yangian", "kulish-sklyanin", "dkm", "rs2"])
def test_conjugated_factor_satisfies_second_pattern_constraints(key):
    q, _, m, np_, ctxs = setup(key)
    q2m, q2n = second_fusion_Q(q, m), second_fusion_Q(q, np_)
    sm, sn = build_S(q, m), build_S(q, np_)
    rep = verify_dressing_constraints(q, m, np_, q2m, q2n, sm, sn, ctxs,
                                      pattern="second")
    assert not failures(rep), failures(rep)


def test_plain_factor_fails_second_pattern_constraints():
    q, _, m, np_, ctxs = setup("rs2")
    rep = verify_dressing_constraints(q, m, np_, *factors(q, m, np_), ctxs,
                                      pattern="second")
    assert failures(rep)


# -- duals -------------------------------------------------------------------


@pytest.mark.parametrize("key", ["yangian", "kulish-sklyanin", "twisted", "dkm"])
def test_transposed_factors_satisfy_dual_constraints(key):
    q, _, m, np_, ctxs = setup(key)
    rep = verify_dual_dressing_constraints(q, m, np_, *factors(q, m, np_),
                                           ctxs)
    assert not failures(rep), failures(rep)


def test_dual_constraints_rejected_outside_nondynamical_regime():
    q, _, m, np_, ctxs = setup("rs2")
    with pytest.raises(ValueError):
        verify_dual_dressing_constraints(q, m, np_, *factors(q, m, np_), ctxs)


# -- counterexamples ---------------------------------------------------------


def test_unshifted_right_factor_fails_in_semidynamical_regime():
    q, _, m, np_, ctxs = setup("rs2", lm=("1", "2", "3"))
    legs = list(m)
    from quadex.dressing import _checked

    bad = None
    for i in range(len(legs) - 1):
        f = _checked(q, "D", legs[i], legs[i + 1]).embedded(m)
        bad = f if bad is None else bad @ f  # missing accumulated shifts
    rep = verify_dressing_constraints(q, m, np_, build_Q(q, m),
                                      build_Q(q, np_), bad, build_S(q, np_),
                                      ctxs)
    assert any(r["name"].startswith("dress-S") and r["status"] == "fail"
               for r in rep)


def test_spectral_constraints_need_coincident_values_within_group():
    maker, n = MAKERS["yangian"]
    q, _ = maker(n)
    m, np_ = legs_of(q, ("1", "2")), legs_of(q, ("1p", "2p"))
    ids = [l.id for l in list(m) + list(np_)]
    ctxs = quadruple_contexts(q, random.Random(23), 2, ids)
    rep = verify_dressing_constraints(q, m, np_, *factors(q, m, np_), ctxs)
    assert failures(rep)


def test_formal_contexts_share_one_value_per_group():
    maker, n = MAKERS["yangian"]
    q, _ = maker(n)
    ctxs = formal_contexts(q, random.Random(3), 3, [("1", "2"), ("1p",)])
    for ctx in ctxs:
        extra = dict(ctx.extra)
        assert extra["u:1"] == extra["u:2"]

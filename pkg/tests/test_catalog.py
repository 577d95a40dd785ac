import random

import pytest

from quadex.catalog import (
    RegimeError,
    check_regime,
    conjugation_matrix,
    crossing_checks,
    dual_exchange_sides,
    exchange_sides,
    generic_scalar_matrix,
    load_quadruple,
    make_dkm_diagonal,
    make_felder_rational,
    make_kulish_sklyanin,
    make_rs_rational,
    make_twisted_yangian,
    make_yangian,
    quadruple_contexts,
    save_quadruple,
    screen_gamma_tilde,
    twisted_dual_identifications,
    verify_solution,
)
from quadex.dynamics import Context, dyn_equal, sample_contexts
from quadex.scalars import I, ONE, qq
from quadex.tensor import IndexSet, Leg, LegMatrix, kron


def failures(report):
    return [r for r in report if r["status"] != "pass"]


def ctxs_for(q, seed=7, count=3, legs=("1", "2", "3")):
    return quadruple_contexts(q, random.Random(seed), count, legs)


# -- rational R-matrix entries, checked against closed forms -----------------


def test_yangian_a_matrix_entries():
    q, _ = make_yangian(2)
    la, lb = q.leg(1), q.leg(2)
    ctx = ctxs_for(q)[0]
    u = ctx.get("u:1") - ctx.get("u:2")
    a = q.A(la, lb)(ctx)
    # u*Id + i*P entry by entry
    assert a.entry((0, 0), (0, 0)) == u + I
    assert a.entry((0, 1), (0, 1)) == u
    assert a.entry((0, 1), (1, 0)) == I
    assert a.entry((1, 0), (0, 1)) == I
    assert a.entry((0, 0), (1, 1)) == 0


def test_yangian_unitarity_scalar_value():
    q, _ = make_yangian(2)
    la, lb = q.leg(1), q.leg(2)
    ctx = ctxs_for(q)[0]
    u = ctx.get("u:1") - ctx.get("u:2")
    prod = q.A(la, lb)(ctx) @ q.A(lb, la).reordered(IndexSet([la, lb]))(ctx)
    z = prod.proportional_to_identity()
    assert z == (u + I) * (-u + I)


def brute_yba_residual(a_fn, ctx, n):
    """Triple-product Yang-Baxter residual by explicit index loops."""
    dim = n ** 3

    def idx(i, j, k):
        return (i * n + j) * n + k

    def mat12(m):
        out = [[0] * dim for _ in range(dim)]
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    for l in range(n):
                        v = m.entry((i, j), (k, l))
                        for z in range(n):
                            out[idx(i, j, z)][idx(k, l, z)] = v
        return out

    def mat13(m):
        out = [[0] * dim for _ in range(dim)]
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    for l in range(n):
                        v = m.entry((i, j), (k, l))
                        for z in range(n):
                            out[idx(i, z, j)][idx(k, z, l)] = v
        return out

    def mat23(m):
        out = [[0] * dim for _ in range(dim)]
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    for l in range(n):
                        v = m.entry((i, j), (k, l))
                        for z in range(n):
                            out[idx(z, i, j)][idx(z, k, l)] = v
        return out

    def mul(x, y):
        return [[sum((x[r][t] * y[t][c] for t in range(dim)), qq(0))
                 for c in range(dim)] for r in range(dim)]

    a12, a13, a23 = mat12(a_fn(1, 2, ctx)), mat13(a_fn(1, 3, ctx)), mat23(a_fn(2, 3, ctx))
    lhs = mul(mul(a12, a13), a23)
    rhs = mul(mul(a23, a13), a12)
    return max(
        (abs((lhs[r][c] - rhs[r][c]).re) + abs((lhs[r][c] - rhs[r][c]).im)
         for r in range(dim) for c in range(dim)),
        default=0)


def test_yangian_yb_against_index_loop_oracle():
    q, _ = make_yangian(2)
    ctx = ctxs_for(q)[0]

    def a_fn(i, j, ctx):
        return q.A(q.leg(i), q.leg(j))(ctx)

    assert brute_yba_residual(a_fn, ctx, 2) == 0


@pytest.mark.parametrize("maker,n", [
    (make_yangian, 2), (make_yangian, 3),
    (make_kulish_sklyanin, 2), (make_kulish_sklyanin, 3),
    (make_twisted_yangian, 2), (make_twisted_yangian, 3),
    (make_dkm_diagonal, 2),
])
def test_nondynamical_regimes(maker, n):
    q, sol = maker(n)
    ctxs = ctxs_for(q)
    assert failures(check_regime(q, ctxs)) == []
    ok, w = verify_solution(q, sol.T, ctxs)
    assert ok, w
    ok, w = verify_solution(q, sol.dual_K, ctxs, dual=True)
    assert ok, w


@pytest.mark.parametrize("n", [2, 3])
def test_rs_regime_and_solutions(n):
    q, sol = make_rs_rational(n)
    ctxs = ctxs_for(q, legs=())
    assert failures(check_regime(q, ctxs)) == []
    ok, w = verify_solution(q, sol.T, ctxs)
    assert ok, w
    ok, w = verify_solution(q, sol.dual_K, ctxs, dual=True)
    assert ok, w


def test_rs_a_entry_closed_form():
    q, _ = make_rs_rational(2)
    ctx = ctxs_for(q, legs=())[0]
    lam12 = ctx.coord(0) - ctx.coord(1)
    a = q.A(q.leg(1), q.leg(2))(ctx)
    assert a.entry((0, 0), (0, 0)) == 1
    assert a.entry((0, 1), (0, 1)) == 1 + ctx.gamma / lam12
    assert a.entry((0, 1), (0, 0)) == ZERO_MINUS(ctx.gamma / lam12)
    assert a.entry((0, 1), (1, 1)) == ZERO_MINUS(ctx.gamma / lam12)
    assert a.entry((0, 1), (1, 0)) == ctx.gamma / lam12


def ZERO_MINUS(x):
    return qq(0) - x


def test_rs_b_diagonal_first_leg_and_c_second():
    q, _ = make_rs_rational(3)
    ctx = ctxs_for(q, legs=())[0]
    b = q.B(q.leg(1), q.leg(2))(ctx)
    c = q.C(q.leg(1), q.leg(2))(ctx)
    n = 3
    for r in range(n * n):
        for col, v in b.rows[r].items():
            assert b.unravel(r)[0] == b.unravel(col)[0]
    for r in range(n * n):
        for col, v in c.rows[r].items():
            assert c.unravel(r)[1] == c.unravel(col)[1]


def test_rs_ab_equals_cd():
    q, _ = make_rs_rational(2)
    la, lb = q.leg(1), q.leg(2)
    for ctx in ctxs_for(q, legs=()):
        lhs = q.A(la, lb)(ctx) @ q.B(la, lb)(ctx)
        rhs = q.C(la, lb)(ctx) @ q.D(la, lb)(ctx)
        assert lhs == rhs


def test_rs_lax_parameter_screen():
    pinned, evidence = screen_gamma_tilde(2, random.Random(3), count=4)
    assert "gamma" in pinned
    assert evidence["gamma"] == "pass"


def test_felder_regime_and_identity_solution():
    q, sol = make_felder_rational(2)
    ctxs = ctxs_for(q, legs=())
    assert failures(check_regime(q, ctxs)) == []
    ok, w = verify_solution(q, sol.T, ctxs)
    assert ok, w
    assert sol.dual_K is None  # no constant diagonal dual partner exists


def test_felder_swapped_a_fails_a_form():
    # using the unswapped R for A breaks the A-form consistency equation:
    # check_regime must report it rather than pass
    q, _ = make_felder_rational(2)
    q.factories["A"] = q.factories["D"]
    q.factories["C"] = q.factories["D"]
    bad = failures(check_regime(q, ctxs_for(q, legs=())))
    assert any(r["name"] == "gnf-A" for r in bad)


def test_swapped_b_c_fails_rs_zero_weight():
    q, _ = make_rs_rational(2)
    q.factories["B"], q.factories["C"] = q.factories["C"], q.factories["B"]
    bad = failures(check_regime(q, ctxs_for(q, legs=())))
    assert any(r["name"].startswith("zero-weight") for r in bad)


# -- twisted-yangian specifics ----------------------------------------------


@pytest.mark.parametrize("n", [2, 3])
def test_crossing_and_unitarity_identities(n):
    ctxs = sample_contexts(random.Random(5), 4, n, extras=("u:1", "u:2"))
    assert failures(crossing_checks(n, ctxs)) == []


@pytest.mark.parametrize("n", [2, 3])
def test_twisted_dual_identifications(n):
    ctxs = sample_contexts(random.Random(5), 3, n, extras=("u:1", "u:2"))
    rep = twisted_dual_identifications(n, ctxs)
    assert failures(rep) == []
    for item in rep:
        assert item["scalars"], item["name"]


def test_conjugation_matrix_squares_to_identity():
    u = conjugation_matrix(3)
    assert (u @ u).is_identity()


def test_twisted_rejects_non_involutive_u():
    bad = LegMatrix.from_entries(IndexSet([Leg("u", 2)]),
                                 [qq(1), qq(1), qq(0), qq(1)])
    with pytest.raises(ValueError):
        make_twisted_yangian(2, bad)


# -- dkm-diagonal specifics --------------------------------------------------


def test_dkm_unitarity_constant_is_four():
    q, _ = make_dkm_diagonal(2)
    assert q.unitarity_constants[0] == qq(4)
    la, lb = q.leg(1), q.leg(2)
    ctx = Context(None)
    prod = q.A(la, lb)(ctx) @ q.A(lb, la).reordered(IndexSet([la, lb]))(ctx)
    assert prod.proportional_to_identity() == qq(4)


def test_dkm_b_equals_swapped_c():
    q, _ = make_dkm_diagonal(2)
    la, lb = q.leg(1), q.leg(2)
    ctx = Context(None)
    assert q.B(la, lb)(ctx) == q.C(lb, la).reordered(IndexSet([la, lb]))(ctx)


# -- solution relations at the matrix level ----------------------------------


def test_exchange_sides_detect_wrong_t():
    q, _ = make_rs_rational(2)
    from quadex.dynamics import DynMatrix

    def bad_t(leg):
        m = LegMatrix(IndexSet([leg]))
        m.rows[0][0] = qq(1)
        m.rows[1][1] = qq(2)
        m.rows[0][1] = qq(5)
        return DynMatrix.constant(m, name="T")

    ok, w = verify_solution(q, bad_t, ctxs_for(q, legs=()))
    assert not ok and w is not None


def test_dual_sides_detect_wrong_k():
    q, _ = make_kulish_sklyanin(2)
    from quadex.dynamics import DynMatrix

    def bad_k(leg):
        return DynMatrix.constant(generic_scalar_matrix(leg, salt=3), name="K")

    ok, _ = verify_solution(q, bad_k, ctxs_for(q), dual=True)
    assert not ok


# -- serialization -----------------------------------------------------------


def test_bundle_round_trip(tmp_path):
    q, _ = make_dkm_diagonal(2)
    path = tmp_path / "quad.json"
    save_quadruple(q, Context(None), path)
    q2 = load_quadruple(path)
    assert q2.n == 2 and q2.regime == q.regime
    ctx = Context(None)
    la, lb = q.leg(1), q.leg(2)
    for w in "ABCD":
        assert q2._mk(w, la, lb)(ctx) == q._mk(w, la, lb)(ctx)


def test_bundle_rejects_corrupt_file(tmp_path):
    q, _ = make_dkm_diagonal(2)
    path = tmp_path / "quad.json"
    save_quadruple(q, Context(None), path)
    text = path.read_text()
    path.write_text(text[: len(text) // 2])
    with pytest.raises(RegimeError):
        load_quadruple(path)


def test_bundle_rejects_invalid_quadruple_without_force(tmp_path):
    q, _ = make_dkm_diagonal(2)
    path = tmp_path / "quad.json"
    save_quadruple(q, Context(None), path)
    import json

    bundle = json.loads(path.read_text())
    # breaking one entry of A violates unitarity
    bundle["matrices"]["A"]["entries"][0] = [9, 1, 0, 1]
    path.write_text(json.dumps(bundle))
    with pytest.raises(RegimeError):
        load_quadruple(path)
    q2 = load_quadruple(path, force=True)
    assert q2.n == 2


def test_generic_scalar_matrix_is_deterministic_and_invertible():
    a = generic_scalar_matrix(Leg("x", 3))
    b = generic_scalar_matrix(Leg("y", 3))
    assert a.dense_entries() == b.dense_entries()
    a.inverse()  # must not raise

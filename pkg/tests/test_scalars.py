import json

import pytest
from gmpy2 import mpq
from hypothesis import given, strategies as st

from quadex.scalars import I, ONE, QQi, ZERO, ExactDivisionError, qq

rationals = st.fractions(min_value=-(10**4), max_value=10**4, max_denominator=10**4)
scalars = st.builds(lambda a, b: QQi(mpq(a), mpq(b)), rationals, rationals)


def test_construction_and_repr():
    z = qq(3, 7, im=2)
    assert z.re == mpq(3, 7)
    assert z.im == 2
    assert "3/7" in repr(z)


def test_immutable():
    z = qq(1)
    with pytest.raises(AttributeError):
        z.re = mpq(2)


def test_field_axioms_spot():
    a, b, c = qq(2, 3, im=1), qq(-1, 4, im=5), qq(7, im=-2)
    assert (a + b) + c == a + (b + c)
    assert a * (b + c) == a * b + a * c
    assert (a * b) * c == a * (b * c)
    assert a - a == ZERO
    assert a * a.inverse() == ONE


def test_complex_multiplication():
    assert I * I == qq(-1)
    assert (qq(1, im=1) * qq(1, im=-1)) == qq(2)


def test_inverse_of_zero_raises():
    with pytest.raises(ExactDivisionError):
        ZERO.inverse()
    with pytest.raises(ZeroDivisionError):
        qq(5) / ZERO


def test_eq_with_ints_and_hash():
    assert qq(3) == 3
    assert hash(qq(3)) == hash(mpq(3))
    assert qq(3, im=1) != 3


def test_conj():
    z = qq(2, im=5)
    assert z.conj() == qq(2, im=-5)
    assert (z * z.conj()).im == 0


def test_quad_round_trip():
    z = qq(-3, 7, im=2)
    quad = z.to_quad()
    assert quad == [-3, 7, 2, 1]
    assert QQi.from_quad(quad) == z
    # quads are plain ints, hence json-safe
    assert QQi.from_quad(json.loads(json.dumps(quad))) == z


@given(scalars, scalars)
def test_mul_commutes(a, b):
    assert a * b == b * a


@given(scalars, scalars, scalars)
def test_distributivity(a, b, c):
    assert a * (b + c) == a * b + a * c


@given(scalars)
def test_nonzero_has_inverse(a):
    if a:
        assert a * a.inverse() == ONE
        assert (a.inverse()).inverse() == a


@given(scalars)
def test_quad_round_trip_property(a):
    assert QQi.from_quad(a.to_quad()) == a


@given(scalars)
def test_conj_is_involutive_ring_map(a):
    assert a.conj().conj() == a
    assert (a * a).conj() == a.conj() * a.conj()

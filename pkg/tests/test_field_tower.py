from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from conftest import contexts, elements
from padic_witness import INFINITY, DomainError, FieldElement, InputError, PrimeContext, lift_ramification, make_element, valuation
from padic_witness.field_tower import element_from_json, element_to_json, invert, vp


def norm_valuation(x: FieldElement):
    """Independent route: v(x) = v_p(N(x)) / D in a totally ramified extension."""
    D, p = x.ctx.D, x.ctx.p
    cols = []
    for k in range(D):
        c = (x * FieldElement(x.ctx, {k: 1})).coords
        entries = [c.get(i, Fraction(0)) for i in range(D)]
        cols.append([sympy.Rational(a.numerator, a.denominator) for a in entries])
    det = sympy.Matrix(cols).T.det()
    if det == 0:
        return INFINITY
    det = Fraction(int(sympy.numer(det)), int(sympy.denom(det)))
    return Fraction(vp(det, p), D)


def test_make_element_examples():
    five = make_element(PrimeContext(5, 1), [(0, 5)])
    assert valuation(five) == 1

    x = make_element(PrimeContext(2, 2), [(1, 3), (0, 2)])
    assert x.coords == {0: 2, 1: 3}
    assert valuation(x) == Fraction(1, 2)
    assert norm_valuation(x) == Fraction(1, 2)

    zero = make_element(PrimeContext(3, 1), [])
    assert zero.is_zero() and valuation(zero) == INFINITY


def test_make_element_sums_duplicates_and_rejects_bad_index():
    ctx = PrimeContext(3, 2)
    assert make_element(ctx, [(1, 1), (1, 2)]) == make_element(ctx, [(1, 3)])
    assert make_element(ctx, [(0, 1), (0, -1)]).is_zero()
    with pytest.raises(InputError):
        make_element(ctx, [(2, 1)])


def test_prime_context_validation():
    with pytest.raises(InputError):
        PrimeContext(4, 1)
    with pytest.raises(InputError):
        PrimeContext(3, 0)


def test_arithmetic_examples():
    ctx = PrimeContext(2, 2)
    r = FieldElement(ctx, {1: 1})
    assert r * r == FieldElement.rational(ctx, 2)
    x = make_element(ctx, [(0, Fraction(3, 7)), (1, -5)])
    assert (x + (-x)).is_zero()

    ctx5 = PrimeContext(5, 2)
    y = FieldElement(ctx5, {1: 3})
    inv = invert(y)
    assert inv == FieldElement(ctx5, {1: Fraction(1, 15)})
    assert y * inv == 1


def test_invert_zero_and_context_mismatch():
    ctx = PrimeContext(3, 2)
    with pytest.raises(DomainError):
        invert(FieldElement.zero(ctx))
    with pytest.raises(InputError):
        FieldElement.one(ctx) + FieldElement.one(PrimeContext(3, 1))


def test_valuation_examples():
    assert valuation(FieldElement.zero(PrimeContext(2))) == INFINITY
    assert valuation(FieldElement.rational(PrimeContext(2), Fraction(1, 2))) == -1


def test_lift_examples():
    two = FieldElement.rational(PrimeContext(2, 1), 2)
    assert lift_ramification(two, 6).coords == {0: 2}
    x = FieldElement(PrimeContext(2, 2), {1: 3})
    lifted = lift_ramification(x, 6)
    assert lifted.coords == {3: 3} and lifted.ctx.D == 6
    assert lift_ramification(x, 2) is x
    with pytest.raises(InputError):
        lift_ramification(x, 3)


def test_prime_power():
    ctx = PrimeContext(2, 3)
    u = FieldElement.prime_power(ctx, Fraction(7, 3))
    assert u.coords == {1: 4}
    assert valuation(u) == Fraction(7, 3)
    with pytest.raises(InputError):
        FieldElement.prime_power(ctx, Fraction(1, 2))


def test_json_round_trip():
    x = make_element(PrimeContext(2, 2), [(1, 3)])
    obj = element_to_json(x)
    assert obj == {"p": 2, "D": 2, "terms": [{"j": 1, "num": "3", "den": "1"}]}
    assert element_from_json(obj) == x


@st.composite
def element_pairs(draw, nonzero=False):
    ctx = draw(contexts())
    return draw(elements(ctx, nonzero)), draw(elements(ctx, nonzero))


@given(element_pairs(nonzero=True))
def test_valuation_multiplicative(pair):
    x, y = pair
    assert valuation(x * y) == valuation(x) + valuation(y)


@given(element_pairs())
def test_ultrametric(pair):
    x, y = pair
    vx, vy, vs = valuation(x), valuation(y), valuation(x + y)
    assert vs >= min(vx, vy)
    if vx != vy:
        assert vs == min(vx, vy)


@given(st.data())
def test_value_group(data):
    ctx = data.draw(contexts())
    x = data.draw(elements(ctx))
    v = valuation(x)
    assert v == INFINITY or (Fraction(v) * ctx.D).denominator == 1


@settings(max_examples=100)
@given(st.data())
def test_inverse_round_trip(data):
    ctx = data.draw(contexts())
    x = data.draw(elements(ctx, nonzero=True))
    assert x * invert(x) == 1


@settings(max_examples=60)
@given(st.data())
def test_valuation_agrees_with_norm(data):
    ctx = data.draw(contexts(max_D=3))
    x = data.draw(elements(ctx))
    assert valuation(x) == norm_valuation(x)


@given(element_pairs(), st.integers(1, 3))
def test_lift_is_ring_homomorphism(pair, k):
    x, y = pair
    D = x.ctx.D * k
    L = lambda e: lift_ramification(e, D)  # noqa: E731
    assert L(x + y) == L(x) + L(y)
    assert L(x * y) == L(x) * L(y)
    assert valuation(L(x)) == valuation(x)

import sys
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from padic_witness import FieldElement, PrimeContext  # noqa: E402

PRIMES = (2, 3, 5)


def rationals(bound=100, nonzero=False):
    nums = st.integers(-bound, bound)
    if nonzero:
        nums = nums.filter(bool)
    return st.builds(Fraction, nums, st.integers(1, bound))


@st.composite
def contexts(draw, max_D=4):
    return PrimeContext(draw(st.sampled_from(PRIMES)), draw(st.integers(1, max_D)))


@st.composite
def elements(draw, ctx, nonzero=False):
    coords = draw(st.dictionaries(st.integers(0, ctx.D - 1), rationals(), max_size=ctx.D))
    x = FieldElement(ctx, coords)
    if nonzero and x.is_zero():
        x = FieldElement(ctx, {draw(st.integers(0, ctx.D - 1)): draw(rationals(nonzero=True))})
    return x


@pytest.fixture
def ctx2():
    return PrimeContext(2, 1)

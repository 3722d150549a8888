import math
from fractions import Fraction

import pytest

from pslab.context import (
    PSContext,
    ValidationError,
    floor_power,
    frac_power,
    scaled_power_floor,
)

CTX = PSContext(gamma=0.9, c=1.5)


def test_validation():
    with pytest.raises(ValidationError):
        PSContext(gamma=1.2, c=1.5)
    with pytest.raises(ValidationError):
        PSContext(gamma=0.9, c=2.0)  # integer c is rejected
    with pytest.raises(ValidationError):
        PSContext(gamma=0.9, c=1.5, precision_bits=32)


def test_floor_power_exact_route():
    # gamma = 1/2: 49^(1/2) = 7 exactly
    f, exact = floor_power(49, Fraction(1, 2), CTX)
    assert (f, exact) == (7, True)
    f, exact = floor_power(50, Fraction(1, 2), CTX)
    assert (f, exact) == (7, False)


def test_floor_power_float_and_mp_routes():
    g = Fraction(0.9)  # huge numerator: forces the floating routes
    for n in (2, 17, 10**6, 10**12):
        f, _ = floor_power(n, g, CTX)
        assert f == math.floor(float(mpf_pow(n, g)))


def mpf_pow(n, g):
    from mpmath import mp

    with mp.workprec(200):
        return mp.mpf(n) ** (mp.mpf(g.numerator) / mp.mpf(g.denominator))


def test_frac_power():
    r, f, exact = frac_power(50, Fraction(1, 2), CTX)
    assert f == 7 and not exact
    assert abs(r - (math.sqrt(50) - 7)) < 1e-12


def test_scaled_power_floor():
    from mpmath import mp

    g = Fraction(1.2)
    for p in (7, 101, 9973):
        key = scaled_power_floor(p, g, 40, CTX)
        with mp.workprec(200):
            v = mp.mpf(p) ** (mp.mpf(g.numerator) / mp.mpf(g.denominator))
            assert key == int(mp.floor(v * 2**40))

"""Shared independent oracles for the test suite.

Everything here deliberately avoids the package's own floor/sieve code paths:
floors are certified directly with gmpy2/mpmath, and primality comes from a
local sieve, so agreement with the library is a genuine cross-check.
"""

from __future__ import annotations

import math
from fractions import Fraction

import gmpy2
import numpy as np
from mpmath import mp


def oracle_sieve(limit: int) -> np.ndarray:
    """Boolean primality flags for 0..limit (plain Eratosthenes)."""
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, int(math.isqrt(limit)) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return flags


def oracle_floor_pow(base: int, expo: Fraction) -> int:
    """Certified floor(base**expo), independent of the package."""
    if base == 1:
        return 1
    if expo.numerator * max(base.bit_length(), 1) <= 24000:
        root, _ = gmpy2.iroot(gmpy2.mpz(base) ** expo.numerator, expo.denominator)
        return int(root)
    prec = 128
    while prec <= 8192:
        with mp.workprec(prec):
            v = mp.mpf(base) ** (mp.mpf(expo.numerator) / mp.mpf(expo.denominator))
            f = mp.floor(v)
            if min(v - f, f + 1 - v) > v * mp.mpf(2) ** (16 - prec):
                return int(f)
        prec *= 2
    raise RuntimeError(f"oracle floor({base}^{expo}) ambiguous")


def oracle_ps_members(N: int, gamma: float) -> set:
    """m-scan oracle: { floor(m**(1/gamma)) } intersected with [1, N]."""
    inv = 1 / Fraction(gamma)
    out = set()
    m = 1
    while True:
        n = oracle_floor_pow(m, inv)
        if n > N:
            return out
        if n >= 1:
            out.add(n)
        m += 1


def mp_e(x):
    """e(x) = exp(2 pi i x) at the current mpmath precision."""
    return mp.e ** (2j * mp.pi * x)


def mp_psi(x):
    return x - mp.floor(x) - mp.mpf(0.5)

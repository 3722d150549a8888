"""Membership, enumeration and counting for the Piatetski-Shapiro sequence.

N_gamma = { floor(m**(1/gamma)) : m = 1, 2, ... }.  Membership of n is
equivalent to an integer lying in [n^gamma, (n+1)^gamma), which is what the
certified floors decide.  Enumeration is m-driven (O(X^gamma) work per dyadic
window instead of O(X)).
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .arith import primes_between, sieve_flags, is_prime
from .context import (
    PSContext,
    ValidationError,
    floor_power,
    frac_power,
)

__all__ = [
    "PSWindow",
    "is_ps_member",
    "ps_indicator_array",
    "build_window",
    "psi",
    "psi_gamma",
    "indicator_identity_residual",
    "pi_gamma",
    "ps_members_upto",
    "dump_window_csv",
]

_FLOAT_SAFE_REL = 1e-11


@dataclass(frozen=True)
class PSWindow:
    """The dyadic window N_gamma intersect (X/2, X] with cached primes."""

    X: float
    gamma: float
    members: np.ndarray
    primes: np.ndarray
    log_weights: np.ndarray

    def __post_init__(self):
        if len(self.members) > 1 and not np.all(np.diff(self.members) > 0):
            raise ValidationError("window members must be strictly increasing")


def _floor_array(bases: np.ndarray, exponent: Fraction, ctx: PSContext) -> np.ndarray:
    """Vectorized certified floor(base**exponent); escalates ambiguous entries."""
    b = np.asarray(bases, dtype=np.float64)
    x = b ** float(exponent)
    f = np.floor(x)
    d = np.minimum(x - f, f + 1.0 - x)
    guard = max(ctx.boundary_guard, _FLOAT_SAFE_REL)
    ambiguous = (d <= guard * np.maximum(x, 1.0)) | (x >= 2.0**52) | ~np.isfinite(x)
    out = f.astype(np.int64)
    for i in np.flatnonzero(ambiguous):
        out[i] = floor_power(int(bases[i]), exponent, ctx)[0]
    return out


def is_ps_member(n: int, ctx: PSContext) -> bool:
    """True iff n = floor(m**(1/gamma)) for some integer m (certified)."""
    if n < 1:
        raise ValidationError("n must be a positive integer")
    g = ctx.gamma_fraction
    fa, ea = floor_power(n, g, ctx)
    fb, eb = floor_power(n + 1, g, ctx)
    ceil_a = fa if ea else fa + 1
    # integer in [n^g, (n+1)^g)  <=>  ceil(n^g) < (n+1)^g
    return ceil_a < fb if eb else ceil_a <= fb


def ps_indicator_array(n: np.ndarray, ctx: PSContext) -> np.ndarray:
    """Vectorized membership for an int64 array, with per-entry escalation."""
    n = np.asarray(n, dtype=np.int64)
    g = ctx.gamma_fraction
    gf = float(g)
    x = n.astype(np.float64) ** gf
    y = (n + 1).astype(np.float64) ** gf
    fa = np.floor(x)
    fb = np.floor(y)
    da = np.minimum(x - fa, fa + 1.0 - x)
    db = np.minimum(y - fb, fb + 1.0 - y)
    guard = max(ctx.boundary_guard, _FLOAT_SAFE_REL)
    ambiguous = (
        (da <= guard * np.maximum(x, 1.0))
        | (db <= guard * np.maximum(y, 1.0))
        | (y >= 2.0**52)
    )
    out = fa + 1.0 <= fb  # both floors certified non-exact on the fast path
    for i in np.flatnonzero(ambiguous):
        out[i] = is_ps_member(int(n[i]), ctx)
    return out


def ps_members_upto(N: float, ctx: PSContext) -> np.ndarray:
    """All members of N_gamma in [1, N], ascending (m-driven enumeration)."""
    if N < 1:
        return np.empty(0, dtype=np.int64)
    inv_g = ctx.inv_gamma_fraction
    m_hi = math.floor((N + 1) ** ctx.gamma) + 2
    m = np.arange(1, m_hi + 1, dtype=np.int64)
    n = _floor_array(m, inv_g, ctx)
    n = np.unique(n[(n >= 1) & (n <= N)])
    return n


def build_window(X: float, ctx: PSContext) -> PSWindow:
    """N_gamma(X) = N_gamma intersect (X/2, X], with primes and log weights."""
    if X < 4:
        raise ValidationError(f"window requires X >= 4, got {X}")
    inv_g = ctx.inv_gamma_fraction
    m_lo = max(1, math.ceil((X / 2) ** ctx.gamma) - 1)
    m_hi = math.floor((X + 1) ** ctx.gamma) + 2
    m = np.arange(m_lo, m_hi + 1, dtype=np.int64)
    n = _floor_array(m, inv_g, ctx)
    n = np.unique(n[(n > X / 2) & (n <= X)])
    # cross-check against the indicator route
    ok = ps_indicator_array(n, ctx)
    if not np.all(ok):
        raise AssertionError("m-driven enumeration disagrees with the indicator")
    if X <= 10**7:
        flags = sieve_flags(int(math.floor(X)))
        primes = n[flags[n]]
    else:
        primes = np.array([v for v in n if is_prime(int(v))], dtype=np.int64)
    return PSWindow(
        X=float(X),
        gamma=ctx.gamma,
        members=n,
        primes=primes,
        log_weights=np.log(primes.astype(np.float64)),
    )


def psi(x: float) -> float:
    """Sawtooth psi(x) = x - floor(x) - 1/2."""
    return x - math.floor(x) - 0.5


def _psi_of_minus_power(base: int, ctx: PSContext) -> float:
    """psi(-base**gamma), certified."""
    r, _f, exact = frac_power(base, ctx.gamma_fraction, ctx)
    if exact:
        return -0.5
    return 0.5 - r


@lru_cache(maxsize=1 << 20)
def _psi_gamma_cached(n: int, ctx: PSContext) -> float:
    return _psi_of_minus_power(n + 1, ctx) - _psi_of_minus_power(n, ctx)


def psi_gamma(n: int, ctx: PSContext) -> float:
    """Psi_gamma(n) = psi(-(n+1)^gamma) - psi(-n^gamma), in (-1, 1)."""
    if n < 1:
        raise ValidationError("n must be a positive integer")
    return _psi_gamma_cached(int(n), ctx)


def indicator_identity_residual(n: int, ctx: PSContext) -> Fraction:
    """Exact-rational residual of indicator(n) = (n+1)^g - n^g + Psi_gamma(n).

    Evaluated with rational surrogates that share the certified floors, the
    residual is identically zero: the identity is algebra, not approximation.
    """
    g = ctx.gamma_fraction

    def parts(base: int) -> tuple[Fraction, Fraction]:
        r, f, exact = frac_power(base, g, ctx)
        if exact:
            val = Fraction(f)
            floor_neg = Fraction(-f)
        else:
            rq = min(max(Fraction(r), Fraction(1, 10**9)), 1 - Fraction(1, 10**9))
            val = f + rq
            floor_neg = Fraction(-f - 1)
        return val, floor_neg

    a, fna = parts(n)
    b, fnb = parts(n + 1)
    indicator = fna - fnb
    psi_a = -a - fna - Fraction(1, 2)
    psi_b = -b - fnb - Fraction(1, 2)
    return indicator - ((b - a) + (psi_b - psi_a))


def pi_gamma(N: float, ctx: PSContext) -> tuple[int, float, float]:
    """(count, predicted, ratio): primes p <= N in N_gamma vs N^gamma / log N."""
    if N < 10:
        raise ValidationError("pi_gamma requires N >= 10")
    members = ps_members_upto(N, ctx)
    flags = sieve_flags(int(math.floor(N)))
    count = int(np.count_nonzero(flags[members]))
    predicted = N**ctx.gamma / math.log(N)
    return count, predicted, count / predicted


def dump_window_csv(window: PSWindow, ctx: PSContext, fh=None) -> str:
    """CSV dump: JSON context preamble (prefixed '#'), then n,is_prime,log_weight."""
    buf = fh if fh is not None else io.StringIO()
    preamble = {
        "gamma": ctx.gamma,
        "c": ctx.c,
        "precision_bits": ctx.precision_bits,
        "boundary_guard": ctx.boundary_guard,
        "X": window.X,
    }
    buf.write("#" + json.dumps(preamble, sort_keys=True) + "\n")
    buf.write("n,is_prime,log_weight\n")
    prime_set = set(int(p) for p in window.primes)
    for n in window.members:
        n = int(n)
        if n in prime_set:
            buf.write(f"{n},1,{math.log(n)!r}\n")
        else:
            buf.write(f"{n},0,0.0\n")
    return buf.getvalue() if fh is None else ""

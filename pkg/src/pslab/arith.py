"""Sieves, deterministic primality, and reproducible reductions."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

__all__ = [
    "sieve_flags",
    "primes_between",
    "is_prime",
    "mobius_between",
    "mangoldt_between",
    "tree_sum",
    "sinc",
]

# Deterministic Miller-Rabin witness set, valid for all n < 3.3e24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


@lru_cache(maxsize=8)
def sieve_flags(limit: int) -> np.ndarray:
    """Boolean primality table for 0..limit (inclusive)."""
    if limit < 1:
        return np.zeros(max(limit + 1, 1), dtype=bool)
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return flags


def primes_between(lo: float, hi: float) -> np.ndarray:
    """Primes p with lo < p <= hi, ascending."""
    hi_i = math.floor(hi)
    if hi_i < 2:
        return np.empty(0, dtype=np.int64)
    flags = sieve_flags(hi_i)
    p = np.flatnonzero(flags).astype(np.int64)
    return p[p > lo]


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin (exact below 3.3e24)."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@lru_cache(maxsize=4)
def _mobius_table(limit: int) -> np.ndarray:
    mu = np.ones(limit + 1, dtype=np.int64)
    flags = sieve_flags(limit)
    for p in np.flatnonzero(flags):
        p = int(p)
        mu[p::p] *= -1
        sq = p * p
        if sq <= limit:
            mu[sq::sq] = 0
    return mu


def mobius_between(lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    """(n values, mu(n)) for lo < n <= hi."""
    hi_i = math.floor(hi)
    n = np.arange(math.floor(lo) + 1, hi_i + 1, dtype=np.int64)
    return n, _mobius_table(hi_i)[n]


def mangoldt_between(lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    """(n values, Lambda(n)) for lo < n <= hi."""
    hi_i = math.floor(hi)
    n = np.arange(math.floor(lo) + 1, hi_i + 1, dtype=np.int64)
    lam = np.zeros(len(n), dtype=np.float64)
    for p in np.flatnonzero(sieve_flags(hi_i)):
        p = int(p)
        q = p
        while q <= hi_i:
            idx = q - (math.floor(lo) + 1)
            if 0 <= idx < len(n):
                lam[idx] = math.log(p)
            q *= p
    return n, lam


def tree_sum(values: np.ndarray, axis: int = -1):
    """Fixed binary-tree reduction; bit-reproducible irrespective of threading.

    Pads to a power of two with zeros and folds pairwise, so the summation
    order depends only on the length of the input.
    """
    a = np.asarray(values)
    a = np.moveaxis(a, axis, -1)
    n = a.shape[-1]
    if n == 0:
        return np.zeros(a.shape[:-1], dtype=a.dtype) if a.ndim > 1 else a.dtype.type(0)
    size = 1 << (n - 1).bit_length()
    if size != n:
        pad = np.zeros(a.shape[:-1] + (size - n,), dtype=a.dtype)
        a = np.concatenate([a, pad], axis=-1)
    while a.shape[-1] > 1:
        a = a[..., 0::2] + a[..., 1::2]
    out = a[..., 0]
    return out if out.ndim else out[()]


def sinc(x):
    """sin(x)/x with a Taylor fallback near the diagonal (|x| < 1e-4)."""
    x = np.asarray(x, dtype=np.float64)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    out = np.where(small, 1.0 - x * x / 6.0 + x**4 / 120.0, np.sin(safe) / safe)
    return out if out.ndim else float(out)

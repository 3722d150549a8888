"""Direct search for |p_1^c + ... + p_s^c - N| < eps in Piatetski-Shapiro primes.

Counting is exact: each p^c is reduced to an outward-rounded fixed-point key
floor(p^c * 2^scale) certified by arbitrary-precision floors, so a sum of h
keys brackets the true power sum inside [K, K + h] * 2^-scale.  Key windows
around N can therefore never miss a true solution; tuples whose bracket
straddles the boundary |sum - N| = eps are re-verified at 4x working
precision (escalating further if still ambiguous, never guessing).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from mpmath import mp

from .arith import sieve_flags
from .context import (
    BudgetExceeded,
    PrecisionExhausted,
    PSContext,
    ValidationError,
    scaled_power_floor,
)
from .psprimes import ps_members_upto

__all__ = ["SearchTask", "SolutionTuple", "find_solutions", "exceptional_scan"]

_MODES = ("first", "count", "all")


@dataclass(frozen=True)
class SolutionTuple:
    primes: tuple
    weight: float  # product of log p_j
    defect: float  # sum p_j^c - N, from the high-precision verification


@dataclass(frozen=True)
class SearchTask:
    N: float
    s: int
    epsilon: float
    prime_floor: float | None = None
    prime_ceiling: float | None = None
    mode: str = "count"

    def __post_init__(self):
        if not 2 <= self.s <= 5:
            raise ValidationError("s must lie in [2, 5]")
        if self.epsilon <= 0:
            raise ValidationError("epsilon must be positive")
        if self.mode not in _MODES:
            raise ValidationError(f"mode must be one of {_MODES}")
        if self.N <= 0:
            raise ValidationError("N must be positive")

    def range_bounds(self, ctx: PSContext) -> tuple[float, float]:
        """Default window (X/2, X]: X = (2N/3)^(1/c) for s=2, (N/2)^(1/c) else."""
        if self.prime_floor is not None and self.prime_ceiling is not None:
            if not 0 < self.prime_floor < self.prime_ceiling:
                raise ValidationError("empty search range")
            return self.prime_floor, self.prime_ceiling
        base = 2.0 * self.N / 3.0 if self.s == 2 else self.N / 2.0
        X = base ** (1.0 / ctx.c)
        return X / 2.0, X


@lru_cache(maxsize=32)
def _ps_primes_in(lo: float, hi: float, ctx: PSContext) -> tuple:
    members = ps_members_upto(hi, ctx)
    members = members[members > lo]
    if len(members) == 0:
        return ()
    flags = sieve_flags(int(math.floor(hi)))
    return tuple(int(p) for p in members[flags[members]])


@lru_cache(maxsize=200_000)
def _key_cached(p: int, scale_bits: int, ctx: PSContext) -> int:
    return scaled_power_floor(p, ctx.c_fraction, scale_bits, ctx)


def _verify(primes, N: float, eps: float, ctx: PSContext) -> tuple[bool, float]:
    """(is_solution, defect) certified at >= 4x working precision."""
    prec = 4 * ctx.precision_bits
    scale = max(abs(N), 1.0)
    while prec <= 4 * ctx.max_precision_bits:
        with mp.workprec(prec):
            c = mp.mpf(ctx.c)
            d = mp.fsum([mp.mpf(int(p)) ** c for p in primes]) - mp.mpf(N)
            gap = abs(d) - mp.mpf(eps)
            if abs(gap) > scale * mp.mpf(2.0) ** (12 - prec):
                return bool(gap < 0), float(d)
        prec *= 2
    raise PrecisionExhausted(
        f"|sum - N| vs eps undecidable at {4 * ctx.max_precision_bits} bits for {primes}"
    )


def _half_sums(keys: np.ndarray, h: int) -> np.ndarray:
    out = np.zeros(1, dtype=np.int64)
    for _ in range(h):
        out = np.add.outer(out, keys).ravel()
    return out


def _decode(flat: int, base: int, h: int) -> tuple:
    idx = []
    for _ in range(h):
        flat, r = divmod(flat, base)
        idx.append(r)
    return tuple(reversed(idx))


def find_solutions(task: SearchTask, ctx: PSContext, raw_budget: float = 1e8):
    """mode='count' -> exact number of ordered tuples; otherwise a list of
    verified SolutionTuple (at most one for mode='first')."""
    lo, hi = task.range_bounds(ctx)
    primes = _ps_primes_in(float(lo), float(hi), ctx)
    if not primes:
        return 0 if task.mode == "count" else []
    P = len(primes)
    if P**task.s > raw_budget:
        raise BudgetExceeded(f"raw space {P ** task.s:g} exceeds budget {raw_budget:g}")
    # fixed-point scale: keep s-fold key sums inside int64
    max_pow = hi**ctx.c
    scale_bits = min(40, 62 - int(math.log2(task.s * max_pow + 1)) - 1)
    if scale_bits < 8:
        raise ValidationError("N too large for 64-bit fixed-point keys")
    keys = np.array([_key_cached(p, scale_bits, ctx) for p in primes], dtype=np.int64)

    h_a = (task.s + 1) // 2
    h_b = task.s - h_a
    a = _half_sums(keys, h_a)
    order = np.argsort(a, kind="mergesort")
    a_sorted = a[order]
    b = _half_sums(keys, h_b)

    two = Fraction(2) ** scale_bits
    lo_excl = (Fraction(task.N) - Fraction(task.epsilon)) * two  # K + s <= this => out
    hi_excl = (Fraction(task.N) + Fraction(task.epsilon)) * two  # K >= this => out
    k_min = math.ceil(lo_excl) - task.s  # smallest possibly-solution total key
    k_max = math.ceil(hi_excl) - 1       # largest possibly-solution total key
    # strict inner window: K > lo_excl and K + s < hi_excl is certainly a solution
    inner_lo = math.floor(lo_excl) + 1
    inner_hi = math.ceil(hi_excl) - 1 - task.s

    logs = {p: math.log(p) for p in primes}
    count = 0
    found: list[SolutionTuple] = []
    for j in range(len(b)):
        bk = int(b[j])
        i0 = int(np.searchsorted(a_sorted, k_min - bk, side="left"))
        i1 = int(np.searchsorted(a_sorted, k_max - bk, side="right"))
        for t in range(i0, i1):
            K = int(a_sorted[t]) + bk
            ia = _decode(int(order[t]), P, h_a)
            ib = _decode(j, P, h_b)
            tup = tuple(primes[i] for i in ia) + tuple(primes[i] for i in ib)
            if inner_lo <= K <= inner_hi:
                ok, defect = True, (K + 0.5 * task.s) / float(two) - task.N
            else:
                ok, defect = _verify(tup, task.N, task.epsilon, ctx)
            if not ok:
                continue
            count += 1
            if task.mode != "count":
                if task.mode == "all" and len(found) >= 100_000:
                    raise BudgetExceeded("more than 1e5 solutions; narrow the search")
                ok4, defect = _verify(tup, task.N, task.epsilon, ctx)
                if not ok4:
                    raise PrecisionExhausted("candidate failed re-verification")
                found.append(
                    SolutionTuple(
                        primes=tup,
                        weight=math.prod(logs[p] for p in tup),
                        defect=defect,
                    )
                )
                if task.mode == "first":
                    return found
    return count if task.mode == "count" else found


def _min_defects(keys_sorted: np.ndarray, N: float, scale_bits: int) -> float:
    """Minimal |p1^c + p2^c - N| over ordered pairs, up to key rounding 2^-scale."""
    target = N * 2.0**scale_bits
    pos = int(np.searchsorted(keys_sorted, target))
    best = np.inf
    for idx in (pos - 1, pos):
        if 0 <= idx < len(keys_sorted):
            best = min(best, abs(float(keys_sorted[idx]) - target))
    return best / 2.0**scale_bits


def exceptional_scan(
    Z: float,
    samples: int,
    ctx: PSContext,
    epsilon_rule=None,
    seed: int = 0,
    bins: int = 20,
):
    """Fraction of sampled N in (Z/2, Z] with no s=2 solution at
    eps = (log N)^-1 (or epsilon_rule(N)), plus a histogram of defect minima.

    Samples come from a seeded Kronecker (golden ratio) low-discrepancy
    sequence, so identical seeds give identical N lists.
    """
    if samples < 100:
        raise ValidationError("samples must be >= 100")
    if Z < 100:
        raise ValidationError("Z must be >= 100")
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    offset = (seed * phi) % 1.0
    fracs = np.mod(offset + phi * np.arange(1, samples + 1), 1.0)
    Ns = Z / 2.0 + fracs * (Z / 2.0)

    X = (2.0 * Z / 3.0) ** (1.0 / ctx.c)
    primes = _ps_primes_in(X / 2.0, X, ctx)
    insoluble = 0
    minima = np.empty(samples)
    errors = []
    if primes:
        max_pow = X**ctx.c
        scale_bits = min(40, 62 - int(math.log2(2 * max_pow + 1)) - 1)
        keys = np.array([_key_cached(p, scale_bits, ctx) for p in primes], dtype=np.int64)
        pair_keys = np.sort(_half_sums(keys, 2), kind="mergesort")
    for i, N in enumerate(Ns):
        N = float(N)
        eps = 1.0 / math.log(N) if epsilon_rule is None else float(epsilon_rule(N))
        if not primes:
            insoluble += 1
            minima[i] = np.inf
            continue
        task = SearchTask(
            N=N, s=2, epsilon=eps,
            prime_floor=X / 2.0, prime_ceiling=X, mode="first",
        )
        try:
            hit = find_solutions(task, ctx)
        except BudgetExceeded as exc:  # collected, not fatal
            errors.append((N, str(exc)))
            minima[i] = np.nan
            continue
        if not hit:
            insoluble += 1
        minima[i] = _min_defects(pair_keys, N, scale_bits)
    finite = minima[np.isfinite(minima)]
    if len(finite):
        counts, edges = np.histogram(np.log10(np.maximum(finite, 1e-300)), bins=bins)
    else:
        counts, edges = np.zeros(bins, dtype=np.int64), np.linspace(0.0, 1.0, bins + 1)
    return insoluble / samples, {
        "log10_defect_edges": edges.tolist(),
        "counts": counts.tolist(),
        "errors": errors,
        "samples": samples,
        "Z": Z,
    }

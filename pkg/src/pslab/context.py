"""Evaluation context and certified floor arithmetic.

Everything downstream hinges on floors of n^gamma, m^(1/gamma) and p^c being
*correct*, not merely close.  Floors are decided along three routes, tried in
order:

1. exact integer arithmetic when the exponent is a rational a/b with a small
   enough numerator (covers gamma = 1/2, 3/4, ... where n^gamma can land
   exactly on an integer);
2. a float64 fast path, accepted only when the fractional part is safely far
   from an integer (relative distance above the boundary guard);
3. arbitrary-precision escalation with mpmath, doubling the working precision
   until the floor is unambiguous or the configured ceiling is hit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
import mpmath
from mpmath import mp

__all__ = [
    "PSContext",
    "PrecisionExhausted",
    "ValidationError",
    "BudgetExceeded",
    "floor_power",
    "frac_power",
    "power_mpf",
    "scaled_power_floor",
]


class ValidationError(ValueError):
    """Bad input: violated precondition or malformed configuration."""


class PrecisionExhausted(RuntimeError):
    """A floor could not be certified at the maximum allowed precision."""


class BudgetExceeded(RuntimeError):
    """An enumeration would exceed its configured tuple/grid budget."""


# Float64 powers carry ~1e-16 relative error; exponents obtained from
# Fraction arithmetic add a few more ulps.  1e-11 leaves two orders of margin.
_FLOAT_SAFE_REL = 1e-11

# Largest bit size for which base**num is computed exactly.
_EXACT_BITS = 24000


@dataclass(frozen=True)
class PSContext:
    """The pair (gamma, c) plus the precision policy governing every evaluation."""

    gamma: float
    c: float
    precision_bits: int = 96
    boundary_guard: float = 1e-9
    max_precision_bits: int = 4096

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValidationError(f"gamma must lie in (0,1), got {self.gamma}")
        if not self.c > 1.0:
            raise ValidationError(f"c must exceed 1, got {self.c}")
        if abs(self.c - round(self.c)) < 1e-12:
            raise ValidationError(f"c must not be within 1e-12 of an integer, got {self.c}")
        if self.precision_bits < 64:
            raise ValidationError("precision_bits must be >= 64")
        if not 0.0 < self.boundary_guard <= 1e-3:
            raise ValidationError("boundary_guard must lie in (0, 1e-3]")
        if self.max_precision_bits < self.precision_bits:
            raise ValidationError("max_precision_bits must be >= precision_bits")

    @property
    def gamma_fraction(self) -> Fraction:
        """gamma as the exact rational represented by its float."""
        return Fraction(self.gamma)

    @property
    def inv_gamma_fraction(self) -> Fraction:
        return 1 / Fraction(self.gamma)

    @property
    def c_fraction(self) -> Fraction:
        return Fraction(self.c)


def _exact_feasible(base: int, exponent: Fraction) -> bool:
    return exponent.numerator * max(base.bit_length(), 1) <= _EXACT_BITS


def _floor_exact(base: int, exponent: Fraction) -> tuple[int, bool]:
    root, exact = gmpy2.iroot(gmpy2.mpz(base) ** exponent.numerator, exponent.denominator)
    return int(root), bool(exact)


def _floor_float(base: int, exponent: Fraction, guard: float) -> tuple[int, bool] | None:
    x = math.pow(base, float(exponent))
    if not math.isfinite(x) or x >= 2**52:
        return None
    f = math.floor(x)
    d = min(x - f, f + 1 - x)
    if d > max(guard, _FLOAT_SAFE_REL) * max(x, 1.0):
        return f, False
    return None


def _floor_mp(base: int, exponent: Fraction, ctx: PSContext) -> tuple[int, bool]:
    num, den = exponent.numerator, exponent.denominator
    prec = max(ctx.precision_bits, 64)
    while prec <= ctx.max_precision_bits:
        with mp.workprec(prec):
            v = mp.mpf(base) ** (mp.mpf(num) / mp.mpf(den))
            f = mp.floor(v)
            d = min(v - f, f + 1 - v)
            if d > v * mp.mpf(2) ** (12 - prec):
                return int(f), False
        prec *= 2
    raise PrecisionExhausted(
        f"floor({base}^{num}/{den}) ambiguous at {ctx.max_precision_bits} bits"
    )


def floor_power(base: int, exponent: Fraction, ctx: PSContext) -> tuple[int, bool]:
    """Certified (floor(base**exponent), is_exact_integer).

    ``is_exact_integer`` can only be established on the exact route; the
    floating routes certify a strict inequality instead.
    """
    if base < 1:
        raise ValidationError("base must be a positive integer")
    if base == 1:
        return 1, True
    if _exact_feasible(base, exponent):
        return _floor_exact(base, exponent)
    hit = _floor_float(base, exponent, ctx.boundary_guard)
    if hit is not None:
        return hit
    return _floor_mp(base, exponent, ctx)


def power_mpf(base: int, exponent: Fraction, prec: int) -> mpmath.mpf:
    """base**exponent as an mpf computed at ``prec`` bits."""
    with mp.workprec(prec):
        return mp.mpf(base) ** (mp.mpf(exponent.numerator) / mp.mpf(exponent.denominator))


def frac_power(base: int, exponent: Fraction, ctx: PSContext) -> tuple[float, int, bool]:
    """(fractional part, floor, is_exact) of base**exponent.

    The fractional part is accurate to ~1e-16 absolute regardless of the
    magnitude of the power (evaluated with enough working precision).
    """
    f, exact = floor_power(base, exponent, ctx)
    if exact:
        return 0.0, f, True
    prec = max(ctx.precision_bits, 64) + max(f, 1).bit_length()
    v = power_mpf(base, exponent, prec)
    return float(v - f), f, False


def scaled_power_floor(base: int, exponent: Fraction, scale_bits: int, ctx: PSContext) -> int:
    """Certified floor(base**exponent * 2**scale_bits).

    Used to build outward-rounded fixed-point sort keys for the
    meet-in-the-middle searches; the true value lies in [key, key+1] * 2^-scale.
    """
    if base == 1:
        return 1 << scale_bits
    num, den = exponent.numerator, exponent.denominator
    if _exact_feasible(base, exponent) and scale_bits * den <= 4 * _EXACT_BITS:
        # floor(base^(a/b) * 2^s) = floor((base^a * 2^(s*b))^(1/b))
        root, _ = gmpy2.iroot(gmpy2.mpz(base) ** num << (scale_bits * den), den)
        return int(root)
    prec = max(ctx.precision_bits, 64) + scale_bits
    while prec <= ctx.max_precision_bits + scale_bits:
        with mp.workprec(prec):
            v = (mp.mpf(base) ** (mp.mpf(num) / mp.mpf(den))) * mp.mpf(2) ** scale_bits
            f = mp.floor(v)
            d = min(v - f, f + 1 - v)
            if d > v * mp.mpf(2) ** (12 - prec):
                return int(f)
        prec *= 2
    raise PrecisionExhausted(
        f"floor(2^{scale_bits} * {base}^{num}/{den}) ambiguous at max precision"
    )

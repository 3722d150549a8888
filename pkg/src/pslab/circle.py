"""Davenport-Heilbronn pipeline at desk scale.

R(N) = sum over prime tuples (log-weighted) of K_tau(p_1^c + ... + p_s^c - N)
is computed two independent ways: a meet-in-the-middle direct count, and the
Fourier integral of F_1(theta) = S(theta;X_0)^(2u+1) prod_j S(theta;X_j)^2
against e(-N theta) Khat_tau.

Quadrature note: F_1(theta) e(-N theta) Khat_tau(theta) is a finite sum of
terms w * e(theta d) Khat_tau(theta) with defects d confined to a bounded
interval.  An infinite trapezoid sum with spacing h therefore equals
sum_tuples w * sum_m K_tau(d - m/h) by Poisson summation, which is *exactly*
R(N) once 1/h exceeds max|d| + tau (every aliased copy lands outside the
kernel support).  The grid spacing here is 1/(2.5 (max|d| + tau)), so the only
quadrature error is the truncation at |theta| = Theta, which is bounded by the
kernel tail mass times the trivial bound on |F_1| and is driven below 1e-6 of
the expected main term when Theta is chosen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np
from numba import njit, prange

from .context import BudgetExceeded, PSContext, ValidationError
from .expsums import cached_window, eval_V_grid
from .kernel import SmoothKernel, default_kernel, eval_K_tau, tail_threshold
from .psprimes import PSWindow

__all__ = [
    "CircleConfig",
    "IntegralReport",
    "NonConvergence",
    "build_config",
    "r_direct",
    "r_integral",
    "integral_report",
    "region_breakdown",
    "main_term_and_xi",
    "diagonal_count",
]

# Truncation target for Theta, relative to Xi; far stricter than the 1e-3
# bookkeeping requirement because the kernel tail decays like exp(-a sqrt t)
# and the extra grid is cheap.
_TAIL_REL = 1e-6

_RAW_BUDGET_DEFAULT = 5e8


class NonConvergence(RuntimeError):
    """Halving the quadrature spacing moved the result by more than 1e-3."""


@dataclass(eq=False, frozen=True)
class CircleConfig:
    N: float
    gamma: float
    c: float
    depth_t: int
    depth_u: int
    s: int
    tau: float
    delta: float
    eta: float
    ranges: tuple          # (X_0, X_1, ..., X_t)
    multiplicities: tuple  # (2u+1, 2, ..., 2)
    major_bound: float     # X^(gamma - c - delta)
    minor_bound: float     # X^delta
    theta_truncation: float
    quad_spacing: float
    xi: float
    windows: tuple | None  # PSWindows, None when some range is below 4

    @property
    def X(self) -> float:
        return self.ranges[1]


def _xi_value(N, gamma, c, tau, ranges, depth_u) -> float:
    X = ranges[1]
    log_prod = 2.0 * sum(math.log(x) for x in ranges[1:]) + (
        2 * depth_u + 1
    ) * math.log(X)
    return tau * math.exp(gamma * log_prod - c * math.log(X))


def build_config(
    N: float,
    ctx: PSContext,
    depth_t: int,
    depth_u: int,
    delta: float = 0.05,
    tau_scale: float = 1.0,
    kernel: SmoothKernel | None = None,
) -> CircleConfig:
    if depth_t < 1 or depth_u < 1:
        raise ValidationError("depth_t and depth_u must be >= 1")
    if not 0 < delta < 0.5:
        raise ValidationError("delta must lie in (0, 1/2)")
    if N < 100:
        raise ValidationError("N must be >= 100")
    c, g = ctx.c, ctx.gamma
    X = N ** (1.0 / c)
    ranges = [X / (3.0 * depth_u), X]
    for _ in range(2, depth_t + 1):
        ranges.append(0.5 * ranges[-1] ** (1.0 - 1.0 / c))
    # The diminishing ranges collapse quickly; X_t >= 2 suffices for the
    # main-term integrals, window-based operations re-check X >= 4 themselves.
    if ranges[-1] < 2.0:
        raise ValidationError(
            f"range collapse: X_{depth_t} = {ranges[-1]:.3f} < 2 (N too small for t={depth_t})"
        )
    s = 2 * depth_t + 2 * depth_u + 1
    tau = tau_scale / math.log(N)
    eta = math.log(X) ** (-0.75)
    mults = (2 * depth_u + 1,) + (2,) * depth_t
    xi = _xi_value(N, g, c, tau, ranges, depth_u)
    kern = kernel if kernel is not None else default_kernel()

    windows = None
    if min(ranges) >= 4.0:
        windows = tuple(cached_window(float(x), ctx) for x in ranges)

    # Theta and spacing: trivial bound W on |F_1| from the log weights when
    # windows exist, else the integral envelopes (used by the main term only).
    if windows is not None and all(len(w.primes) for w in windows):
        W = 1.0
        hi = lo = 0.0
        for w, mult in zip(windows, mults):
            tot = float(np.sum(w.log_weights))
            W *= tot**mult
            p = w.primes.astype(np.float64)
            hi += mult * float(p[-1] ** c)
            lo += mult * float(p[0] ** c)
    else:
        W = 1.0
        hi = lo = 0.0
        for x, mult in zip(ranges, mults):
            W *= (x**g) ** mult
            hi += mult * x**c
            lo += mult * (x / 2.0) ** c
    d_max = max(hi - N, N - lo, tau)
    quad_spacing = 1.0 / (2.5 * (d_max + tau))
    T = tail_threshold(kern, _TAIL_REL * xi / W)
    theta_truncation = max(T / tau, 4.0 * X ** (g - c - delta))

    return CircleConfig(
        N=float(N),
        gamma=g,
        c=c,
        depth_t=depth_t,
        depth_u=depth_u,
        s=s,
        tau=tau,
        delta=delta,
        eta=eta,
        ranges=tuple(ranges),
        multiplicities=mults,
        major_bound=X ** (g - c - delta),
        minor_bound=X**delta,
        theta_truncation=theta_truncation,
        quad_spacing=quad_spacing,
        xi=xi,
        windows=windows,
    )


def _require_windows(config: CircleConfig) -> tuple:
    if config.windows is None:
        raise ValidationError(
            "range collapse: smallest range is below 4, windows unavailable "
            "(only the main term is defined at this N)"
        )
    return config.windows


# ---------------------------------------------------------------------------
# Direct count (meet in the middle)
# ---------------------------------------------------------------------------


def _half_split(sizes: list[int]) -> tuple[list[int], list[int]]:
    """Split slot indices into two halves with balanced products (greedy)."""
    order = sorted(range(len(sizes)), key=lambda i: (-sizes[i], i))
    a, b = [], []
    pa = pb = 1
    for i in order:
        if pa <= pb:
            a.append(i)
            pa *= sizes[i]
        else:
            b.append(i)
            pb *= sizes[i]
    if not a or not b:
        b.append(a.pop())
    return sorted(a), sorted(b)


def _enumerate_half(slot_values, slot_weights, idxs):
    sums = np.zeros(1)
    wts = np.ones(1)
    for i in idxs:
        sums = np.add.outer(sums, slot_values[i]).ravel()
        wts = np.multiply.outer(wts, slot_weights[i]).ravel()
    return sums, wts


def r_direct(
    config: CircleConfig,
    ctx: PSContext,
    kernel: SmoothKernel | None = None,
    raw_budget: float = _RAW_BUDGET_DEFAULT,
) -> float:
    """R(N) by exact enumeration with sorted partial sums."""
    kern = kernel if kernel is not None else default_kernel()
    windows = _require_windows(config)
    c, tau, N = config.c, config.tau, config.N
    slot_values, slot_weights, sizes = [], [], []
    for w, mult in zip(windows, config.multiplicities):
        if len(w.primes) == 0:
            return 0.0
        vals = w.primes.astype(np.float64) ** c
        for _ in range(mult):
            slot_values.append(vals)
            slot_weights.append(w.log_weights)
            sizes.append(len(vals))
    raw = reduce(lambda x, y: x * y, sizes, 1)
    if raw > raw_budget:
        raise BudgetExceeded(f"raw tuple count {raw} exceeds budget {raw_budget:g}")
    ia, ib = _half_split(sizes)
    a_sums, a_wts = _enumerate_half(slot_values, slot_weights, ia)
    b_sums, b_wts = _enumerate_half(slot_values, slot_weights, ib)
    order = np.argsort(a_sums, kind="mergesort")
    a_sums, a_wts = a_sums[order], a_wts[order]
    slack = tau * (1.0 + 1e-9) + 1e-9
    lo = np.searchsorted(a_sums, (N - slack) - b_sums, side="left")
    hi = np.searchsorted(a_sums, (N + slack) - b_sums, side="right")
    parts = []
    for j in np.flatnonzero(hi > lo):
        sl = slice(lo[j], hi[j])
        d = a_sums[sl] + b_sums[j] - N
        parts.append(float(np.sum(a_wts[sl] * b_wts[j] * eval_K_tau(d, tau, kern))))
    return math.fsum(parts)


# ---------------------------------------------------------------------------
# Fourier integral engine
# ---------------------------------------------------------------------------

_CHUNK = 2048
_TWO_PI = 2.0 * math.pi


@njit(cache=True)
def _hat_base_at(t, table, dt):
    """Catmull-Rom interpolation of the (even) Ktilde_hat table at t >= 0."""
    u = t / dt
    i = int(u)
    if i >= table.size - 2:
        return 0.0
    s = u - i
    p0 = table[i]
    p1 = table[i + 1]
    pm = table[1] if i == 0 else table[i - 1]  # even symmetry across t = 0
    p2 = table[i + 2]
    a = 2.0 * p0
    b = (p1 - pm) * s
    cc = (2.0 * pm - 5.0 * p0 + 4.0 * p1 - p2) * s * s
    d = (3.0 * (p0 - p1) + p2 - pm) * s * s * s
    return 0.5 * (a + b + cc + d)


@njit(parallel=True, cache=True)
def _f1_grid(powers, weights, offs, mults, dtheta, npts, N, tau,
             table, dt_table, bmaj, bmin):
    """Chunked trapezoid accumulation of F_1(theta) e(-N theta) Khat_tau.

    Returns per-chunk partial sums (signed re / one-sided im / |F_1| Khat, per
    region major=0 minor=1 trivial=2, plus the even-index subgrid), so the
    final reduction is a fixed-order fsum independent of the thread count.
    """
    nterms = powers.size
    nw = offs.size - 1
    nch = (npts + 1 + _CHUNK - 1) // _CHUNK
    out_re = np.zeros((nch, 3))
    out_im = np.zeros((nch, 3))
    out_abs = np.zeros((nch, 3))
    out_even = np.zeros(nch)
    for ci in prange(nch):
        k0 = ci * _CHUNK
        k1 = min(k0 + _CHUNK, npts + 1)
        th0 = k0 * dtheta
        zr = np.empty(nterms)
        zi = np.empty(nterms)
        mr = np.empty(nterms)
        mi = np.empty(nterms)
        for i in range(nterms):
            ph = th0 * powers[i]
            ph -= np.floor(ph)
            zr[i] = np.cos(_TWO_PI * ph)
            zi[i] = np.sin(_TWO_PI * ph)
            ph = dtheta * powers[i]
            ph -= np.floor(ph)
            mr[i] = np.cos(_TWO_PI * ph)
            mi[i] = np.sin(_TWO_PI * ph)
        ph = th0 * N
        ph -= np.floor(ph)
        enr = np.cos(_TWO_PI * ph)
        eni = -np.sin(_TWO_PI * ph)
        ph = dtheta * N
        ph -= np.floor(ph)
        dnr = np.cos(_TWO_PI * ph)
        dni = -np.sin(_TWO_PI * ph)
        for k in range(k0, k1):
            fr = 1.0
            fi = 0.0
            for w in range(nw):
                sr = 0.0
                si = 0.0
                for i in range(offs[w], offs[w + 1]):
                    sr += weights[i] * zr[i]
                    si += weights[i] * zi[i]
                    t = zr[i] * mr[i] - zi[i] * mi[i]
                    zi[i] = zr[i] * mi[i] + zi[i] * mr[i]
                    zr[i] = t
                for _ in range(mults[w]):
                    t = fr * sr - fi * si
                    fi = fr * si + fi * sr
                    fr = t
            theta = k * dtheta
            kh = tau * _hat_base_at(tau * theta, table, dt_table) ** 2
            wq = 0.5 if k == 0 else 1.0
            reg = 0 if theta < bmaj else (1 if theta <= bmin else 2)
            rr = fr * enr - fi * eni
            ri = fr * eni + fi * enr
            out_re[ci, reg] += wq * rr * kh
            out_im[ci, reg] += wq * ri * kh
            out_abs[ci, reg] += wq * math.sqrt(fr * fr + fi * fi) * kh
            if k % 2 == 0:
                out_even[ci] += (0.5 if k == 0 else 1.0) * rr * kh
            t = enr * dnr - eni * dni
            eni = enr * dni + eni * dnr
            enr = t
    return out_re, out_im, out_abs, out_even


@dataclass(frozen=True)
class IntegralReport:
    value: float
    coarse_value: float
    rel_change: float
    im_onesided: float
    major_signed: float
    minor_signed: float
    trivial_signed: float
    major_abs: float
    minor_abs: float
    trivial_abs: float
    theta_truncation: float
    quad_spacing: float
    n_points: int


@lru_cache(maxsize=16)
def _integral_report_cached(config: CircleConfig, ctx: PSContext, kern: SmoothKernel):
    windows = _require_windows(config)
    c = config.c
    powers, weights, offs = [], [], [0]
    for w in windows:
        if len(w.primes) == 0:
            return IntegralReport(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
                                  0.0, config.theta_truncation,
                                  config.quad_spacing, 0)
        powers.append(w.primes.astype(np.float64) ** c)
        weights.append(w.log_weights)
        offs.append(offs[-1] + len(w.primes))
    powers = np.concatenate(powers)
    weights = np.concatenate(weights)
    offs = np.asarray(offs, dtype=np.int64)
    mults = np.asarray(config.multiplicities, dtype=np.int64)
    dtheta = config.quad_spacing
    npts = int(math.ceil(config.theta_truncation / dtheta))
    if npts % 2:
        npts += 1
    out_re, out_im, out_abs, out_even = _f1_grid(
        powers, weights, offs, mults, dtheta, npts, config.N, config.tau,
        kern.hat_base_table, float(kern.t_grid[1] - kern.t_grid[0]),
        config.major_bound, config.minor_bound,
    )
    reg_signed = [2.0 * dtheta * math.fsum(out_re[:, r]) for r in range(3)]
    reg_im = [2.0 * dtheta * math.fsum(out_im[:, r]) for r in range(3)]
    reg_abs = [2.0 * dtheta * math.fsum(out_abs[:, r]) for r in range(3)]
    value = math.fsum(reg_signed)
    coarse = 4.0 * dtheta * math.fsum(out_even)
    rel_change = abs(value - coarse) / max(abs(value), 1e-300)
    if rel_change > 1e-3:
        raise NonConvergence(
            f"quadrature moved by {rel_change:.3e} between spacings "
            f"{2 * dtheta:g} and {dtheta:g}"
        )
    return IntegralReport(
        value=value,
        coarse_value=coarse,
        rel_change=rel_change,
        im_onesided=abs(math.fsum(reg_im)),
        major_signed=reg_signed[0],
        minor_signed=reg_signed[1],
        trivial_signed=reg_signed[2],
        major_abs=reg_abs[0],
        minor_abs=reg_abs[1],
        trivial_abs=reg_abs[2],
        theta_truncation=config.theta_truncation,
        quad_spacing=dtheta,
        n_points=npts + 1,
    )


def integral_report(config, ctx, kernel: SmoothKernel | None = None) -> IntegralReport:
    kern = kernel if kernel is not None else default_kernel()
    return _integral_report_cached(config, ctx, kern)


def r_integral(config, ctx, kernel: SmoothKernel | None = None) -> float:
    """R(N) via the Fourier side; the integral is real by theta -> -theta
    conjugate symmetry (the grid is symmetric, so that cancellation is exact)."""
    return integral_report(config, ctx, kernel).value


def region_breakdown(config, ctx, kernel: SmoothKernel | None = None):
    """(trivial, minor, major): |F_1| Khat_tau mass on trivial/minor arcs and
    the signed major-arc integral; the full report carries the signed pieces
    whose sum reconciles with r_integral exactly (shared grid)."""
    rep = integral_report(config, ctx, kernel)
    return rep.trivial_abs, rep.minor_abs, rep.major_signed


# ---------------------------------------------------------------------------
# Major-arc main term and Xi
# ---------------------------------------------------------------------------


def _v_tail_bound(theta, ranges, mults, gamma, c) -> float:
    """Product over factors of min(V(0), decay): valid pointwise upper bound."""
    out = 1.0
    for x, mult in zip(ranges, mults):
        v0 = x**gamma - (x / 2.0) ** gamma
        dec = 3.0 * (gamma / c) * (x / 2.0) ** (gamma - c) / (_TWO_PI * theta)
        out *= min(v0, dec) ** mult
    return out


def main_term_and_xi(
    config: CircleConfig, ctx: PSContext, kernel: SmoothKernel | None = None
) -> tuple[float, float, float]:
    """main = int F*(theta) e(-N theta) Khat_tau dtheta with V in place of S;
    xi = tau (X_1^2 ... X_t^2 X^(2u+1))^gamma X^(-c); ratio = main / xi."""
    kern = kernel if kernel is not None else default_kernel()
    g, c, N, tau = config.gamma, config.c, config.N, config.tau
    ranges, mults = config.ranges, config.multiplicities
    xi = config.xi
    # truncation: all V factors in decay mode beyond the last crossover
    khat0 = float(kern.hat(0.0))
    theta_m = max(config.major_bound, 1e-12)
    s = config.s
    while True:
        theta_m *= 2.0
        tail = (
            2.0 * tau * khat0 * _v_tail_bound(theta_m, ranges, mults, g, c)
            * theta_m / (s - 1)
        )
        if tail <= 1e-10 * xi:
            break
    hi = sum(m * x**c for x, m in zip(ranges, mults))
    lo = sum(m * (x / 2.0) ** c for x, m in zip(ranges, mults))
    d_max = max(hi - N, N - lo, tau)
    dtheta = 1.0 / (2.5 * (d_max + tau))
    npts = int(math.ceil(theta_m / dtheta))
    if npts % 2:
        npts += 1
    step = 1 << 20
    parts, parts_even = [], []
    for k0 in range(0, npts + 1, step):
        k = np.arange(k0, min(k0 + step, npts + 1))
        thetas = k * dtheta
        f = np.ones(len(k), dtype=np.complex128)
        for x, mult in zip(ranges, mults):
            f *= eval_V_grid(thetas, x, ctx) ** mult
        f *= np.exp(-2j * np.pi * np.mod(N * thetas, 1.0))
        f *= tau * np.asarray(kern.hat(tau * thetas))
        wq = np.where(k == 0, 0.5, 1.0)
        parts.append(float(np.sum(wq * f.real)))
        even = k % 2 == 0
        parts_even.append(float(np.sum((wq * f.real)[even])))
    main = 2.0 * dtheta * math.fsum(parts)
    coarse = 4.0 * dtheta * math.fsum(parts_even)
    if abs(main - coarse) > 1e-3 * max(abs(main), 1e-300):
        raise NonConvergence("main-term quadrature did not converge")
    return main, xi, main / xi


# ---------------------------------------------------------------------------
# Diagonal-solution count (section on diminishing-range diagonal dominance)
# ---------------------------------------------------------------------------


def diagonal_count(
    config: CircleConfig,
    ctx: PSContext,
    raw_budget: float = _RAW_BUDGET_DEFAULT,
    tau: float | None = None,
) -> tuple[int, int]:
    """Exact (diagonal, offdiagonal) counts of |x_1^c - x_2^c + ... | < 4 tau
    with x_{2j-1}, x_{2j} in the gamma-window at X_j (j = 1..t)."""
    windows = _require_windows(config)
    tau = config.tau if tau is None else tau
    c = config.c
    diff_arrays, sizes = [], []
    diagonal = 1
    for w in windows[1:]:
        vals = w.members.astype(np.float64) ** c
        diff_arrays.append(np.subtract.outer(vals, vals).ravel())
        sizes.append(len(vals) ** 2)
        diagonal *= len(vals)
    raw = reduce(lambda x, y: x * y, sizes, 1)
    if raw > raw_budget:
        raise BudgetExceeded(f"raw pair count {raw} exceeds budget {raw_budget:g}")
    ia, ib = ([0], []) if len(diff_arrays) == 1 else _half_split(sizes)
    a = np.sort(reduce(lambda x, y: np.add.outer(x, y).ravel(),
                       [diff_arrays[i] for i in ia]))
    if ib:
        b = reduce(lambda x, y: np.add.outer(x, y).ravel(),
                   [diff_arrays[i] for i in ib])
    else:
        b = np.zeros(1)
    lo = np.searchsorted(a, -4.0 * tau - b, side="right")
    hi = np.searchsorted(a, 4.0 * tau - b, side="left")
    total = int(np.sum(hi - lo))
    return diagonal, total - diagonal

"""Generating functions, oscillatory integrals, and bound audits.

Six finite exponential sums are exposed (S, T over the Piatetski-Shapiro
window; S0, T0, S1, T1 over the full dyadic range with derivative / sawtooth
weights), together with the oscillatory integral V, generic bilinear sums,
mean-square cross-checks and statement-level audits of the stated bounds.

Phases are accumulated in 80-bit extended precision before reduction mod 1,
so sums of ~1e4 terms stay well inside the 1e-10 oracle tolerance.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from .arith import mangoldt_between, mobius_between, primes_between, sinc, tree_sum
from .context import BudgetExceeded, PSContext, ValidationError
from .psprimes import PSWindow, build_window, psi_gamma

__all__ = [
    "SumKind",
    "PhaseSpec",
    "AuditRow",
    "AuditReport",
    "MeanSquareResult",
    "eval_sum",
    "eval_phase_sum",
    "eval_V",
    "eval_V_grid",
    "eval_bilinear",
    "decomposition_residual",
    "decomposition_envelope",
    "mean_square",
    "bound_audit",
    "cached_window",
]


class SumKind(str, Enum):
    S = "S"    # PS primes, weight log p
    T = "T"    # PS members, weight 1
    S0 = "S0"  # all primes ~ X, weight gamma p^(gamma-1) log p
    T0 = "T0"  # all n ~ X, weight gamma n^(gamma-1)
    S1 = "S1"  # all primes ~ X, weight Psi_gamma(p) log p
    T1 = "T1"  # all n ~ X, weight Psi_gamma(n)


@dataclass(frozen=True)
class PhaseSpec:
    """f(n) = theta * n^c + h * (n + u)^gamma with u in {0, 1}."""

    theta: float
    exponent_c: float
    exponent_gamma: float
    h: float = 0.0
    shift_u: int = 0

    def __post_init__(self):
        if self.shift_u not in (0, 1):
            raise ValidationError("shift_u must be 0 or 1")


@lru_cache(maxsize=64)
def cached_window(X: float, ctx: PSContext) -> PSWindow:
    return build_window(X, ctx)


@lru_cache(maxsize=64)
def _range_integers(X: float) -> np.ndarray:
    return np.arange(math.floor(X / 2) + 1, math.floor(X) + 1, dtype=np.int64)


@lru_cache(maxsize=64)
def _range_primes(X: float) -> np.ndarray:
    return primes_between(X / 2, X)


def _psi_weights(values: np.ndarray, ctx: PSContext) -> np.ndarray:
    return np.array([psi_gamma(int(n), ctx) for n in values], dtype=np.float64)


def _terms(kind: SumKind, window: PSWindow, ctx: PSContext) -> tuple[np.ndarray, np.ndarray]:
    """(index values, weights) for one generating function."""
    kind = SumKind(kind)
    if kind is SumKind.S:
        return window.primes, window.log_weights
    if kind is SumKind.T:
        return window.members, np.ones(len(window.members))
    g = ctx.gamma
    if kind is SumKind.S0:
        p = _range_primes(window.X)
        return p, g * p.astype(np.float64) ** (g - 1.0) * np.log(p.astype(np.float64))
    if kind is SumKind.T0:
        n = _range_integers(window.X)
        return n, g * n.astype(np.float64) ** (g - 1.0)
    if kind is SumKind.S1:
        p = _range_primes(window.X)
        return p, _psi_weights(p, ctx) * np.log(p.astype(np.float64))
    if kind is SumKind.T1:
        n = _range_integers(window.X)
        return n, _psi_weights(n, ctx)
    raise ValidationError(f"unknown sum kind {kind!r}")


# Above this phase magnitude the 80-bit fractional part loses ~1e-13 accuracy,
# so reduction mod 1 escalates to arbitrary precision.
_PHASE_FAST_MAX = 1e6


def _e_of_phase(values: np.ndarray, phase: PhaseSpec) -> np.ndarray:
    """e(f(n)) with the phase accumulated in extended precision."""
    n_max = float(values[-1]) if len(values) else 1.0
    f_max = abs(phase.theta) * n_max ** phase.exponent_c + abs(phase.h) * (
        n_max + phase.shift_u
    ) ** max(phase.exponent_gamma, 0.0)
    if f_max > _PHASE_FAST_MAX:
        return _e_of_phase_mp(values, phase, f_max)
    n = values.astype(np.longdouble)
    f = np.longdouble(phase.theta) * n ** np.longdouble(phase.exponent_c)
    if phase.h != 0.0:
        f = f + np.longdouble(phase.h) * (n + phase.shift_u) ** np.longdouble(
            phase.exponent_gamma
        )
    frac = np.mod(f, np.longdouble(1.0)).astype(np.float64)
    return np.exp(2j * np.pi * frac)


def _e_of_phase_mp(values: np.ndarray, phase: PhaseSpec, f_max: float) -> np.ndarray:
    from mpmath import mp

    prec = max(96, int(math.log2(max(f_max, 2.0))) + 70)
    frac = np.empty(len(values))
    with mp.workprec(prec):
        th = mp.mpf(phase.theta)
        hh = mp.mpf(phase.h)
        ce = mp.mpf(phase.exponent_c)
        ge = mp.mpf(phase.exponent_gamma)
        for i, n in enumerate(values):
            f = th * mp.mpf(int(n)) ** ce
            if phase.h != 0.0:
                f += hh * mp.mpf(int(n) + phase.shift_u) ** ge
            frac[i] = float(f - mp.floor(f))
    return np.exp(2j * np.pi * frac)


def eval_sum(kind: SumKind, phase: PhaseSpec, window: PSWindow, ctx: PSContext) -> complex:
    """One of the six generating functions at the given phase.

    Summation uses a fixed binary-tree reduction, so repeated runs are
    bit-identical regardless of threading.
    """
    if abs(window.gamma - ctx.gamma) > 0:
        raise ValidationError(
            f"window gamma {window.gamma} does not match context gamma {ctx.gamma}"
        )
    if phase.exponent_gamma != ctx.gamma and phase.h != 0.0:
        raise ValidationError("phase gamma does not match context gamma")
    values, weights = _terms(kind, window, ctx)
    if len(values) == 0:
        return 0.0 + 0.0j
    return complex(tree_sum(weights * _e_of_phase(values, phase)))


def eval_phase_sum(phase: PhaseSpec, Y: float, X: float, ctx: PSContext) -> complex:
    """Unit-weight sum of e(theta n^c + h(n+u)^gamma) over Y < n <= X."""
    n = np.arange(math.floor(Y) + 1, math.floor(X) + 1, dtype=np.int64)
    if len(n) == 0:
        return 0.0 + 0.0j
    return complex(tree_sum(_e_of_phase(n, phase)))


# ---------------------------------------------------------------------------
# V(theta; X) = gamma * int_{X/2}^{X} u^(gamma-1) e(theta u^c) du
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = leggauss(16)

# IBP series depth and the phase-at-left-endpoint threshold that keeps its
# term ratio below ~1/3.
_IBP_TERMS = 20
_IBP_MIN_PHASE = 60.0


def eval_V(theta: float, X: float, ctx: PSContext, max_panels: int = 2_000_000) -> complex:
    """Panel quadrature: each panel advances the phase by at most 1/2 cycle."""
    if X < 4:
        raise ValidationError("eval_V requires X >= 4")
    g, c = ctx.gamma, ctx.c
    if theta == 0.0:
        return complex(X**g - (X / 2) ** g)
    cycles = abs(theta) * (X**c - (X / 2) ** c)
    panels = max(4, math.ceil(2.0 * cycles) + 1)
    if panels > max_panels:
        raise BudgetExceeded(
            f"panel-count overflow: {panels} panels needed for |theta| X^c = "
            f"{abs(theta) * X ** c:.3g}; use the decay bound instead"
        )
    edges = np.linspace(X / 2, X, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    u = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    w = half[:, None] * _GL_WEIGHTS[None, :]
    integrand = g * u ** (g - 1.0) * np.exp(2j * np.pi * theta * u**c)
    return complex(tree_sum((w * integrand).ravel()))


def _ibp_coefficients(q: float, k: int) -> np.ndarray:
    """(q-1)(q-2)...(q-j) for j = 0..k-1 (empty product = 1)."""
    coef = np.ones(k)
    for j in range(1, k):
        coef[j] = coef[j - 1] * (q - j)
    return coef


def eval_V_grid(thetas: np.ndarray, X: float, ctx: PSContext) -> np.ndarray:
    """Vectorized V over a theta grid.

    Substituting v = u^c turns V into (gamma/c) * int_A^B v^(q-1) e(theta v) dv
    with q = gamma/c.  Low phases use panelled Gauss-Legendre; once the phase
    at the left endpoint exceeds ~60 the integration-by-parts boundary series
    converges geometrically and is evaluated instead.  Cross-checked against
    eval_V in the test suite.
    """
    thetas = np.asarray(thetas, dtype=np.float64)
    g, c = ctx.gamma, ctx.c
    q = g / c
    A, B = (X / 2) ** c, X**c
    out = np.empty(len(thetas), dtype=np.complex128)

    at = np.abs(thetas)
    omega_A = 2.0 * np.pi * at * A
    series = omega_A >= _IBP_MIN_PHASE
    # ----- boundary series branch -----
    if np.any(series):
        th = thetas[series]
        omega = 2.0 * np.pi * th
        coef = _ibp_coefficients(q, _IBP_TERMS)
        eA = np.exp(1j * omega * A)
        eB = np.exp(1j * omega * B)
        inv = 1.0 / (1j * omega)
        acc = np.zeros(len(th), dtype=np.complex128)
        powA = A ** (q - 1.0)
        powB = B ** (q - 1.0)
        inv_pow = inv.copy()
        sign = 1.0
        for j in range(_IBP_TERMS):
            acc += sign * inv_pow * (coef[j] * powB * eB - coef[j] * powA * eA)
            powA /= A
            powB /= B
            inv_pow *= inv
            sign = -sign
        out[series] = (g / c) * acc
    # ----- panel branch -----
    low = ~series
    if np.any(low):
        th = thetas[low]
        max_cycles = float(np.max(np.abs(th))) * (B - A)
        panels = max(4, math.ceil(2.0 * max_cycles) + 1)
        edges = np.linspace(A, B, panels + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * (edges[1:] - edges[:-1])
        v = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
        w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel() * v ** (q - 1.0)
        # chunk the outer product to bound memory
        vals = np.empty(len(th), dtype=np.complex128)
        step = max(1, int(4e6 // max(len(v), 1)))
        for i in range(0, len(th), step):
            block = th[i : i + step]
            vals[i : i + step] = np.exp(2j * np.pi * block[:, None] * v[None, :]) @ w
        out[low] = (g / c) * vals
    return out


# ---------------------------------------------------------------------------
# Bilinear sums
# ---------------------------------------------------------------------------

_A_COEFFS = ("1", "mu", "lambda")
_B_COEFFS = ("1", "log")


def eval_bilinear(
    phase: PhaseSpec,
    M: float,
    X: float,
    coeffs: tuple[str, str],
    ctx: PSContext,
) -> complex:
    """sum_{m ~ M} sum_{X/2 < mk <= X} a_m b_k e(theta (mk)^c + h(mk+u)^gamma)."""
    if not 2 <= M <= X:
        raise ValidationError("require 2 <= M <= X")
    a_kind, b_kind = coeffs
    if a_kind not in _A_COEFFS or b_kind not in _B_COEFFS:
        raise ValidationError(f"coefficients must be in {_A_COEFFS} x {_B_COEFFS}")
    Y = X / 2
    if a_kind == "1":
        m_vals = np.arange(math.floor(M / 2) + 1, math.floor(M) + 1, dtype=np.int64)
        a_vals = np.ones(len(m_vals))
    elif a_kind == "mu":
        m_vals, a_vals = mobius_between(M / 2, M)
    else:
        m_vals, a_vals = mangoldt_between(M / 2, M)
    total = 0.0 + 0.0j
    partials = []
    for m, am in zip(m_vals, a_vals):
        if am == 0.0:
            continue
        m = int(m)
        k = np.arange(math.floor(Y / m) + 1, math.floor(X / m) + 1, dtype=np.int64)
        if len(k) == 0:
            continue
        bw = np.log(k.astype(np.float64)) if b_kind == "log" else np.ones(len(k))
        partials.append(am * tree_sum(bw * _e_of_phase(m * k, phase)))
    if partials:
        total = complex(tree_sum(np.array(partials, dtype=np.complex128)))
    return total


# ---------------------------------------------------------------------------
# Decomposition identities (S = S0 + S1 + O(1), T = T0 + T1 + O(1))
# ---------------------------------------------------------------------------


def decomposition_residual(theta: float, X: float, ctx: PSContext) -> tuple[float, float]:
    """(|S - S0 - S1|, |T - T0 - T1|) at the given theta."""
    if X < 16:
        raise ValidationError("decomposition check requires X >= 16")
    window = cached_window(float(X), ctx)
    phase = PhaseSpec(theta=theta, exponent_c=ctx.c, exponent_gamma=ctx.gamma)
    vals = {k: eval_sum(k, phase, window, ctx) for k in SumKind}
    rS = abs(vals[SumKind.S] - vals[SumKind.S0] - vals[SumKind.S1])
    rT = abs(vals[SumKind.T] - vals[SumKind.T0] - vals[SumKind.T1])
    return rS, rT


def decomposition_envelope(X: float, ctx: PSContext) -> tuple[float, float]:
    """Analytic envelopes sum w(n) * |(n+1)^g - n^g - g n^(g-1)| for both identities."""
    g = ctx.gamma
    n = _range_integers(float(X)).astype(np.float64)
    gap = np.abs((n + 1.0) ** g - n**g - g * n ** (g - 1.0))
    p = _range_primes(float(X)).astype(np.float64)
    gap_p = np.abs((p + 1.0) ** g - p**g - g * p ** (g - 1.0))
    return float(np.sum(np.log(p) * gap_p)) if len(p) else 0.0, float(np.sum(gap))


# ---------------------------------------------------------------------------
# Mean-square cross-check (the opening identity of the L^2 lemma)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeanSquareResult:
    numeric: float
    closed_form: float
    envelope: float


def mean_square(kind: SumKind, A: float, X: float, ctx: PSContext) -> MeanSquareResult:
    """int_{-A}^{A} |sum|^2 dtheta: quadrature vs the sinc closed form."""
    if not 0 <= A <= 1:
        raise ValidationError("require 0 <= A <= 1")
    kind = SumKind(kind)
    g, c = ctx.gamma, ctx.c
    L = math.log(X)
    env_map = {
        SumKind.S: 2 * A * X**g * L**2 + X ** (2 * g - c) * L**3,
        SumKind.T: 2 * A * X**g + X ** (2 * g - c) * L,
        SumKind.S0: 2 * A * X ** (2 * g - 1) * L + X ** (2 * g - c) * L**2,
        SumKind.T0: 2 * A * X ** (2 * g - 1) + X ** (2 * g - c) * L,
        SumKind.S1: 2 * A * X**g * L**2 + X ** (2 * g - c) * L**3,
        SumKind.T1: 2 * A * X**g + X ** (2 * g - c) * L,
    }
    envelope = env_map[kind]
    if A == 0.0:
        return MeanSquareResult(0.0, 0.0, envelope)
    window = cached_window(float(X), ctx)
    values, weights = _terms(kind, window, ctx)
    if len(values) == 0:
        return MeanSquareResult(0.0, 0.0, envelope)
    a = values.astype(np.float64) ** c
    # closed form: expand the square and integrate each e(theta(a_i - a_j))
    diff = a[:, None] - a[None, :]
    closed = float(weights @ (2.0 * A * sinc(2.0 * np.pi * A * diff)) @ weights)
    # numeric: panelled Gauss-Legendre, half a cycle of the fastest pair per panel
    dmax = float(a[-1] - a[0]) if len(a) > 1 else 1.0
    panels = max(8, math.ceil(4.0 * A * dmax) + 1)
    edges = np.linspace(-A, A, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    wq = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    svals = np.exp(2j * np.pi * nodes[:, None] * a[None, :]) @ weights.astype(np.complex128)
    numeric = float(wq @ (svals.real**2 + svals.imag**2))
    return MeanSquareResult(numeric, closed, envelope)


# ---------------------------------------------------------------------------
# Statement-level bound audits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AuditRow:
    X: float
    theta: float
    h: float
    measured: float | None
    envelope: float | None
    ratio: float | None
    flag: str = ""


@dataclass
class AuditReport:
    lemma_id: str
    envelope_exponent: float
    rows: list[AuditRow] = field(default_factory=list)

    def max_ratio_by_X(self) -> dict[float, float]:
        out: dict[float, float] = {}
        for r in self.rows:
            if r.ratio is not None:
                out[r.X] = max(out.get(r.X, 0.0), r.ratio)
        return out

    def to_csv(self, fh) -> None:
        w = csv.writer(fh)
        w.writerow(["lemma", "X", "theta", "h", "measured", "envelope", "ratio", "flag"])
        for r in self.rows:
            w.writerow(
                [
                    self.lemma_id,
                    repr(r.X),
                    repr(r.theta),
                    repr(r.h),
                    "" if r.measured is None else repr(r.measured),
                    "" if r.envelope is None else repr(r.envelope),
                    "" if r.ratio is None else repr(r.ratio),
                    r.flag,
                ]
            )

    def summary(self) -> dict:
        return {
            "lemma": self.lemma_id,
            "envelope_exponent": self.envelope_exponent,
            "max_ratio_by_X": {repr(k): v for k, v in sorted(self.max_ratio_by_X().items())},
            "n_rows": len(self.rows),
            "n_flagged": sum(1 for r in self.rows if r.flag),
        }


def _nu(c: float) -> float:
    return 1.0 / (c * c + 3.0 * c + 2.0)


def _rho(c: float) -> float:
    return 1.0 / (8.0 * c * c + 12.0 * c + 12.0)


def _theta_window(X: float, th: float, lo_exp: float, hi_exp: float) -> str:
    if not X**lo_exp <= abs(th) <= X**hi_exp:
        return f"theta outside [X^{lo_exp:.4g}, X^{hi_exp:.4g}]"
    return ""


def _audit_lemmas(ctx: PSContext, delta: float, slack: float, rho_audit: float) -> dict:
    g, c = ctx.gamma, ctx.c
    nu, rho = _nu(c), _rho(c)

    def lem5_hyp(X, th, h):
        if not 0.5 < g < 1.0 < c:
            return "requires 1/2 < gamma < 1 < c"
        if abs(h) > X ** (4.0 / 3.0 - g):
            return "h outside |h| <= X^(4/3-gamma)"
        return _theta_window(X, th, g - c, delta)

    def lemT_hyp(X, th, h):
        if h != 0.0:
            return "statement has h = 0"
        if not 1.0 - nu < g < 1.0 < c:
            return "requires 1 - nu < gamma < 1 < c"
        return _theta_window(X, th, g - c, delta)

    def lemS1a_hyp(X, th, h):
        if h != 0.0:
            return "statement has h = 0"
        if not c > 5.0:
            return "requires c > 5"
        if not 1.0 - rho < g < 1.0:
            return "requires 1 - rho < gamma < 1"
        return _theta_window(X, th, g - c - delta, delta)

    def lemS_hyp(X, th, h):
        if h != 0.0:
            return "statement has h = 0"
        if not 15.0 * (c - 1.0) + 28.0 * (1.0 - g) < 1.0:
            return "requires 15(c-1) + 28(1-gamma) < 1"
        return _theta_window(X, th, g - c - delta, delta)

    def lemSa_hyp(X, th, h):
        if h != 0.0:
            return "statement has h = 0"
        if not 8.0 * (c - 1.0) + 21.0 * (1.0 - g) < 1.0:
            return "requires 8(c-1) + 21(1-gamma) < 1"
        return _theta_window(X, th, g - c - delta, delta)

    def lemS0_hyp(X, th, h):
        if h != 0.0:
            return "statement has h = 0"
        if not (6.0 * rho_audit < g < 1.0 < c < 1.5 - 6.0 * rho_audit):
            return "requires 6 rho < gamma < 1 < c < 3/2 - 6 rho"
        if not 0.0 < rho_audit < 1.0 / 12.0:
            return "requires rho in (0, 1/12)"
        return _theta_window(X, th, g - c - delta, delta)

    def phase_measure(X, th, h, shift_u=0):
        phase = PhaseSpec(theta=th, h=h, shift_u=shift_u, exponent_c=c, exponent_gamma=g)
        return abs(eval_phase_sum(phase, X / 2, X, ctx))

    def kind_measure(kind):
        def inner(X, th, h):
            window = cached_window(float(X), ctx)
            phase = PhaseSpec(theta=th, exponent_c=c, exponent_gamma=g)
            return abs(eval_sum(kind, phase, window, ctx))

        return inner

    return {
        "lem5": (lem5_hyp, phase_measure, 1.0 - nu + slack),
        "lemT": (lemT_hyp, kind_measure(SumKind.T), 1.0 - nu + slack),
        "lemS1a": (lemS1a_hyp, kind_measure(SumKind.S), 1.0 - rho + slack),
        "lemS": (lemS_hyp, kind_measure(SumKind.S), 2.0 * g - c - 2.0 * delta),
        "lemSa": (lemSa_hyp, kind_measure(SumKind.S), (3.0 * g - c) / 2.0 - delta),
        "lemS0": (lemS0_hyp, kind_measure(SumKind.S0), g - rho_audit + delta),
    }


def bound_audit(
    lemma_id: str,
    X_grid,
    theta_grid,
    h_grid,
    ctx: PSContext,
    delta: float = 0.05,
    slack: float = 0.05,
    rho_audit: float = 0.05,
) -> AuditReport:
    """Measure |sum| / claimed envelope on a grid; out-of-hypothesis points are
    flagged with a reason, never silently audited."""
    lemmas = _audit_lemmas(ctx, delta, slack, rho_audit)
    if lemma_id not in lemmas:
        raise ValidationError(f"unknown lemma id {lemma_id!r}; known: {sorted(lemmas)}")
    hyp, measure, exponent = lemmas[lemma_id]
    report = AuditReport(lemma_id=lemma_id, envelope_exponent=exponent)
    for X in X_grid:
        X = float(X)
        for th_spec in theta_grid:
            th = float(th_spec(X)) if callable(th_spec) else float(th_spec)
            for h_spec in h_grid:
                h = float(h_spec(X)) if callable(h_spec) else float(h_spec)
                reason = hyp(X, th, h)
                if reason:
                    report.rows.append(
                        AuditRow(X=X, theta=th, h=h, measured=None, envelope=None,
                                 ratio=None, flag=reason)
                    )
                    continue
                measured = measure(X, th, h)
                envelope = X**exponent
                report.rows.append(
                    AuditRow(X=X, theta=th, h=h, measured=measured,
                             envelope=envelope, ratio=measured / envelope)
                )
    return report

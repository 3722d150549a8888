"""Explicit constants and admissibility conditions.

All logarithms are natural; t = ceil(2 c ln c) changes under log10, so this
convention is load-bearing.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import asdict, dataclass

from .context import ValidationError

__all__ = ["ParamSheet", "derive_params", "check_admissible", "sweep_csv", "THEOREM_IDS"]


@dataclass(frozen=True)
class ParamSheet:
    c: float
    gamma: float
    rho: float                 # (8c^2 + 12c + 12)^-1
    nu: float                  # (c^2 + 3c + 2)^-1
    t: int                     # ceil(2 c ln c)
    u: int                     # ceil(2c/3 + 1/2) + 2
    s_constructed: int         # 2t + 2u + 1
    s_theorem_min: float       # 4 c ln c + 4c/3 + 10 (reported, not reconciled)
    delta_closed_form: float   # rational form of the Delta chain
    delta_from_constants: float  # (7c/3 + 7) rho + 1/c - (4c/3 + 5) nu
    conditions: dict

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    def to_text(self) -> str:
        buf = io.StringIO()
        d = asdict(self)
        conds = d.pop("conditions")
        width = max(len(k) for k in d)
        for k in sorted(d):
            buf.write(f"{k:<{width}} = {d[k]!r}\n")
        for name, (value, ok) in sorted(conds.items()):
            buf.write(f"condition {name}: value={value!r} satisfied={ok}\n")
        return buf.getvalue()


def _delta_rational(c: float) -> float:
    num = (c - 3.0) * (c**3 + 21.0 * c**2 + 22.0 * c + 24.0)
    den = 12.0 * c * (c + 1.0) * (c + 2.0) * (2.0 * c**2 + 3.0 * c + 3.0)
    return -num / den


def derive_params(c: float, gamma: float) -> ParamSheet:
    if c <= 1.0:
        raise ValidationError("c must exceed 1")
    if not 0.0 < gamma < 1.0:
        raise ValidationError("gamma must lie in (0, 1)")
    rho = 1.0 / (8.0 * c * c + 12.0 * c + 12.0)
    nu = 1.0 / (c * c + 3.0 * c + 2.0)
    t = math.ceil(2.0 * c * math.log(c))
    u = math.ceil(2.0 * c / 3.0 + 0.5) + 2
    delta_consts = (7.0 * c / 3.0 + 7.0) * rho + 1.0 / c - (4.0 * c / 3.0 + 5.0) * nu
    conditions = {}
    for tid in THEOREM_IDS:
        ok, margins = check_admissible(c, gamma, tid)
        conditions[tid] = (min(margins.values()) if margins else 0.0, ok)
    return ParamSheet(
        c=c,
        gamma=gamma,
        rho=rho,
        nu=nu,
        t=t,
        u=u,
        s_constructed=2 * t + 2 * u + 1,
        s_theorem_min=4.0 * c * math.log(c) + 4.0 * c / 3.0 + 10.0,
        delta_closed_form=_delta_rational(c),
        delta_from_constants=delta_consts,
        conditions=conditions,
    )


THEOREM_IDS = ("thm1", "thm2", "thm3", "thm4", "eq25", "eq30")


def check_admissible(c: float, gamma: float, theorem_id: str) -> tuple[bool, dict]:
    """Signed margins: a condition 'expr < bound' is stored as bound - expr,
    so positive means satisfied."""
    rho = 1.0 / (8.0 * c * c + 12.0 * c + 12.0)
    if theorem_id == "thm1":
        margins = {
            "c_gt_5": c - 5.0,
            "gamma_gt_1_minus_rho": gamma - (1.0 - rho),
            "gamma_lt_1": 1.0 - gamma,
        }
    elif theorem_id == "thm2":
        margins = {"15(c-1)+28(1-gamma)<1": 1.0 - (15.0 * (c - 1.0) + 28.0 * (1.0 - gamma))}
    elif theorem_id in ("thm3", "thm4"):
        margins = {"8(c-1)+21(1-gamma)<1": 1.0 - (8.0 * (c - 1.0) + 21.0 * (1.0 - gamma))}
    elif theorem_id == "eq25":
        margins = {
            "c+14rho<2": 2.0 - (c + 14.0 * rho),
            "2gamma+14rho<3": 3.0 - (2.0 * gamma + 14.0 * rho),
            "2c+12rho<3": 3.0 - (2.0 * c + 12.0 * rho),
        }
    elif theorem_id == "eq30":
        margins = {"14(c-1)+12(1-gamma)<1": 1.0 - (14.0 * (c - 1.0) + 12.0 * (1.0 - gamma))}
    else:
        raise ValidationError(f"unknown theorem id {theorem_id!r}; known: {THEOREM_IDS}")
    return all(v > 0.0 for v in margins.values()), margins


def sweep_csv(c0: float, c1: float, step: float, gamma: float) -> str:
    if step <= 0 or c1 < c0:
        raise ValidationError("need step > 0 and c1 >= c0")
    buf = io.StringIO()
    buf.write("c,gamma,rho,nu,t,u,s_constructed,s_theorem_min,delta_closed_form\n")
    n = int(math.floor((c1 - c0) / step + 1e-12)) + 1
    for i in range(n):
        c = c0 + i * step
        p = derive_params(c, gamma)
        buf.write(
            f"{p.c!r},{p.gamma!r},{p.rho!r},{p.nu!r},{p.t},{p.u},"
            f"{p.s_constructed},{p.s_theorem_min!r},{p.delta_closed_form!r}\n"
        )
    return buf.getvalue()

"""Command-line entry point.

Exit codes: 0 success; 1 validation/usage error (one-line reason on stderr);
2 budget or precision exhaustion.  JSON output is key-sorted and, with
--no-meta, byte-identical across repeated runs of the same configuration.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

from .context import BudgetExceeded, PrecisionExhausted, PSContext, ValidationError

_FORMATS = ("json", "csv", "text")


def _read_config_file(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"config line without '=': {line!r}")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--gamma", type=float, default=None)
    common.add_argument("--c", type=float, default=None)
    common.add_argument("--precision-bits", type=int, default=None)
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", type=str, default=None)
    common.add_argument("--format", choices=_FORMATS, default=None)
    common.add_argument("--config", type=str, default=None, help="key=value file")
    common.add_argument("--no-meta", action="store_true")

    p = argparse.ArgumentParser(prog="pslab")
    sub = p.add_subparsers(dest="command")

    q = sub.add_parser("primes", parents=[common])
    q.add_argument("--N", type=float, default=None)
    q.add_argument("--window", type=float, default=None, help="dump the window at X")

    q = sub.add_parser("sums", parents=[common])
    q.add_argument("--kind", default="S")
    q.add_argument("--X", type=float, required=True)
    q.add_argument("--theta", type=float, default=0.0)
    q.add_argument("--h", type=float, default=0.0)
    q.add_argument("--shift-u", type=int, default=0)

    q = sub.add_parser("kernel", parents=[common])
    q.add_argument("--sharpness", type=float, default=1.0)
    q.add_argument("--grid-points", type=int, default=1 << 13)

    q = sub.add_parser("circle", parents=[common])
    q.add_argument("--N", type=float, default=None)
    q.add_argument("--t", type=int, default=None)
    q.add_argument("--u", type=int, default=None)
    q.add_argument("--delta", type=float, default=0.05)
    q.add_argument("--tau-scale", type=float, default=1.0)
    q.add_argument("--preset", choices=["desk"], default=None)
    q.add_argument("--integral", action="store_true",
                   help="also compute r_direct and r_integral (heavier)")
    q.add_argument("--raw-budget", type=float, default=5e8)

    q = sub.add_parser("solve", parents=[common])
    q.add_argument("--N", type=float, default=None)
    q.add_argument("--Z", type=float, default=None)
    q.add_argument("--s", type=int, default=2)
    q.add_argument("--eps", type=float, default=None)
    q.add_argument("--mode", default="count")
    q.add_argument("--samples", type=int, default=1000)

    q = sub.add_parser("params", parents=[common])
    q.add_argument("--sweep", type=str, default=None, help="c0:c1:step")

    q = sub.add_parser("audit", parents=[common])
    q.add_argument("--lemma", required=True)
    q.add_argument("--X-grid", type=str, default="1024,4096,16384")
    q.add_argument("--theta-rel", type=str, default="2",
                   help="multiples of X^(gamma-c), comma separated")
    q.add_argument("--theta-grid", type=str, default="")
    q.add_argument("--h-grid", type=str, default="0")
    q.add_argument("--slack", type=float, default=0.05)
    q.add_argument("--delta", type=float, default=0.05)
    return p


def _resolve(args: argparse.Namespace, file_cfg: dict, key: str, cast, default):
    """flag > config file > default."""
    v = getattr(args, key, None)
    if v is not None and v is not False:
        return v
    if key in file_cfg:
        return cast(file_cfg[key])
    return default


def _context(args, file_cfg) -> PSContext:
    gamma = _resolve(args, file_cfg, "gamma", float, 0.9)
    c = _resolve(args, file_cfg, "c", float, 1.5)
    env_bits = os.environ.get("PSLAB_PRECISION_BITS")
    bits = _resolve(
        args, file_cfg, "precision_bits", int, int(env_bits) if env_bits else 96
    )
    return PSContext(gamma=gamma, c=c, precision_bits=bits)


def _emit(payload: dict, args, file_cfg, ctx: PSContext | None) -> str:
    fmt = _resolve(args, file_cfg, "format", str, "json")
    if not args.no_meta:
        payload = dict(payload)
        payload["meta"] = {
            "command": args.command,
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        }
    if ctx is not None:
        payload = dict(payload)
        payload["config"] = {
            "gamma": ctx.gamma,
            "c": ctx.c,
            "precision_bits": ctx.precision_bits,
            "boundary_guard": ctx.boundary_guard,
        }
    if fmt == "json":
        text = json.dumps(payload, sort_keys=True, default=repr) + "\n"
    elif fmt == "text":
        text = "".join(f"{k} = {payload[k]!r}\n" for k in sorted(payload))
    else:
        text = payload.get("csv", json.dumps(payload, sort_keys=True, default=repr) + "\n")
    out = _resolve(args, file_cfg, "out", str, None)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return text


def _grid(text: str, cast=float) -> list:
    return [cast(tok) for tok in text.split(",") if tok.strip()]


def _cmd_primes(args, file_cfg, ctx):
    from . import psprimes

    if args.window is not None:
        window = psprimes.build_window(args.window, ctx)
        return {"csv": psprimes.dump_window_csv(window, ctx),
                "members": len(window.members), "primes": len(window.primes)}
    N = args.N if args.N is not None else 10000.0
    count, predicted, ratio = psprimes.pi_gamma(N, ctx)
    return {"N": N, "count": count, "predicted": predicted, "ratio": ratio}


def _cmd_sums(args, file_cfg, ctx):
    from .expsums import PhaseSpec, SumKind, cached_window, eval_sum

    window = cached_window(float(args.X), ctx)
    phase = PhaseSpec(theta=args.theta, h=args.h, shift_u=args.shift_u,
                      exponent_c=ctx.c, exponent_gamma=ctx.gamma)
    val = eval_sum(SumKind(args.kind), phase, window, ctx)
    return {"kind": args.kind, "X": args.X, "theta": args.theta, "h": args.h,
            "re": val.real, "im": val.imag, "abs": abs(val)}


def _cmd_kernel(args, file_cfg, ctx):
    from .kernel import dump_kernel_csv, hat_decay_constant, make_kernel, parseval_residual

    k = make_kernel(args.sharpness, args.grid_points)
    out = {
        "K0": float(k.K(0.0)),
        "Khat0": float(k.hat(0.0)),
        "parseval_residual": parseval_residual(k),
        "hat_decay_C10": hat_decay_constant(k, 10),
        "x_points": len(k.x_grid),
        "t_points": len(k.t_grid),
    }
    fmt = _resolve(args, file_cfg, "format", str, "json")
    if fmt == "csv":
        kcsv, hcsv = dump_kernel_csv(k)
        out["csv"] = kcsv + ";\n" + hcsv
    return out


def _cmd_circle(args, file_cfg, ctx):
    from .circle import build_config, diagonal_count, integral_report, main_term_and_xi

    if args.preset == "desk":
        ctx = PSContext(gamma=0.9, c=1.5, precision_bits=ctx.precision_bits)
        N = args.N if args.N is not None else 1e5
        t, u = 2, 1
    else:
        N = args.N
        t, u = args.t, args.u
        if N is None or t is None or u is None:
            raise ValidationError("circle requires --preset desk or --N --t --u")
    cfg = build_config(N, ctx, depth_t=t, depth_u=u, delta=args.delta,
                       tau_scale=args.tau_scale)
    main, xi, ratio = main_term_and_xi(cfg, ctx)
    out = {
        "N": cfg.N, "s": cfg.s, "tau": cfg.tau, "delta": cfg.delta, "eta": cfg.eta,
        "ranges": list(cfg.ranges),
        "major_bound": cfg.major_bound, "minor_bound": cfg.minor_bound,
        "theta_truncation": cfg.theta_truncation, "quad_spacing": cfg.quad_spacing,
        "main": main, "xi": xi, "ratio": ratio,
        "windows_available": cfg.windows is not None,
    }
    if cfg.windows is not None:
        diag, off = diagonal_count(cfg, ctx, raw_budget=args.raw_budget)
        out["diagonal"] = diag
        out["offdiagonal"] = off
    if args.integral:
        from .circle import r_direct

        rep = integral_report(cfg, ctx)
        out["r_integral"] = rep.value
        out["r_direct"] = r_direct(cfg, ctx, raw_budget=args.raw_budget)
        out["regions"] = {
            "major_signed": rep.major_signed, "minor_signed": rep.minor_signed,
            "trivial_signed": rep.trivial_signed, "minor_abs": rep.minor_abs,
            "trivial_abs": rep.trivial_abs,
        }
        out["quad_rel_change"] = rep.rel_change
        out["n_points"] = rep.n_points
    return out


def _cmd_solve(args, file_cfg, ctx):
    from .solver import SearchTask, exceptional_scan, find_solutions

    seed = _resolve(args, file_cfg, "seed", int, 0)
    if args.Z is not None:
        frac, hist = exceptional_scan(args.Z, args.samples, ctx, seed=seed)
        return {"Z": args.Z, "samples": args.samples, "insoluble_fraction": frac,
                "histogram": hist}
    if args.N is None:
        raise ValidationError("solve requires --N or --Z")
    eps = args.eps if args.eps is not None else 1.0 / math.log(args.N)
    task = SearchTask(N=args.N, s=args.s, epsilon=eps, mode=args.mode)
    res = find_solutions(task, ctx)
    if args.mode == "count":
        return {"N": args.N, "s": args.s, "eps": eps, "count": res}
    return {"N": args.N, "s": args.s, "eps": eps,
            "solutions": [
                {"primes": list(t.primes), "weight": t.weight, "defect": t.defect}
                for t in res
            ]}


def _cmd_params(args, file_cfg, ctx):
    # constants are pure algebra in (c, gamma); integer c is fine here even
    # though the numerical context forbids it, so bypass PSContext entirely
    from .params import derive_params, sweep_csv

    gamma = _resolve(args, file_cfg, "gamma", float, 0.9)
    c = _resolve(args, file_cfg, "c", float, 1.5)
    if args.sweep:
        c0, c1, step = (float(x) for x in args.sweep.split(":"))
        return {"csv": sweep_csv(c0, c1, step, gamma)}
    sheet = derive_params(c, gamma)
    return json.loads(sheet.to_json())


def _cmd_audit(args, file_cfg, ctx):
    import io

    from .expsums import bound_audit

    Xs = _grid(args.X_grid)
    thetas: list = _grid(args.theta_grid)
    for mult in _grid(args.theta_rel):
        thetas.append(lambda X, m=mult: m * X ** (ctx.gamma - ctx.c))
    hs = _grid(args.h_grid)
    report = bound_audit(args.lemma, Xs, thetas, hs, ctx,
                         delta=args.delta, slack=args.slack)
    buf = io.StringIO()
    report.to_csv(buf)
    return {"summary": report.summary(), "csv": buf.getvalue()}


_COMMANDS = {
    "primes": _cmd_primes,
    "sums": _cmd_sums,
    "kernel": _cmd_kernel,
    "circle": _cmd_circle,
    "solve": _cmd_solve,
    "params": _cmd_params,
    "audit": _cmd_audit,
}


def dispatch(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    if args.command not in _COMMANDS:
        sys.stderr.write("error: unknown or missing subcommand\n")
        parser.print_usage(sys.stderr)
        return 1
    try:
        file_cfg = _read_config_file(args.config) if args.config else {}
        threads = _resolve(args, file_cfg, "threads", int, None)
        if threads:
            import numba

            numba.set_num_threads(threads)
        ctx = None if args.command == "params" else _context(args, file_cfg)
        payload = _COMMANDS[args.command](args, file_cfg, ctx)
        _emit(payload, args, file_cfg, ctx)
        return 0
    except (ValidationError, OSError) as exc:
        sys.stderr.write(f"error: validation: {exc}\n")
        return 1
    except (BudgetExceeded, PrecisionExhausted) as exc:
        sys.stderr.write(f"error: budget/precision: {exc}\n")
        return 2


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()

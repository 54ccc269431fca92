"""Command-line entry point: ``cyclemix <command> [options]``.

Exit codes: 0 success, 2 invalid input, 3 size cap exceeded.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import math
import sys

from . import experiments as ex
from .cyclic_walk import DEFAULT_EPS, GenSet
from .errors import CapacityError, ValidationError
from .lattice import lattice_of
from .local_clt import clt_tv
from .power2 import c0, cutoff_check, upper_bound_table
from .theta import continuous_tv_at_step, tau0, theta_tv_mc

EXIT_OK, EXIT_VALIDATION, EXIT_CAPACITY = 0, 2, 3


def _g12(v: float) -> str:
    return format(v, ".12g")


def _round12(x):
    if isinstance(x, float) and math.isfinite(x):
        return float(_g12(x))
    if isinstance(x, dict):
        return {k: _round12(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_round12(v) for v in x]
    return x


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise ValidationError(f"cannot parse number list {text!r}") from None


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise ValidationError(f"cannot parse integer list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cyclemix", description="Mixing of random walks on Z/pZ.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, fmt_default="json"):
        sp.add_argument("--format", dest="fmt", choices=("json", "csv"), default=fmt_default)
        sp.add_argument("--out", default=None, help="write output here instead of stdout")
        sp.add_argument("--timestamp", action="store_true", help="add a generation timestamp to JSON output")

    sp = sub.add_parser("analyze", help="full report for one generating set")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--half", required=True, help="comma-separated positive half, e.g. 1,5,12")
    sp.add_argument("--eps", default=repr(DEFAULT_EPS))
    common(sp)

    for name, hlp in (("random", "ensemble of uniformly random generating sets"),
                      ("sweep", "random ensembles over a comma-separated grid of p")):
        sp = sub.add_parser(name, help=hlp)
        sp.add_argument("--p", required=True)
        sp.add_argument("--k", default="3", help="integer or 'logp_over_loglogp'")
        sp.add_argument("--trials", type=int, default=10)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--eps", default=repr(DEFAULT_EPS))
        sp.add_argument("--rho", default="1,2")
        sp.add_argument("--no-geometry", action="store_true", help="skip the geometric diameter")
        sp.add_argument("--jobs", type=int, default=1)
        common(sp)

    sp = sub.add_parser("power2", help="cut-off measurements for the power-of-2 walk")
    sp.add_argument("--p", required=True, help="prime or comma-separated primes")
    sp.add_argument("--eps", type=float, default=0.25)
    sp.add_argument("--J", type=int, default=None)
    common(sp)

    sp = sub.add_parser("tau0", help="mixing/relaxation ratio of circle diffusion")
    sp.add_argument("--tol", type=float, default=1e-12)
    common(sp, fmt_default=None)

    sp = sub.add_parser("c0", help="rate constant of the power-of-2 walk")
    sp.add_argument("--tol", type=float, default=1e-14)
    common(sp, fmt_default=None)

    sp = sub.add_parser("clt", help="TV between the lazy walk on Z^k and its Gaussian limit")
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--n", type=int, required=True)
    common(sp, fmt_default=None)

    sp = sub.add_parser("theta", help="Monte Carlo TV of lattice diffusion")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--half", required=True)
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--t", type=float, help="diffusion time")
    g.add_argument("--n", type=int, help="walk step; time 2n/(2k+1)")
    sp.add_argument("--mc-samples", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    common(sp)
    return ap


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _stamp(args) -> str | None:
    return _dt.datetime.now(_dt.timezone.utc).isoformat() if getattr(args, "timestamp", False) else None


def _scalar(args, name: str, value: float, config: dict) -> str:
    if args.fmt is None:
        return _g12(value) + "\n"
    if args.fmt == "csv":
        return f"{name}\n{_g12(value)}\n"
    return ex.to_json({"config": config, "records": [], "summary": {name: _round12(value)}}, _stamp(args))


def _random_payload(args, p: int) -> dict:
    cfg = ex.ExperimentConfig(
        command=args.command, p=p, k=args.k, trials=args.trials, seed=args.seed,
        eps=_floats(args.eps), rho=_floats(args.rho), geometry=not args.no_geometry,
        out=args.out, fmt=args.fmt,
    )
    return ex.run_random(cfg, jobs=args.jobs)


def run(args) -> str:
    cmd = args.command
    if cmd == "analyze":
        A = GenSet.parse(args.p, args.half)
        rep = ex.analyze(A, _floats(args.eps))
        config = {"command": cmd, "p": args.p, "half": list(A.half), "eps": list(_floats(args.eps))}
        if args.fmt == "csv":
            return ex.rows_to_csv([{"n": n, "tv": tv} for n, tv in rep["tv_profile"]])
        return ex.to_json({"config": config, "records": [rep], "summary": {
            "gap": rep["gap"], "t_rel": rep["t_rel"], "t_mix": rep["t_mix"]}}, _stamp(args))

    if cmd in ("random", "sweep"):
        grid = _ints(args.p)
        if cmd == "random" and len(grid) != 1:
            raise ValidationError("random takes a single p; use sweep for a grid")
        payloads = [_random_payload(args, p) for p in grid]
        eps = _floats(args.eps)
        if args.fmt == "csv":
            if cmd == "random":
                return ex.records_to_csv(payloads[0]["records"], eps)
            rows = []
            for pl in payloads:
                s = pl["summary"]
                rows.append({"p": pl["config"]["p"], "k": s["k"], "trials": s["trials"],
                             "median_t_mix": s["t_mix_quantiles"]["0.5"],
                             "target_tmix": s["target_tmix"], "median_ratio_target": s["median_ratio_target"],
                             "min_ratio_rel": s["min_ratio_rel"], "max_ratio_rel": s["max_ratio_rel"]})
            return ex.rows_to_csv(rows)
        if cmd == "random":
            return ex.to_json(payloads[0], _stamp(args))
        return ex.to_json({
            "config": {"command": cmd, "p": list(grid), "k": args.k, "trials": args.trials, "seed": args.seed},
            "records": [{"p": pl["config"]["p"], "records": pl["records"]} for pl in payloads],
            "summary": {str(pl["config"]["p"]): pl["summary"] for pl in payloads},
        }, _stamp(args))

    if cmd == "power2":
        rows = [cutoff_check(p, args.eps, args.J) for p in _ints(args.p)]
        if args.fmt == "csv":
            return ex.rows_to_csv(rows)
        bounds = {str(r["p"]): upper_bound_table(r["p"]) for r in rows}
        return ex.to_json({"config": {"command": cmd, "p": list(_ints(args.p)), "eps": args.eps, "J": args.J},
                           "records": _round12(rows), "summary": _round12(bounds)}, _stamp(args))

    if cmd == "tau0":
        return _scalar(args, "tau0", tau0(args.tol), {"command": cmd, "tol": args.tol})
    if cmd == "c0":
        return _scalar(args, "c0", c0(args.tol), {"command": cmd, "tol": args.tol})
    if cmd == "clt":
        return _scalar(args, "clt_tv", clt_tv(args.k, args.n), {"command": cmd, "k": args.k, "n": args.n})

    if cmd == "theta":
        A = GenSet.parse(args.p, args.half)
        if args.n is not None:
            res = continuous_tv_at_step(A, args.n, args.mc_samples, args.seed)
            t = 2.0 * args.n / (2 * A.k + 1)
        else:
            t = args.t
            res = theta_tv_mc(lattice_of(A), t, args.mc_samples, args.seed)
        row = {"p": args.p, "t": t, "estimate": res["estimate"], "stderr": res["stderr"], "n_samples": res["n"]}
        if args.fmt == "csv":
            return ex.rows_to_csv([_round12(row)])
        return ex.to_json({"config": {"command": cmd, "p": args.p, "half": list(A.half), "t": t,
                                      "mc_samples": args.mc_samples, "seed": args.seed},
                           "records": [_round12(row)], "summary": _round12(res)}, _stamp(args))
    raise ValidationError(f"unknown command {cmd!r}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = run(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except CapacityError as exc:
        print(f"capacity exceeded: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    _emit(text, args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

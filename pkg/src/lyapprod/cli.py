"""Command-line front end.

One `lyap` executable with a subcommand per pipeline stage: mc (matrix
products), chain (projective chain histogram), operator (invariant tail),
edge (half-line measure), dh (glued asymptotics; `dh constants` for the
scalar summary), wd (weak-disorder baseline), compare (all estimators
side by side), fig2 (density overlay data).

Every file the CLI writes is accompanied by <path>.manifest.json holding
the full configuration, its SHA-256, the seed, and the package version;
reruns with the same manifest produce byte-identical outputs. Exit codes:
0 success, 2 rejected input or configuration, 1 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from importlib import metadata
from pathlib import Path

import numpy as np

from . import asymptotic, edge, matprod, operator, projective
from .disorder import fig2_model, load_model
from .errors import LyapError, ValidationError


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0.0.0"


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _config_dict(args: argparse.Namespace) -> dict:
    out = {}
    for key, value in sorted(vars(args).items()):
        if key == "func" or value is None:
            continue
        out[key] = str(value) if isinstance(value, Path) else value
    return out


def _write_manifest(target: Path, command: str, args: argparse.Namespace) -> None:
    config = _config_dict(args)
    blob = json.dumps(config, sort_keys=True).encode()
    manifest = {
        "command": command,
        "config": config,
        "configSha256": hashlib.sha256(blob).hexdigest(),
        "seed": int(getattr(args, "seed", 0)),
        "version": _version(),
    }
    path = Path(str(target) + ".manifest.json")
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _parse_k_list(text: str) -> list[float]:
    try:
        ks = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ValidationError(f"bad k list {text!r}: expected comma-separated reals") from None
    if not ks:
        raise ValidationError(f"bad k list {text!r}: empty")
    return ks


def _cmd_mc(args) -> int:
    model = load_model(args.model)
    est = matprod.lyapunov_mc(
        args.eps, model, steps=args.steps, batches=args.batches,
        seed=args.seed, norm=args.norm,
    )
    print(f"epsilon={_fmt(est.epsilon)} k={_fmt(est.k)} mean={_fmt(est.mean)} "
          f"stderr={_fmt(est.stderr)} steps={est.steps}")
    if args.out:
        _write_csv(
            args.out,
            ["epsilon", "k", "mean", "stderr", "steps", "seed"],
            [[est.epsilon, est.k, est.mean, est.stderr, est.steps, est.seed]],
        )
        _write_manifest(args.out, "mc", args)
    return 0


def _cmd_chain(args) -> int:
    model = load_model(args.model)
    cfg = projective.ChainConfig(
        k=args.k, model=model, steps=args.steps, burn_in=args.burn_in,
        seed=args.seed, x0=args.x0,
    )
    traj = projective.simulate_x(cfg, bin_width=args.bin_width)
    centers = 0.5 * (traj.edges[:-1] + traj.edges[1:])
    density = traj.density
    mean_state = float(np.sum(centers * density) * np.diff(traj.edges)[0])
    print(f"k={_fmt(args.k)} steps={cfg.steps} mean_state={_fmt(mean_state)} "
          f"final={_fmt(traj.final_x)}")
    if args.hist_out:
        rows = zip(traj.edges[:-1], traj.edges[1:], density)
        _write_csv(args.hist_out, ["binLeft", "binRight", "density"], rows)
        _write_manifest(args.hist_out, "chain", args)
    return 0


def _cmd_operator(args) -> int:
    model = load_model(args.model)
    solution = operator.solve_invariant(
        args.k, model, tol=args.tol, max_iter=args.max_iter, method=args.method,
    )
    value = operator.lyap_functional(solution.tail, args.k, form_tol=1e-6)
    print(f"k={_fmt(args.k)} L={_fmt(value)} residual={_fmt(solution.residual)} "
          f"iterations={solution.iterations} method={solution.method}")
    if args.out:
        tail = solution.tail
        rows = zip(tail.x, tail.values, tail.density())
        _write_csv(args.out, ["x", "G", "density"], rows)
        _write_manifest(args.out, "operator", args)
    return 0


def _cmd_edge(args) -> int:
    model = load_model(args.model)
    measure = edge.solve_edge(
        model, side=args.side, x_lo=args.x_lo, x_hi=args.x_hi,
        spacing=args.spacing, tol=args.tol, x0=args.x0, method=args.method,
    )
    print(f"side={measure.side} slopeRaw={_fmt(measure.slope_raw)} "
          f"intercept={_fmt(measure.intercept)} rho={_fmt(measure.rho_estimate)}")
    if args.out:
        rows = zip(measure.x, measure.F, measure.residual())
        _write_csv(args.out, ["x", "F", "residual"], rows)
        _write_manifest(args.out, "edge", args)
    if args.json_out:
        _write_json(args.json_out, {
            "slopeRaw": measure.slope_raw,
            "intercept": measure.intercept,
            "rhoEstimate": measure.rho_estimate,
        })
        _write_manifest(args.json_out, "edge", args)
    return 0


def _solve_edges(model, args):
    kwargs = {}
    for name in ("x_lo", "x_hi", "spacing"):
        if getattr(args, f"edge_{name}", None) is not None:
            kwargs[name] = getattr(args, f"edge_{name}")
    left = edge.solve_edge(model, side="left", **kwargs)
    right = edge.solve_edge(model, side="right", **kwargs)
    return left, right


def _cmd_dh(args) -> int:
    model = load_model(args.model)
    left, right = _solve_edges(model, args)
    if args.action == "constants":
        constants = asymptotic.edge_constants(left=left, right=right)
        payload = {
            "kappa1": constants.kappa1,
            "kappa2": constants.kappa2,
            "cLeft": constants.c_left,
            "cRight": constants.c_right,
            "rhoLeft": constants.rho_left,
            "rhoRight": constants.rho_right,
        }
        print(json.dumps(payload, sort_keys=True, indent=2))
        if args.json_out:
            _write_json(args.json_out, payload)
            _write_manifest(args.json_out, "dh", args)
        return 0

    rows = []
    for k in _parse_k_list(args.k):
        glued = asymptotic.build_glued_tail(
            k, left, right, grid=operator.default_grid(k, model)
        )
        value = asymptotic.asymptotic_lyap(glued, k=k)
        residual = asymptotic.one_step_residual(glued, model)
        rows.append([k, glued.ck, glued.kappa1, glued.kappa2, value, residual])
        print(f"k={_fmt(k)} Ck={_fmt(glued.ck)} kappa1={_fmt(glued.kappa1)} "
              f"kappa2={_fmt(glued.kappa2)} prediction={_fmt(value)} "
              f"residual={_fmt(residual)}")
    if args.out:
        _write_csv(
            args.out,
            ["k", "Ck", "kappa1", "kappa2", "prediction", "residual"],
            rows,
        )
        _write_manifest(args.out, "dh", args)
    return 0


def _cmd_wd(args) -> int:
    value = asymptotic.weak_disorder_lyap(args.eps)
    print(f"{value:.7g}")
    if args.json_out:
        _write_json(args.json_out, {"epsilon": args.eps, "value": value})
        _write_manifest(args.json_out, "wd", args)
    return 0


def _cmd_compare(args) -> int:
    model = load_model(args.model)
    left, right = _solve_edges(model, args)
    rows = asymptotic.compare_all(
        model, _parse_k_list(args.k), left=left, right=right,
        mc_steps=args.steps, chain_steps=args.chain_steps or args.steps,
        batches=args.batches, seed=args.seed,
    )
    table = []
    for row in rows:
        table.append([
            row.k, row.mc.mean, row.mc.stderr, row.ergodic.mean,
            row.ergodic.stderr, row.operator_value, row.dh_value, row.residual,
        ])
        print(f"k={_fmt(row.k)} mc={_fmt(row.mc.mean)} ergodic={_fmt(row.ergodic.mean)} "
              f"operator={_fmt(row.operator_value)} dh={_fmt(row.dh_value)} "
              f"residual={_fmt(row.residual)}")
    if args.out:
        _write_csv(
            args.out,
            ["k", "mc", "mcStderr", "ergodic", "ergodicStderr",
             "operator", "dh", "residual"],
            table,
        )
        _write_manifest(args.out, "compare", args)
    return 0


def _cmd_fig2(args) -> int:
    model = load_model(args.model) if args.model else fig2_model()
    k = args.k
    solution = operator.solve_invariant(k, model, tol=args.tol)
    left, right = _solve_edges(model, args)
    glued = asymptotic.build_glued_tail(k, left, right)

    tail = solution.tail
    density = tail.density()
    sel = (tail.x >= -12.0) & (tail.x <= 12.0)
    x = tail.x[sel]
    inv = density[sel]
    left_density = left.density_at(x + k) / glued.ck
    right_density = right.density_at(k - x) / glued.ck
    rows = zip(x, inv, left_density, right_density)
    print(f"k={_fmt(k)} Ck={_fmt(glued.ck)} plateau={_fmt(1.0 / glued.ck)}")
    if args.out:
        _write_csv(
            args.out,
            ["x", "invariantDensity", "leftEdgeDensity", "rightEdgeDensity"],
            rows,
        )
        _write_manifest(args.out, "fig2", args)
    return 0


def _add_edge_grid_options(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--edge-x-lo", type=float, dest="edge_x_lo", help="edge grid left end")
    sub.add_argument("--edge-x-hi", type=float, dest="edge_x_hi", help="edge grid right end")
    sub.add_argument("--edge-spacing", type=float, dest="edge_spacing", help="edge grid spacing")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lyap",
        description="Lyapunov exponents of random 2x2 transfer-matrix products",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {_version()}")
    subs = parser.add_subparsers(dest="command", required=True)

    mc = subs.add_parser("mc", help="Monte Carlo product estimate")
    mc.add_argument("--eps", type=float, required=True)
    mc.add_argument("--model", type=Path, required=True)
    mc.add_argument("--steps", type=int, default=10**6)
    mc.add_argument("--batches", type=int, default=32)
    mc.add_argument("--seed", type=int, default=0)
    mc.add_argument("--norm", choices=["l1", "max"], default="l1")
    mc.add_argument("--out", type=Path)
    mc.set_defaults(func=_cmd_mc)

    chain = subs.add_parser("chain", help="projective chain histogram")
    chain.add_argument("--k", type=float, required=True)
    chain.add_argument("--model", type=Path, required=True)
    chain.add_argument("--steps", type=int, default=10**6)
    chain.add_argument("--burn-in", type=int, default=10**5, dest="burn_in")
    chain.add_argument("--seed", type=int, default=0)
    chain.add_argument("--x0", type=float, default=0.0)
    chain.add_argument("--bin-width", type=float, default=0.02, dest="bin_width")
    chain.add_argument("--hist-out", type=Path, dest="hist_out")
    chain.set_defaults(func=_cmd_chain)

    op = subs.add_parser("operator", help="invariant tail of the transfer operator")
    op.add_argument("--k", type=float, required=True)
    op.add_argument("--model", type=Path, required=True)
    op.add_argument("--tol", type=float, default=1e-8)
    op.add_argument("--max-iter", type=int, default=None, dest="max_iter")
    op.add_argument("--method", choices=["direct", "iterate"], default="direct")
    op.add_argument("--out", type=Path)
    op.set_defaults(func=_cmd_operator)

    ed = subs.add_parser("edge", help="half-line invariant measure")
    ed.add_argument("--model", type=Path, required=True)
    ed.add_argument("--side", choices=["left", "right"], default="left")
    ed.add_argument("--x-lo", type=float, default=-20.0, dest="x_lo")
    ed.add_argument("--x-hi", type=float, default=80.0, dest="x_hi")
    ed.add_argument("--spacing", type=float, default=0.02)
    ed.add_argument("--tol", type=float, default=1e-10)
    ed.add_argument("--x0", type=float, default=1.0)
    ed.add_argument("--method", choices=["direct", "iterate"], default="direct")
    ed.add_argument("--out", type=Path)
    ed.add_argument("--json-out", type=Path, dest="json_out")
    ed.set_defaults(func=_cmd_edge)

    dh = subs.add_parser("dh", help="glued asymptotics: predictions or constants")
    dh.add_argument("action", nargs="?", choices=["constants"], default=None)
    dh.add_argument("--model", type=Path, required=True)
    dh.add_argument("--k", type=str, default="6,9,12")
    dh.add_argument("--out", type=Path)
    dh.add_argument("--json-out", type=Path, dest="json_out")
    _add_edge_grid_options(dh)
    dh.set_defaults(func=_cmd_dh)

    wd = subs.add_parser("wd", help="weak-disorder closed form")
    wd.add_argument("--eps", type=float, required=True)
    wd.add_argument("--json-out", type=Path, dest="json_out")
    wd.set_defaults(func=_cmd_wd)

    cmp_ = subs.add_parser("compare", help="all estimators side by side")
    cmp_.add_argument("--model", type=Path, required=True)
    cmp_.add_argument("--k", type=str, default="2,5,8")
    cmp_.add_argument("--steps", type=int, default=2 * 10**6)
    cmp_.add_argument("--chain-steps", type=int, default=None, dest="chain_steps")
    cmp_.add_argument("--batches", type=int, default=32)
    cmp_.add_argument("--seed", type=int, default=0)
    cmp_.add_argument("--out", type=Path)
    _add_edge_grid_options(cmp_)
    cmp_.set_defaults(func=_cmd_compare)

    fig2 = subs.add_parser("fig2", help="density overlay data on [-12, 12]")
    fig2.add_argument("--k", type=float, default=10.0)
    fig2.add_argument("--model", type=Path, default=None)
    fig2.add_argument("--tol", type=float, default=1e-8)
    fig2.add_argument("--out", type=Path)
    _add_edge_grid_options(fig2)
    fig2.set_defaults(func=_cmd_fig2)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except LyapError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

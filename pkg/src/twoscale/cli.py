"""Command line driver `ua`: single runs, sweeps, references, mode traces."""

from __future__ import annotations

import argparse
import sys
import time

from .harness import (
    FULL_K_RANGE,
    SweepConfig,
    mode_trace,
    run_single,
    run_sweep,
    write_trace_file,
)
from .initdata import prepare_initial_data
from .integrators import integrate
from .models import make_benchmark
from .reference import (
    POLICIES,
    ReferenceSolution,
    build_reference,
    reference_cache_path,
    write_reference_file,
    _checksum,
)
from .spectral import TauGrid, hs_norm


def _add_run(sub):
    p = sub.add_parser("run", help="single integration; writes the final state")
    p.add_argument("--model", required=True, choices=("nkg", "nls"))
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--scheme", default="ua2", choices=("ua1", "ua2", "strang", "averaged"))
    p.add_argument("--init-order", type=int, default=2, choices=(0, 1, 2, 3))
    p.add_argument("--nx", type=int, default=0)
    p.add_argument("--ntau", type=int, default=0)
    p.add_argument("--tfinal", type=float, default=0.4)
    p.add_argument("--out", default=None, help="output field file (binary cache format)")


def _add_sweep(sub):
    p = sub.add_parser("sweep", help="(eps, dt) error sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--full", action="store_true", help="paper-scale grids: K up to 18, paper references")
    p.add_argument("--jobs", type=int, default=1)


def _add_reference(sub):
    p = sub.add_parser("reference", help="build (or refresh) a cached reference solution")
    p.add_argument("--model", required=True, choices=("nkg", "nls"))
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--tfinal", type=float, default=0.4)
    p.add_argument("--policy", default="desk", choices=tuple(POLICIES))
    p.add_argument("--cache", default="ua_cache")
    p.add_argument("--force", action="store_true")


def _add_trace(sub):
    p = sub.add_parser("trace", help="time traces of x-Fourier mode magnitudes at tau = 0")
    p.add_argument("--model", required=True, choices=("nkg", "nls"))
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--modes", required=True, help="comma-separated mode indices, e.g. 1,3,5")
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int, default=1024)
    p.add_argument("--snapshot-every", type=int, default=8)
    p.add_argument("--init-order", type=int, default=2, choices=(0, 1, 2, 3))
    p.add_argument("--nx", type=int, default=0)
    p.add_argument("--ntau", type=int, default=0)
    p.add_argument("--tfinal", type=float, default=0.4)


def _defaults(model_id, nx, ntau):
    table = {"nls": (64, 2048), "nkg": (200, 64)}
    dnx, dntau = table[model_id]
    return nx or dnx, ntau or dntau


def cmd_run(args) -> int:
    nx, ntau = _defaults(args.model, args.nx, args.ntau)
    t0 = time.perf_counter()
    final = run_single(
        args.model, args.scheme, args.eps, args.steps, args.tfinal, nx, ntau, args.init_order
    )
    elapsed = time.perf_counter() - t0
    print(
        f"{args.model} {args.scheme} eps={args.eps:g} steps={args.steps} "
        f"H1={hs_norm(final, 1.0):.12g} runtime={elapsed:.3f}s"
    )
    if args.out:
        ref = ReferenceSolution(
            model=args.model, eps=args.eps, t_final=args.tfinal, nx=nx,
            solver=args.scheme, dt_used=args.tfinal / args.steps, values=final,
            checksum=_checksum(final.values),
        )
        write_reference_file(args.out, ref)
        print(f"wrote {args.out}")
    return 0


def cmd_sweep(args) -> int:
    cfg = SweepConfig.from_json(args.config)
    if args.full:
        cfg.k_list = FULL_K_RANGE
        cfg.reference_policy = "paper"
    records = run_sweep(cfg, jobs=args.jobs)
    for r in records:
        print(r.csv_row())
    if cfg.out:
        print(f"wrote {cfg.out}")
    return 0


def cmd_reference(args) -> int:
    ref = build_reference(
        args.model, args.eps, args.tfinal, POLICIES[args.policy],
        cache_dir=args.cache, force=args.force,
    )
    recipe = POLICIES[args.policy].recipe(args.model, args.eps, args.tfinal)
    path = reference_cache_path(args.cache, args.model, args.eps, args.tfinal, recipe)
    print(f"{path} solver={ref.solver} dt={ref.dt_used:.3e} checksum={ref.checksum:.6e}")
    return 0


def cmd_trace(args) -> int:
    nx, ntau = _defaults(args.model, args.nx, args.ntau)
    modes = [int(m) for m in args.modes.split(",")]
    model, state0 = make_benchmark(args.model, args.eps, nx)
    taugrid = TauGrid(model.period, ntau)
    U0 = prepare_initial_data(model, state0, args.init_order, taugrid)
    traj = integrate(
        model, U0, args.tfinal, args.steps, "ua2", snapshot_every=args.snapshot_every
    )
    times, mags = mode_trace(traj, modes, tau_star=0.0)
    write_trace_file(args.out, times, mags, modes)
    print(f"wrote {args.out} ({len(times)} samples, modes {modes})")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ua", description="uniformly accurate two-scale solver benchmarks"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run(sub)
    _add_sweep(sub)
    _add_reference(sub)
    _add_trace(sub)
    args = parser.parse_args(argv)
    return {"run": cmd_run, "sweep": cmd_sweep, "reference": cmd_reference, "trace": cmd_trace}[
        args.command
    ](args)


if __name__ == "__main__":
    sys.exit(main())

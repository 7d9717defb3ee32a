"""Command-line entry point: ``maghho converge|eigen|gauge-dev|ab|check``.

Thin wrapper over :mod:`maghho.experiments`; each subcommand writes its
CSV/JSON artifacts into ``--out`` and prints a one-line summary per
refinement level.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import experiments
from .assembly import assemble, dump_system
from .mesh import generate_cartesian, import_mesh
from .physics import FockDarwinConfig


def _add_common(p):
    p.add_argument("--k", type=int, default=1, help="polynomial degree (0..3)")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--quad-extra", type=int, default=0,
                   help="extra quadrature order for strongly varying fields")
    p.add_argument("--cheap-gradient", action="store_true",
                   help="use the reconstruction-based gradient variant")
    p.add_argument("--dump-system", action="store_true",
                   help="dump the assembled matrix in 'i j re im' format")


def _levels(arg):
    return [int(x) for x in arg.split(",")]


def _maybe_dump(args, bounds, n0):
    if getattr(args, "dump_system", False):
        mesh = generate_cartesian(bounds, n0, n0)
        system = assemble(mesh, args.k, quad_extra=args.quad_extra)
        from pathlib import Path
        Path(args.out).mkdir(parents=True, exist_ok=True)
        dump_system(system, Path(args.out) / "system.txt")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="maghho",
        description="HHO solver for the 2D magnetic Schrodinger equation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("converge", help="manufactured-solution convergence table")
    _add_common(p)
    p.add_argument("--levels", type=_levels, default=[4, 8, 16, 32],
                   help="comma-separated cells per side, e.g. 4,8,16,32")

    p = sub.add_parser("eigen", help="Fock-Darwin spectrum under refinement")
    _add_common(p)
    p.add_argument("--levels", type=_levels, default=[8, 16, 32])
    p.add_argument("--gauge", choices=("sym", "landau", "smooth"), default="sym")
    p.add_argument("--n-eig", type=int, default=5)
    p.add_argument("--shift", type=float, default=None,
                   help="shift-invert target (default: below the spectral floor)")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--omega0", type=float, default=1.0)
    p.add_argument("--B", type=float, default=1.0)
    p.add_argument("--L", type=float, default=4.0)

    p = sub.add_parser("gauge-dev", help="eigenvalue deviation across gauges")
    _add_common(p)
    p.add_argument("--levels", type=_levels, default=[8, 16, 32])
    p.add_argument("--n-eig", type=int, default=5)
    p.add_argument("--omega0", type=float, default=1.0)
    p.add_argument("--B", type=float, default=1.0)
    p.add_argument("--L", type=float, default=4.0)

    p = sub.add_parser("ab", help="Aharonov-Bohm interference run")
    _add_common(p)
    p.add_argument("--flux", type=float, default=np.pi,
                   help="enclosed magnetic flux (0 or pi reproduce the study)")
    p.add_argument("--nx", type=int, default=150)
    p.add_argument("--ny", type=int, default=60)
    p.add_argument("--dt", type=float, default=2.5e-3)
    p.add_argument("--t-end", type=float, default=1.49)
    p.add_argument("--hole-segments", type=int, default=64)
    p.add_argument("--use-reconstruction", action="store_true",
                   help="sample the reconstruction instead of cell unknowns")
    p.add_argument("--no-frames", action="store_true",
                   help="skip the VTK density frames")

    p = sub.add_parser("check", help="mesh + operator invariant suite")
    _add_common(p)
    p.add_argument("--mesh", default=None, help="ASCII mesh file to check")
    p.add_argument("--nx", type=int, default=8)
    p.add_argument("--ny", type=int, default=8)
    p.add_argument("--rho", type=float, default=0.05)

    args = parser.parse_args(argv)
    if args.k < 0 or args.k > 3:
        parser.error("--k must be between 0 and 3")

    if args.command == "converge":
        rows = experiments.run_convergence(
            args.k, args.levels, out_dir=args.out,
            quad_extra=args.quad_extra, cheap_gradient=args.cheap_gradient)
        for r in rows:
            print(f"h={r.h:9.3e} ndof={r.ndof:7d} err1h={r.err_1h:9.3e} "
                  f"rate={r.rate_1h:5.2f} errL2={r.err_l2:9.3e} "
                  f"rate={r.rate_l2:5.2f} ({r.seconds:.1f}s)")
        _maybe_dump(args, (0.0, 1.0, 0.0, 1.0), args.levels[0])

    elif args.command == "eigen":
        cfg = FockDarwinConfig(omega0=args.omega0, B=args.B, L=args.L)
        results = experiments.run_eigen(
            args.k, args.levels, out_dir=args.out, config=cfg,
            gauge_name=args.gauge, n_eig=args.n_eig, sigma=args.shift,
            quad_extra=args.quad_extra, cheap_gradient=args.cheap_gradient)
        print(f"reference ground energy: {cfg.reference_energy():.10f}")
        for r in results:
            print(f"h={r['h']:9.3e} ndof={r['ndof']:7d} "
                  f"lambda0={r['values'][0]:.8f} rel_err={r['rel_err']:9.3e} "
                  f"rate={r['rate']:5.2f}")
        _maybe_dump(args, cfg.bounds, args.levels[0])

    elif args.command == "gauge-dev":
        cfg = FockDarwinConfig(omega0=args.omega0, B=args.B, L=args.L)
        res = experiments.run_gauge_dev(
            args.k, args.levels, out_dir=args.out, config=cfg,
            n_eig=args.n_eig, quad_extra=args.quad_extra,
            cheap_gradient=args.cheap_gradient)
        for i, h in enumerate(res["h"]):
            print(f"h={h:9.3e} dev_smooth={res['dev_smooth'][i]:9.3e} "
                  f"(rate {res['rate_smooth'][i]:5.2f})  "
                  f"dev_landau={res['dev_landau'][i]:9.3e} "
                  f"(rate {res['rate_landau'][i]:5.2f})")

    elif args.command == "ab":
        from .physics import ABConfig
        cfg = ABConfig(flux=args.flux, t_end=args.t_end)

        def progress(step, n, t, drift):
            print(f"  step {step:5d}/{n} t={t:.3f} drift={drift:.2e}",
                  flush=True)

        profile, summary = experiments.run_ab(
            args.flux, out_dir=args.out, nx=args.nx, ny=args.ny, k=args.k,
            dt=args.dt, config=cfg, hole_segments=args.hole_segments,
            use_reconstruction=args.use_reconstruction,
            cheap_gradient=args.cheap_gradient, quad_extra=args.quad_extra,
            write_frames=not args.no_frames, progress=progress)
        print(f"flux={summary['flux']:.6g} I(0)={summary['intensity_at_zero']:.4e} "
              f"max={summary['max_intensity']:.4e} at y={summary['argmax_y']:+.3f} "
              f"mass drift={summary['mass_drift']:.2e}")

    elif args.command == "check":
        if args.mesh is not None:
            mesh = import_mesh(args.mesh)
        else:
            mesh = generate_cartesian((0.0, 1.0, 0.0, 1.0), args.nx, args.ny)
        result = experiments.run_check(mesh, k=args.k, rho=args.rho,
                                       out_dir=args.out)
        print(f"mesh valid: {result['mesh_valid']} "
              f"(regularity {result['regularity']:.4f})")
        for v in result["violations"]:
            print(f"  violation: {v}")
        print(f"reconstruction error:       {result['reconstruction_error']:.3e}")
        print(f"stabilization consistency:  {result['stabilization_consistency']:.3e}")
        print(f"gradient identity error:    {result['gradient_identity_error']:.3e}")
        print(f"coercivity constant:        {result['coercivity_constant']:.4f}")
        if not result["mesh_valid"]:
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

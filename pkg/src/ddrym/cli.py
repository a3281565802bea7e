"""Command-line driver: evolution runs, convergence studies, figure rendering.

Subcommands:
  * ``solve``: run one scheme on one mesh and write the per-step diagnostics
    CSV; manufactured runs also report final-time relative errors.
  * ``converge``: manufactured runs over a mesh sequence; writes the
    h/error/rate table.
  * ``plot``: render figures from previously written CSV files.
"""

import argparse
import math
import sys

import numpy as np

from .ddr import DdrComplex
from .laddr import LaddrComplex, LieField
from .lie import su2, u1
from .manufactured import ManufacturedForcing, ManufacturedSolution
from .mesh import Mesh, MeshError, build_cubic_mesh, load_polymesh
from .scheme import DiagnosticsRow, Evolution, SchemeConfig, State, auto_steps
from .solver import NewtonConfig, NewtonError, SolverError


def load_mesh(spec: str) -> Mesh:
    """Build a mesh from a generator spec ("cubic:N") or a polymesh path."""
    if spec.startswith("cubic:"):
        return build_cubic_mesh(int(spec.split(":", 1)[1]))
    with open(spec, "rb") as fh:
        return load_polymesh(fh)


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--scheme", default="ym-constrained",
                   choices=["maxwell", "ym", "ym-constrained"])
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--tmax", type=float, default=1.0)
    p.add_argument("--steps", default="auto", help="step count or 'auto'")
    p.add_argument("--ic", default="interpolate", choices=["interpolate", "projected"])
    p.add_argument("--manufactured", action="store_true",
                   help="add the manufactured forcing and report final errors")
    p.add_argument("--newton-tol", type=float, default=1e-6)
    p.add_argument("--newton-max", type=int, default=50)
    p.add_argument("--algebra", default="su2", choices=["su2", "u1"])
    p.add_argument("--out", default="-", help="output CSV path ('-' = stdout)")
    p.add_argument("--seed", type=int, default=None,
                   help="use seeded random initial data instead of the gauge fields")
    p.add_argument("--zero-ic", action="store_true",
                   help="start from identically zero fields")


def _resolve_steps(arg: str, h: float, tmax: float) -> int:
    if arg == "auto":
        return auto_steps(h, tmax)
    n = int(arg)
    if n < 1:
        raise ValueError("steps must be >= 1")
    return n


def _random_state(la: LaddrComplex, seed: int, constrained: bool) -> State:
    rng = np.random.default_rng(seed)
    shape = (la.mesh.n_edges, la.algebra.dim)
    return State(
        A=LieField("curl", 0.5 * rng.standard_normal(shape)),
        E=LieField("curl", 0.5 * rng.standard_normal(shape)),
        lam=la.zeros("grad") if constrained else None,
        t=0.0,
        n=0,
    )


def _setup(mesh_spec, args):
    mesh = load_mesh(mesh_spec)
    algebra = su2() if args.algebra == "su2" else u1()
    la = LaddrComplex(DdrComplex(mesh), algebra)
    steps = _resolve_steps(args.steps, mesh.h, args.tmax)
    newton = NewtonConfig(tolerance=args.newton_tol, max_iterations=args.newton_max)
    forcing = None
    solution = None
    if args.manufactured:
        if algebra.dim < 3:
            raise ValueError("manufactured runs need the su2 algebra")
        solution = ManufacturedSolution(algebra)
        solution.self_test()
        forcing = ManufacturedForcing(la, solution)
    cfg = SchemeConfig(
        variant=args.scheme,
        theta=args.theta,
        dt=args.tmax / steps,
        newton=newton,
        manufactured_forcing=args.manufactured,
    )
    ev = Evolution(la, cfg, forcing=forcing)
    return mesh, la, ev, steps, solution


def _initial_state(la, ev, args, solution) -> State:
    constrained = args.scheme == "ym-constrained"
    if getattr(args, "zero_ic", False):
        return State(
            A=la.zeros("curl"),
            E=la.zeros("curl"),
            lam=la.zeros("grad") if constrained else None,
            t=0.0,
            n=0,
        )
    if args.seed is not None:
        return _random_state(la, args.seed, constrained)
    gauge = solution if solution is not None else ManufacturedSolution()
    if la.algebra.dim < 3:
        # Abelian runs take the third algebra axis of the gauge fields.
        a0 = lambda p: gauge.potential(0.0, p)[:, :, 2 : 2 + la.algebra.dim]
        e0 = lambda p: gauge.electric(0.0, p)[:, :, 2 : 2 + la.algebra.dim]
    else:
        a0 = lambda p: gauge.potential(0.0, p)
        e0 = lambda p: gauge.electric(0.0, p)
    if args.ic == "projected":
        state = ev.project_ics(a0, e0)
    else:
        state = ev.interpolate_ics(a0, e0)
    if constrained and state.lam is None:
        state = State(A=state.A, E=state.E, lam=la.zeros("grad"), t=0.0, n=0)
    return state


def _write(path: str, text: str):
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _final_errors(la, ev, state, solution, tmax):
    ia = la.interpolate_curl(lambda p: solution.potential(tmax, p))
    ie = la.interpolate_curl(lambda p: solution.electric(tmax, p))
    da = la.field("curl", state.A.flat - ia.flat)
    de = la.field("curl", state.E.flat - ie.flat)
    err_a = la.norm("curl", da) / la.norm("curl", ia)
    err_e = la.norm("curl", de) / la.norm("curl", ie)
    return err_a, err_e


def cmd_solve(args) -> int:
    mesh, la, ev, steps, solution = _setup(args.mesh, args)
    state = _initial_state(la, ev, args, solution)
    traj, rows = ev.run(state, steps)
    lines = [DiagnosticsRow.HEADER]
    lines += [r.as_csv() for r in rows]
    if args.manufactured:
        err_a, err_e = _final_errors(la, ev, traj[-1], solution, args.tmax)
        lines.append(f"# err_A={err_a:.12e} err_E={err_e:.12e}")
        print(f"final relative errors: err_A={err_a:.6e} err_E={err_e:.6e}",
              file=sys.stderr)
    _write(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_converge(args) -> int:
    mesh_specs = []
    for spec in args.mesh:
        mesh_specs.extend(s for s in spec.split(",") if s)
    if len(mesh_specs) < 2:
        raise ValueError("converge needs at least 2 meshes")
    if not args.manufactured:
        args.manufactured = True  # convergence is always against the gauge fields
    results = []
    for spec in mesh_specs:
        mesh, la, ev, steps, solution = _setup(spec, args)
        state = _initial_state(la, ev, args, solution)
        traj, rows = ev.run(state, steps)
        err_a, err_e = _final_errors(la, ev, traj[-1], solution, args.tmax)
        results.append((spec, mesh.h, args.tmax / steps, err_a, err_e))
        print(f"{spec}: h={mesh.h:.4f} err_A={err_a:.6e} err_E={err_e:.6e}",
              file=sys.stderr)
    lines = ["mesh,h,dt,err_A,err_E,rate_A,rate_E"]
    for i, (spec, h, dt, ea, ee) in enumerate(results):
        if i == 0:
            ra = re = ""
        else:
            h_prev = results[i - 1][1]
            if abs(math.log(h_prev / h)) < 1e-12:
                ra = re = "nan"  # identical mesh sizes: rate undefined
                print(f"warning: rate undefined between {results[i-1][0]} and {spec}",
                      file=sys.stderr)
            else:
                den = math.log(h_prev / h)
                ra = f"{math.log(results[i - 1][3] / ea) / den:.4f}"
                re = f"{math.log(results[i - 1][4] / ee) / den:.4f}"
        lines.append(f"{spec},{h:.6g},{dt:.6g},{ea:.12e},{ee:.12e},{ra},{re}")
    _write(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_plot(args) -> int:
    from . import plots

    written = []
    if args.diagnostics:
        written += plots.plot_diagnostics(args.diagnostics, args.outdir)
    if args.rates:
        written += plots.plot_rates(args.rates, args.outdir)
    if not written:
        raise ValueError("nothing to plot: pass --diagnostics and/or --rates")
    for w in written:
        print(w)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ddrym",
        description="Yang-Mills/Maxwell evolution on polyhedral discrete de Rham complexes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run one scheme and write diagnostics CSV")
    p.add_argument("--mesh", required=True, help="cubic:N or polymesh file path")
    _add_common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("converge", help="manufactured convergence study")
    p.add_argument("--mesh", action="append", required=True,
                   help="mesh spec; repeat or comma-separate for the sequence")
    _add_common(p)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("plot", help="render figures from CSV outputs")
    p.add_argument("--diagnostics", help="diagnostics CSV from 'solve'")
    p.add_argument("--rates", help="rate table CSV from 'converge'")
    p.add_argument("--outdir", default=".", help="directory for the PNG files")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MeshError, SolverError, NewtonError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""``meshdenoise`` command line: noise, denoise, sweep, sinkhorn-demo, icosphere.

Exit status: 0 on success, 1 on usage errors, 2 on data errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field

import numpy as np

from . import transport as ot
from .bench import (DEFAULT_REPEATS, METHODS, SweepGrid, SweepReport, _fmt, default_grid,
                    run_method, run_sweep, time_method)
from .graph import MeshGraph
from .mesh import MeshFormatError, geodesic_sphere, icosphere, read_mesh, write_mesh
from .noise import NoiseParams, add_normal_noise, snr

log = logging.getLogger("meshdenoise")

EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ":" in part:
                a, b, *step = (int(x) for x in part.split(":"))
                out.extend(range(a, b + 1, step[0] if step else 1))
            else:
                out.append(int(part))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected integers or a:b[:step] ranges, got {text!r}")
    return out


@dataclass
class RunConfig:
    input: str | None = None
    reference: str | None = None
    rho: float = 0.0
    seed: int = 0
    methods: list[str] = field(default_factory=list)
    iters: list[int] | None = None
    taus: list[float] | None = None
    mus: list[float] | None = None
    repeats: int = DEFAULT_REPEATS
    out: str | None = None
    format: str = "csv"

    def __post_init__(self):
        if not self.rho >= 0:
            raise UsageError("--rho must be >= 0")
        if self.repeats < 1:
            raise UsageError("--repeats must be >= 1")


def _config(args) -> RunConfig:
    methods = getattr(args, "method", None) or []
    return RunConfig(input=args.input, reference=getattr(args, "reference", None),
                     rho=getattr(args, "rho", 0.0), seed=getattr(args, "seed", 0),
                     methods=methods, iters=getattr(args, "iters", None),
                     taus=getattr(args, "tau", None), mus=getattr(args, "mu", None),
                     repeats=getattr(args, "repeats", DEFAULT_REPEATS), out=args.out,
                     format=getattr(args, "format", "csv"))


def _load(path):
    if path is None:
        raise UsageError("--input is required")
    try:
        return read_mesh(path)
    except (MeshFormatError, UnicodeDecodeError) as exc:
        raise DataError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror or exc}") from exc


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _noisy_and_reference(cfg: RunConfig):
    if cfg.reference:
        noisy, ref = _load(cfg.input), _load(cfg.reference)
        if noisy.n_vertices != ref.n_vertices or not np.array_equal(noisy.faces, ref.faces):
            raise DataError("noisy and reference meshes differ in connectivity")
    else:
        ref = _load(cfg.input)
        noisy = add_normal_noise(ref, params=NoiseParams(cfg.rho, cfg.seed))
    return noisy, ref


# ---------------------------------------------------------------------------
# subcommands

def cmd_noise(cfg: RunConfig) -> int:
    mesh = _load(cfg.input)
    noisy = add_normal_noise(mesh, params=NoiseParams(cfg.rho, cfg.seed))
    if cfg.out:
        write_mesh(noisy, cfg.out)
    print(f"snr_db {_fmt(snr(noisy.vertices, mesh.vertices))}")
    return 0


def _grid_for(method: str, cfg: RunConfig, single: bool = False) -> SweepGrid:
    base = default_grid(method)
    try:
        if method == "filter":
            return SweepGrid("filter", iterations=tuple(cfg.iters or base.iterations))
        if method == "heat":
            return SweepGrid("heat", taus=tuple(cfg.taus or base.taus),
                             iterations=tuple(cfg.iters or base.iterations))
        return SweepGrid("sobolev", mus=tuple(cfg.mus or base.mus))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_denoise(cfg: RunConfig) -> int:
    if len(cfg.methods) != 1:
        raise UsageError("denoise needs exactly one --method")
    method = cfg.methods[0]
    need = {"filter": ("iters",), "heat": ("taus", "iters"), "sobolev": ("mus",)}[method]
    for name in need:
        vals = getattr(cfg, name)
        if not vals or len(vals) != 1:
            flag = {"iters": "--iters", "taus": "--tau", "mus": "--mu"}[name]
            raise UsageError(f"{method} needs a single {flag} value")
    grid = _grid_for(method, cfg)
    noisy, ref = _noisy_and_reference(cfg)
    graph = MeshGraph.from_mesh(noisy)
    params = grid.configurations()[0]
    Y = run_method(method, noisy.vertices, graph, params)
    if cfg.out:
        write_mesh(noisy.with_vertices(Y), cfg.out)
    report = run_sweep(noisy.vertices, ref.vertices, graph, [grid], repeats=cfg.repeats)
    report.meta["noisy_snr_db"] = _fmt(snr(noisy.vertices, ref.vertices))
    sys.stdout.write(report.to_json() if cfg.format == "json" else report.to_csv())
    return 0


def cmd_sweep(cfg: RunConfig) -> int:
    methods = cfg.methods or list(METHODS)
    grids = [_grid_for(m, cfg) for m in methods]
    noisy, ref = _noisy_and_reference(cfg)
    graph = MeshGraph.from_mesh(noisy)
    report = run_sweep(noisy.vertices, ref.vertices, graph, grids, repeats=cfg.repeats)
    report.meta.update(rho=cfg.rho, seed=cfg.seed,
                       noisy_snr_db=_fmt(snr(noisy.vertices, ref.vertices)))
    _emit(report.to_json() if cfg.format == "json" else report.to_csv(), cfg.out)
    for m, best in report.best_per_method().items():
        p2 = f" {best.param2_name}={_fmt(best.param2_value)}" if best.param2_name else ""
        print(f"best {m}: {best.param_name}={_fmt(best.param_value)}{p2} "
              f"snr_db={_fmt(best.snr_db)}", file=sys.stderr)
    return 0


def _read_points_csv(path):
    """Rows ``set,weight,x0[,x1,...]`` with set in {source, target}."""
    pts = {"source": ([], []), "target": ([], [])}
    try:
        with open(path, newline="") as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if not row or row[0].startswith("#") or row[0] == "set":
                    continue
                if row[0] not in pts or len(row) < 3:
                    raise DataError(f"{path}:{lineno}: expected set,weight,coords...")
                pts[row[0]][0].append(float(row[1]))
                pts[row[0]][1].append([float(x) for x in row[2:]])
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror or exc}") from exc
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    (wa, xa), (wb, xb) = pts["source"], pts["target"]
    if not wa or not wb:
        raise DataError(f"{path}: need both source and target points")
    wa, wb = np.array(wa), np.array(wb)
    return np.array(xa), wa / wa.sum(), np.array(xb), wb / wb.sum()


def cmd_sinkhorn_demo(args) -> int:
    if args.input:
        X, mu, Y, nu = _read_points_csv(args.input)
    else:
        if args.size < 1:
            raise UsageError("--size must be >= 1")
        rng = np.random.default_rng(args.seed)
        X, Y = rng.random((args.size, 2)), rng.random((args.size, 2))
        mu = nu = ot.uniform(args.size)
    if X.shape[1] != Y.shape[1]:
        raise DataError("source and target points differ in dimension")
    c = np.linalg.norm(X[:, None, :] - Y[None, :, :], axis=2) ** args.p
    n = mu.shape[0]
    optimum = None
    if (n == nu.shape[0] and n <= ot.MONGE_MAX_N and np.allclose(mu, 1 / n)
            and np.allclose(nu, 1 / n)):
        perm, total = ot.monge_bruteforce(c)
        optimum = {"permutation": list(perm), "cost": total / n}
    cmax = float(c.max())
    runs = []
    for rel in args.eps:
        eps = rel * cmax if cmax > 0 else rel
        try:
            state, plan = ot.sinkhorn_log(mu, nu, c, eps, args.max_iters, args.tol)
        except (ValueError, ot.SinkhornError) as exc:
            raise DataError(str(exc)) from exc
        runs.append({
            "eps_rel": rel, "epsilon": eps, "iterations": state.iterations_run,
            "converged": state.converged, "plan_cost": ot.transport_cost(plan, c),
            "final_residuals": [plan.row_marginal_error, plan.col_marginal_error],
            "residual_history": [list(r) for r in state.residual_history],
        })
    doc = {"n_source": int(mu.shape[0]), "n_target": int(nu.shape[0]), "p": args.p,
           "monge": optimum, "runs": runs}
    if args.format == "json":
        text = json.dumps(doc, indent=2)
    else:
        lines = ["eps_rel,epsilon,iterations,converged,plan_cost,row_residual,col_residual,"
                 "monge_cost"]
        for r in runs:
            lines.append(",".join([_fmt(r["eps_rel"]), _fmt(r["epsilon"]), str(r["iterations"]),
                                   str(r["converged"]).lower(), _fmt(r["plan_cost"]),
                                   _fmt(r["final_residuals"][0]), _fmt(r["final_residuals"][1]),
                                   "" if optimum is None else _fmt(optimum["cost"])]))
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return 0


def cmd_icosphere(args) -> int:
    if args.frequency is not None:
        if args.frequency < 1:
            raise UsageError("--frequency must be >= 1")
        mesh = geodesic_sphere(args.frequency)
    else:
        if args.subdivisions < 0:
            raise UsageError("--subdivisions must be >= 0")
        mesh = icosphere(args.subdivisions)
    if not args.out:
        raise UsageError("--out is required")
    write_mesh(mesh, args.out)
    print(f"{mesh.n_vertices} vertices, {mesh.n_faces} faces")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="meshdenoise", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, noise=True, grid=True):
        sp.add_argument("--input", help="mesh file (.off or .obj)")
        sp.add_argument("--out", help="output path")
        if noise:
            sp.add_argument("--rho", type=float, default=0.0, help="noise amplitude (model units)")
            sp.add_argument("--seed", type=int, default=0)
        if grid:
            sp.add_argument("--reference", help="original mesh; --input is then the noisy mesh")
            sp.add_argument("--method", action="append", choices=METHODS)
            sp.add_argument("--iters", type=_int_list, help="e.g. 0:60 or 5,10,40")
            sp.add_argument("--tau", type=_float_list)
            sp.add_argument("--mu", type=_float_list)
            sp.add_argument("--repeats", type=int, default=DEFAULT_REPEATS)
            sp.add_argument("--format", choices=("csv", "json"), default="csv")

    common(sub.add_parser("noise", help="displace vertices along normals"), grid=False)
    common(sub.add_parser("denoise", help="run one method with fixed parameters"))
    common(sub.add_parser("sweep", help="sweep parameters, report SNR and timing"))

    sd = sub.add_parser("sinkhorn-demo", help="entropic OT on a small point problem")
    sd.add_argument("--input", help="CSV rows: set,weight,x0[,x1,...]")
    sd.add_argument("--size", type=int, default=7)
    sd.add_argument("--seed", type=int, default=0)
    sd.add_argument("--p", type=float, default=2.0)
    sd.add_argument("--eps", type=_float_list, default=[1.0, 0.1, 0.01],
                    help="regularization as fractions of the largest cost")
    sd.add_argument("--tol", type=float, default=ot.DEFAULT_TOL)
    sd.add_argument("--max-iters", type=int, default=ot.DEFAULT_MAX_ITERS)
    sd.add_argument("--out")
    sd.add_argument("--format", choices=("csv", "json"), default="csv")

    ic = sub.add_parser("icosphere", help="write a unit icosphere mesh")
    ic.add_argument("--subdivisions", type=int, default=3)
    ic.add_argument("--frequency", type=int, help="edge split count (overrides --subdivisions)")
    ic.add_argument("--out")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "sinkhorn-demo":
            return cmd_sinkhorn_demo(args)
        if args.command == "icosphere":
            return cmd_icosphere(args)
        cfg = _config(args)
        return {"noise": cmd_noise, "denoise": cmd_denoise, "sweep": cmd_sweep}[args.command](cfg)
    except UsageError as exc:
        print(f"meshdenoise: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"meshdenoise: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"meshdenoise: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

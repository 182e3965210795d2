"""Command-line driver.

Exit codes: 0 success, 2 validation failure (bad config or inadmissible
input), 3 numerical-tolerance failure.
"""

import argparse
import csv
import hashlib
import json
import logging
import platform
import sys
import time
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
import scipy

from . import __version__, _backend
from . import hardy, lp_transform, maximal, partition
from .dilation import check_norm_properties, validate_matrix
from .errors import ConfigError, NumericalError
from .gfa import save_function, write_gfa
from .grid import GridFunction, PeriodicGrid, lattice_rho
from .symbols import make_symbol

log = logging.getLogger("parabolic_lp")

COMMANDS = ("validate", "rho-table", "partition", "transform", "reconstruct", "gfunc", "maximal", "atoms",
            "equivalence", "constants")

EXIT_OK, EXIT_VALIDATION, EXIT_TOLERANCE = 0, 2, 3


class ToleranceFailure(NumericalError):
    pass


def load_schema():
    return json.loads(resources.files("parabolic_lp").joinpath("config.schema.json").read_text())


def load_config(path):
    cfg = {}
    if path is not None:
        try:
            cfg = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(cfg, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(map(str, exc.absolute_path)) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None
    return cfg


def config_hash(cfg):
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


# -- run context -----------------------------------------------------------------

class Run:
    """Resolved configuration plus the output bookkeeping of one command."""

    def __init__(self, cfg, out, seed):
        self.cfg = cfg
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.seed = seed
        self.outputs = []
        self.summary = {}

    def group(self):
        return validate_matrix(self.cfg.get("matrix", [[1.0, 0.0], [0.0, 2.0]]))

    def grid(self, group):
        g = self.cfg.get("grid", {})
        n = g.get("n", group.n)
        if n != group.n:
            raise ConfigError(f"grid.n={n} but the matrix is {group.n}x{group.n}")
        return PeriodicGrid(n, L=g.get("L", 16.0), N=g.get("N", 0))

    def symbol(self):
        s = self.cfg.get("symbol", {"id": "heat"})
        return make_symbol(s["id"], **s.get("params", {}))

    def partition(self, sym, group, grid=None):
        cover = partition.find_interval_cover(sym, group)
        return partition.build_partition(sym, group, cover, b=self.cfg.get("b"), grid=grid)

    def window(self, sym, group, grid, b):
        w = self.cfg.get("window", {})
        auto = lp_transform.window_for(grid, group, b, lp_transform.effective_support(sym, group), w.get("K", 8))
        return lp_transform.ScaleWindow(b, w.get("j_min", auto.j_min), w.get("j_max", auto.j_max), auto.K)

    def exponent(self, key, default):
        return self.cfg.get("exponents", {}).get(key, default)

    def path(self, name):
        p = self.out / name
        self.outputs.append(name)
        return p

    def csv(self, name, header, rows):
        with open(self.path(name), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])

    def json(self, name, obj):
        self.path(name).write_text(json.dumps(obj, sort_keys=True, indent=2, default=_plain) + "\n")

    def gfa(self, name, f, sidecar=None):
        save_function(self.path(name), f, sidecar)
        if sidecar is not None:
            self.outputs.append(name + ".json")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (list, tuple, np.ndarray)):
        return " ".join(_fmt(x) for x in v)
    return str(v)


def _plain(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _require(ok, message):
    if not ok:
        raise ToleranceFailure(message)


# -- commands ----------------------------------------------------------------------

def cmd_validate(run):
    group = run.group()
    report = check_norm_properties(group, run.cfg.get("samples", 10000), run.seed)
    report_dual = check_norm_properties(group, run.cfg.get("samples", 10000), run.seed, dual=True)
    run.json("validate.json", {"P": group.P, "gamma": group.gamma, "kappa": group.kappa,
                               "diagonalizable": group.diagonalizable, "rho": report, "rho_star": report_dual})
    run.summary = {"gamma": group.gamma, "kappa": group.kappa}
    _require(report["passed"] and report_dual["passed"], "norm properties violated beyond 1e-9")


def cmd_rho_table(run):
    group = run.group()
    pts = run.cfg.get("points")
    if pts is None:
        rng = np.random.default_rng(run.seed)
        pts = rng.standard_normal((run.cfg.get("samples", 20), group.n)) * 3
    pts = np.asarray(pts, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != group.n:
        raise ConfigError(f"points must be rows of length {group.n}")
    r = group.rho(pts)
    rs = group.rho(pts, dual=True)
    header = [f"x{i + 1}" for i in range(group.n)] + ["rho", "rho_star"]
    run.csv("rho_table.csv", header, [list(p) + [a, b] for p, a, b in zip(pts, r, rs)])


def cmd_partition(run):
    group = run.group()
    grid = run.grid(group)
    sym = run.symbol()
    pou = run.partition(sym, group, grid)
    jr = lp_transform.window_for(grid, group, pou.b, (pou.r1, pou.r2))
    js = range(jr.j_min, jr.j_max + 1)
    total = partition.partition_sum(pou, grid, js)
    mask = partition.covered_mask(pou, grid, js)
    residual = float(np.abs(total[mask] - 1).max())
    xi, rs = grid.frequencies(), lattice_rho(grid, group, True)
    side = {**pou.sidecar(), "window": [jr.j_min, jr.j_max], "residual": residual, "grid": list(grid.key)}
    write_gfa(run.path("eta_hat.gfa"), pou.eta_hat(xi, rs), grid.L, grid.n, side)
    run.outputs.append("eta_hat.gfa.json")
    write_gfa(run.path("zeta_hat.gfa"), pou.zeta_hat(xi, rs), grid.L, grid.n)
    run.summary = {"residual": residual, "psi_floor": pou.psi_floor, "c": pou.c, "b": pou.b}
    _require(residual <= 1e-8, f"partition residual {residual:.3g} > 1e-8")
    _require(pou.psi_floor >= 0.9 * pou.c, "Psi floor below 0.9 c")


def _test_function(run, group, grid, lo=0.5, hi=3.0):
    return lp_transform.band_limited_noise(grid, group, lo, hi, run.seed)


def cmd_transform(run):
    group = run.group()
    grid = run.grid(group)
    sym = run.symbol()
    pou = run.partition(sym, group)
    window = run.window(sym, group, grid, pou.b)
    window = lp_transform.ScaleWindow(window.b, window.j_min, window.j_max, 1)
    f = _test_function(run, group, grid)
    c = lp_transform.analyze(f, sym, group, window)
    side = {"symbol": sym.name, "b": window.b, "j_min": window.j_min, "j_max": window.j_max,
            "grid": list(grid.key), "seed": run.seed}
    write_gfa(run.path("coefficients.gfa"), c.coeffs, grid.L, grid.n, side)
    run.outputs.append("coefficients.gfa.json")
    run.gfa("f.gfa", f)
    run.summary = {"scales": len(c.nodes)}


def cmd_reconstruct(run):
    group = run.group()
    grid = run.grid(group)
    sym = run.symbol()
    pou = run.partition(sym, group)
    window = lp_transform.window_for(grid, group, pou.b, (pou.r1, pou.r2))
    f = _test_function(run, group, grid)
    rec = lp_transform.synthesize(lp_transform.analyze(f, sym, group, window), pou, group)
    err = float(np.linalg.norm(rec.samples - f.samples) / np.linalg.norm(f.samples))
    run.gfa("f.gfa", f)
    run.gfa("reconstruction.gfa", GridFunction(grid, rec.samples.real), {"relative_l2_error": err, **window.as_dict()})
    run.json("reconstruct.json", {"relative_l2_error": err, "window": window.as_dict(), "symbol": sym.name})
    run.summary = {"relative_l2_error": err}
    _require(err <= 1e-6, f"reconstruction error {err:.3g} > 1e-6")


def cmd_gfunc(run):
    group = run.group()
    grid = run.grid(group)
    sym = run.symbol()
    pou = run.partition(sym, group)
    window = run.window(sym, group, grid, pou.b)
    f = _test_function(run, group, grid)
    discrete = lp_transform.ScaleWindow(window.b, window.j_min, window.j_max, 1)
    gd = lp_transform.g_discrete(lp_transform.analyze(f, sym, group, discrete)).samples.ravel()
    gc = lp_transform.g_continuous(f, sym, group, window).samples.ravel()
    run.csv("gfunc.csv", ["point_id", "g_discrete", "g_continuous"], zip(range(gd.size), gd, gc))
    run.json("gfunc.json", {"symbol": sym.name, "window": window.as_dict(), "grid": list(grid.key),
                            "seed": run.seed})


def cmd_maximal(run):
    group = run.group()
    grid = run.grid(group)
    f = _test_function(run, group, grid)
    radii = maximal.default_radii(grid)
    Phi = make_symbol(run.cfg.get("mollifier", "mollifier"))
    s_grid = maximal.geometric_grid(2.0**-4, 2.0**4, 0.5, 2)
    p = run.exponent("p", 1.0)
    w = run.cfg.get("weight", {})
    weight = maximal.Weight(maximal.power_weight(grid, group, w.get("a", 0.3), w.get("reg", 1e-3)), w.get("p", 2.0))
    ap = maximal.ap_constant(weight, weight.p, group, grid, radii)
    run.gfa("f.gfa", f)
    run.gfa("hl_max.gfa", maximal.hl_max(f, group, radii))
    run.gfa("grand_max.gfa", maximal.grand_max(f, Phi, group, s_grid))
    summary = {"ap_constant": ap, "weight": {"a": w.get("a", 0.3), "reg": w.get("reg", 1e-3), "p": weight.p},
               "hp_quasinorm": maximal.hp_quasinorm(f, Phi, group, min(p, 1.0), s_grid),
               "s_grid_refinement_delta": maximal.refinement_delta(f, Phi, group, min(p, 1.0), s_grid),
               "mollifier": Phi.name, "radii": radii, "s_grid": s_grid}
    run.json("maximal.json", summary)
    run.summary = {"ap_constant": ap}


def cmd_atoms(run):
    group = run.group()
    grid = run.grid(group)
    a = run.cfg.get("atoms", {})
    count = a.get("count", 50)
    radii = a.get("radii", [1.0, 1.5, 2.0])
    p = run.exponent("p", 1.0)
    sym = run.symbol()
    pou = run.partition(sym, group)
    window = hardy.lattice_window(sym, group, grid, pou.b)
    rng = np.random.default_rng(run.seed)
    rows, failures = [], 0
    for i in range(count):
        r = float(radii[i % len(radii)])
        atom = hardy.make_atom(int(rng.integers(2**31)), (np.zeros(group.n), r), p, group, grid)
        rep = atom.report
        failures += not rep["passed"]
        rows.append([i, p, r, atom.M, rep["max_moment_residual"], rep["sup_ratio"], rep["support_residual"],
                     int(rep["passed"]), hardy.g_norm(atom.samples, sym, group, window, p), sym.name, pou.b])
    run.csv("atoms.csv", ["atom_id", "p", "radius", "M", "max_moment_residual", "sup_ratio", "support_residual",
                          "passed", "g_norm", "symbol", "b"], rows)
    run.summary = {"count": count, "failures": failures}
    _require(failures == 0, f"{failures} atoms failed validation")


def cmd_equivalence(run):
    group = run.group()
    sym = run.symbol()
    pou = run.partition(sym, group)
    fam_cfg = run.cfg.get("family", {})
    family = hardy.wave_packet_family(group, fam_cfg.get("count", 30), run.seed)
    L = run.cfg.get("grid", {}).get("L", 16.0)
    p = run.exponent("p", 1.0)
    Phi = make_symbol(run.cfg.get("mollifier", "mollifier"))
    rep = hardy.equivalence_experiment(sym, group, pou, p, family, Phi=Phi,
                                       resolutions=tuple(fam_cfg.get("resolutions", [128, 256])), L=L)
    keys = ["function_id", "p", "hp_quasinorm", "g_norm", "ratio", "resolution", "symbol", "b", "j_min", "j_max", "L"]
    run.csv("equivalence.csv", keys, ([r[k] for k in keys] for r in rep["rows"]))
    summary = {k: rep[k] for k in ("c1", "c2", "spread", "max_drift", "excluded")}
    summary["family"] = [m.spec for m in family]
    run.json("equivalence.json", summary)
    run.summary = {k: rep[k] for k in ("c1", "c2", "max_drift")}
    _require(not rep["excluded"], f"family members {rep['excluded']} have a vanishing H^p quasi-norm")
    _require(0 < rep["c1"] <= rep["c2"] < np.inf, "degenerate equivalence ratios")
    _require(rep["max_drift"] <= 0.05, f"ratio drift {rep['max_drift']:.3g} > 5%")


def cmd_constants(run):
    group = run.group()
    sym = run.symbol()
    pou = run.partition(sym, group)
    c = run.cfg.get("constants", {})
    Lw = c.get("Lw", 0.0)
    rows = []
    for j in partition.constant_window(pou, span=c.get("span", 40)):
        C = partition.transition_constant(sym, pou, group, j, Lw)
        rows.append([j, C, pou.b ** (-j), C * pou.b ** (-j)])
    D = [partition.lowpass_constant(pou, group, k, Lw) for k in range(group.n)]
    run.csv("constants.csv", ["j", "C_psi_j_L", "b_pow_neg_j", "product"], rows)
    prods = np.array([r[3] for r in rows])
    run.json("constants.json", {"D": D, "sup_product": float(prods.max()), "symbol": sym.name, "b": pou.b, "Lw": Lw})
    run.summary = {"sup_product": float(prods.max()), "D": D}
    _require(np.all(np.isfinite(prods)) and np.all(np.isfinite(D)), "non-finite constants")


HANDLERS = {
    "validate": cmd_validate, "rho-table": cmd_rho_table, "partition": cmd_partition, "transform": cmd_transform,
    "reconstruct": cmd_reconstruct, "gfunc": cmd_gfunc, "maximal": cmd_maximal, "atoms": cmd_atoms,
    "equivalence": cmd_equivalence, "constants": cmd_constants,
}


# -- entry point ---------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="parabolic-lp", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON run configuration (see config.schema.json)")
    ap.add_argument("--out", help="output directory (default: config 'out' or ./out)")
    ap.add_argument("--seed", type=int, help="overrides the config seed")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for per-scale FFTs")
    ap.add_argument("--verbose", action="store_true")
    return ap


def run_command(name, cfg, out, seed=None, threads=1):
    """Execute one command; returns ``(exit_code, manifest)``."""
    seed = cfg.get("seed", 0) if seed is None else seed
    lp_transform.set_threads(threads)
    run = Run(cfg, out, seed)
    start = time.time()
    status, message = EXIT_OK, "ok"
    try:
        HANDLERS[name](run)
    except ValueError as exc:  # ValidationError and plain argument errors
        status, message = EXIT_VALIDATION, f"{type(exc).__name__}: {exc}"
    except NumericalError as exc:
        status, message = EXIT_TOLERANCE, f"{type(exc).__name__}: {exc}"
    manifest = {
        "command": name, "exit_code": status, "message": message, "config": cfg, "config_hash": config_hash(cfg),
        "seed": seed, "threads": threads, "outputs": run.outputs, "summary": run.summary,
        "versions": {"parabolic_lp": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version(), "backend": _backend.NAME},
        "started": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime(start)), "wall_time": time.time() - start,
    }
    (run.out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2, default=_plain) + "\n")
    return status, manifest


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    out = args.out or cfg.get("out", "out")
    status, manifest = run_command(args.command, cfg, out, args.seed, args.threads)
    if status != EXIT_OK:
        print(f"error: {manifest['message']}", file=sys.stderr)
    elif args.verbose:
        print(json.dumps(manifest["summary"], sort_keys=True, default=_plain))
    return status


if __name__ == "__main__":
    sys.exit(main())

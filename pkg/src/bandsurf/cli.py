"""Command-line front end.

Every subcommand resolves its settings from built-in defaults, then an
optional ``--config`` JSON file (a previous run's manifest.json works too),
then explicit flags, and writes the resolved settings to
``<out-dir>/manifest.json`` so the run can be repeated exactly.

Exit codes: 0 success, 1 usage or unreadable input, 2 domain error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .cloud import (
    PointCloud,
    fmt,
    read_cloud_csv,
    read_columns_csv,
    write_cloud_csv,
    write_columns_csv,
    wrap,
)
from .denoise import IrlsConfig, irls
from .errors import BandsurfError, DomainError, NumericalError, ParseError
from .funcrep import AnchorModel, fit_outputs, select_anchors
from .lifting import KernelConfig
from .recovery import (
    DEFAULT_TOL,
    PhaseConfig,
    SosSurface,
    nullspace,
    phase_transition,
    recover_minimal,
    write_phase_table,
)
from .support import SupportSet, parse_shape, shift_complement
from .trigpoly import (
    TrigPolynomial,
    _grid,
    multiply,
    random_poly_with_zero_set,
    sample_zero_set,
)

log = logging.getLogger("bandsurf")

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_NUMERIC = 0, 1, 2, 3

COMMON = {"seed": 0, "out_dir": ".", "tol": DEFAULT_TOL}

DEFAULTS = {
    "sample": {"support": "3x3", "poly": None, "product": None, "per_component": None,
               "n": 100, "noise": 0.0, "out": "cloud.csv", "poly_out": "poly.json"},
    "recover": {"cloud": None, "gamma": None, "lam": None, "out": "model.json",
                "grid": 64, "grid_out": "grid.csv"},
    "denoise": {"cloud": None, "kernel": None, "lam": 0.8, "iters": 3, "inner": 10,
                "eta": 1.5, "gamma0": None, "step": 0.5, "out": "clean.csv",
                "log": "metrics.csv"},
    "fit-fn": {"train": None, "anchors": None, "kernel": None, "ridge": 0.0,
               "method": "features", "out": "model.json"},
    "eval-fn": {"model": None, "points": None, "out": "y.csv"},
    "select-anchors": {"cloud": None, "poly": None, "count": None, "strategy": "random",
                       "kernel": None, "pool_factor": 20, "out": "anchors.csv"},
    "phase-transition": {"factors": ["3x3"], "gamma": None, "counts": None,
                         "per_component": None, "trials": 100, "heldout": 200,
                         "residual_tol": 1e-8, "workers": 1, "out": "table.csv"},
}

REQUIRED = {
    "recover": ["cloud"],
    "denoise": ["cloud", "kernel"],
    "fit-fn": ["train", "anchors", "kernel"],
    "eval-fn": ["model", "points"],
    "select-anchors": ["count"],
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ---------------------------------------------------------------------------
# support, kernel and list parsing helpers


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from None


def kernel_from_spec(spec) -> KernelConfig:
    """A shape string ("7x7"), a JSON file path or an inline dict."""
    if spec is None:
        raise DomainError("a support/kernel specification is required")
    if isinstance(spec, KernelConfig):
        return spec
    if isinstance(spec, dict):
        data = spec
    elif isinstance(spec, str) and os.path.exists(spec):
        data = _load_json(spec)
        if isinstance(data, str):
            return KernelConfig.shape([int(v) for v in data.lower().split("x")])
    elif isinstance(spec, str):
        sup = parse_shape(spec)
        lo, hi = sup.bounds()
        return KernelConfig.rect(lo, hi)
    else:
        raise DomainError(f"cannot interpret support specification {spec!r}")
    try:
        if "freqs" in data:
            return KernelConfig("explicit", explicit=SupportSet.from_dict(data))
        return KernelConfig.from_dict(data)
    except (KeyError, TypeError) as exc:
        raise ParseError(f"bad support specification: missing or malformed {exc}") from None


def support_from_spec(spec) -> SupportSet:
    return kernel_from_spec(spec).support


def _int_list(value):
    if value is None:
        return None
    if isinstance(value, str):
        return [int(v) for v in value.replace(";", ",").split(",") if v.strip()]
    return [int(v) for v in value]


def _groups(value):
    """"8,16;7,17" or [[8, 16], [7, 17]] -> list of int lists."""
    if value is None:
        return None
    if isinstance(value, str):
        return [_int_list(g) for g in value.split(";") if g.strip()]
    return [_int_list(g) for g in value]


def _spec_list(value):
    if isinstance(value, str):
        return [v.strip() for v in value.split(",") if v.strip()]
    return list(value)


def _out(cfg, name):
    path = cfg[name]
    return path if os.path.isabs(path) else os.path.join(cfg["out_dir"], path)


def _write_json(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# commands


def cmd_sample(cfg):
    rng = np.random.default_rng(cfg["seed"])
    if cfg["product"]:
        factors = [support_from_spec(s) for s in _spec_list(cfg["product"])]
        counts = _int_list(cfg["per_component"]) or [cfg["n"] // len(factors)] * len(factors)
        if len(counts) != len(factors):
            raise DomainError("--per-component needs one count per factor")
        polys = [random_poly_with_zero_set(f, rng) for f in factors]
        parts = [PointCloud(sample_zero_set(p, n, rng).points.reshape(-1, p.dims),
                            np.full(n, i)) for i, (p, n) in enumerate(zip(polys, counts))]
        cloud = PointCloud.concat(parts)
        prod = polys[0]
        for p in polys[1:]:
            prod = multiply(prod, p)
        doc = {"product": prod.to_dict(), "factors": [p.to_dict() for p in polys]}
    else:
        if cfg["poly"]:
            poly = _poly_from_spec(cfg["poly"])
        else:
            poly = random_poly_with_zero_set(support_from_spec(cfg["support"]), rng)
        cloud = sample_zero_set(poly, int(cfg["n"]), rng)
        doc = poly.to_dict()
    if cfg["noise"]:
        noisy = wrap(cloud.points + cfg["noise"] * rng.standard_normal(cloud.points.shape))
        cloud = PointCloud(noisy, cloud.labels)
    write_cloud_csv(cloud, _out(cfg, "out"))
    _write_json(_out(cfg, "poly_out"), doc)
    log.info("wrote %d points", len(cloud))


def _poly_from_spec(spec) -> TrigPolynomial:
    data = spec if isinstance(spec, dict) else _load_json(spec)
    if "product" in data:
        data = data["product"]
    try:
        return TrigPolynomial.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad polynomial file: {exc}") from None


def _grid_csv(path, grid, columns):
    n = grid.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{i + 1}" for i in range(n)] + list(columns))
        vals = list(columns.values())
        for r, p in enumerate(grid):
            w.writerow([fmt(v) for v in p] + [fmt(v[r]) for v in vals])


def cmd_recover(cfg):
    cloud = read_cloud_csv(cfg["cloud"])
    if cfg["gamma"] is None and cfg["lam"] is None:
        raise UsageError("recover needs --gamma, --lambda or both")
    gamma = support_from_spec(cfg["gamma"] or cfg["lam"])
    lam = support_from_spec(cfg["lam"]) if cfg["lam"] else None
    grid = _grid(gamma.dims, int(cfg["grid"]))
    if lam is not None and lam == gamma:
        poly = recover_minimal(cloud, gamma, cfg["tol"]).real_aligned()
        vals = poly(grid)
        model = {"mode": "minimal", "polynomial": poly.to_dict()}
        cols = {"abs": np.abs(vals), "real": vals.real}
    else:
        basis = nullspace(cloud, gamma, cfg["tol"])
        if basis.dim == 0:
            raise DomainError("no annihilating polynomial at this tolerance")
        model = {"mode": "sos", "nullspace": basis.to_dict(), "null_dim": basis.dim}
        if lam is not None and lam.dims == gamma.dims:
            comp = shift_complement(gamma, lam)
            model["expected_null_dim"] = 0 if comp is None else len(comp)
        cols = {"gamma": SosSurface(basis).evaluate(grid)}
    model["samples"] = len(cloud)
    _write_json(_out(cfg, "out"), model)
    _grid_csv(_out(cfg, "grid_out"), grid, cols)


def cmd_denoise(cfg):
    cloud = read_cloud_csv(cfg["cloud"])
    icfg = IrlsConfig(kernel_from_spec(cfg["kernel"]), lam=float(cfg["lam"]),
                      iterations=int(cfg["iters"]), eta=float(cfg["eta"]),
                      gamma0=cfg["gamma0"], inner=int(cfg["inner"]), step=float(cfg["step"]))
    res = irls(cloud, icfg)
    write_cloud_csv(res.cloud, _out(cfg, "out"))
    cols = ["iteration", "objective", "surrogate", "mean_displacement", "gamma", "step_cost"]
    with open(_out(cfg, "log"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in res.history:
            w.writerow([row["iteration"]] + [fmt(row[c]) for c in cols[1:]])
    cfg["resolved_gamma0"] = res.gamma0


def cmd_fit_fn(cfg):
    X, Y = read_columns_csv(cfg["train"], ("x", "y"))
    anchors = read_cloud_csv(cfg["anchors"])
    if Y.shape[1] == 0:
        raise ParseError(f"{cfg['train']}: line 1: no y1..ym output columns")
    model = fit_outputs(X, Y.T, anchors, kernel_from_spec(cfg["kernel"]),
                        ridge=float(cfg["ridge"]), method=cfg["method"])
    _write_json(_out(cfg, "out"), model.to_dict())


def cmd_eval_fn(cfg):
    data = _load_json(cfg["model"])
    try:
        model = AnchorModel.from_dict(data)
    except (KeyError, TypeError) as exc:
        raise ParseError(f"{cfg['model']}: missing or malformed {exc}") from None
    pts = read_cloud_csv(cfg["points"]).points
    y = model(pts).T if len(pts) else np.zeros((0, model.F.shape[0]))
    cols = {"x": pts, "y": y.real}
    if np.iscomplexobj(y) and np.any(y.imag):
        cols["y_imag"] = y.imag
    write_columns_csv(_out(cfg, "out"), cols)


def cmd_select_anchors(cfg):
    if cfg["poly"]:
        source = _poly_from_spec(cfg["poly"])
    elif cfg["cloud"]:
        source = read_cloud_csv(cfg["cloud"])
    else:
        raise DomainError("select-anchors needs --poly or --cloud")
    kern = kernel_from_spec(cfg["kernel"]) if cfg["kernel"] else None
    A = select_anchors(source, int(cfg["count"]), cfg["strategy"], cfg["seed"],
                       kernel=kern, pool_factor=int(cfg["pool_factor"]))
    write_cloud_csv(A, _out(cfg, "out"))


def cmd_phase(cfg):
    factors = [support_from_spec(s) for s in _spec_list(cfg["factors"])]
    pc = _groups(cfg["per_component"])
    pcfg = PhaseConfig(
        factors=factors,
        gamma=support_from_spec(cfg["gamma"]) if cfg["gamma"] else None,
        counts=_int_list(cfg["counts"]) or [],
        per_component=pc,
        trials=int(cfg["trials"]), seed=int(cfg["seed"]), tol=float(cfg["tol"]),
        heldout=int(cfg["heldout"]), residual_tol=float(cfg["residual_tol"]),
        workers=int(cfg["workers"]),
    )
    table = phase_transition(pcfg)
    write_phase_table(table, _out(cfg, "out"), per_component=pc is not None)


COMMANDS = {
    "sample": cmd_sample,
    "recover": cmd_recover,
    "denoise": cmd_denoise,
    "fit-fn": cmd_fit_fn,
    "eval-fn": cmd_eval_fn,
    "select-anchors": cmd_select_anchors,
    "phase-transition": cmd_phase,
}


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = _Parser(prog="bandsurf", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"bandsurf {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def command(name, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", help="JSON settings file (a manifest.json is accepted)")
        p.add_argument("--seed", type=int, default=S)
        p.add_argument("--out-dir", dest="out_dir", default=S)
        p.add_argument("--tol", type=float, default=S, help="relative singular-value cut")
        p.add_argument("--out", default=S)
        return p

    p = command("sample", "draw points on the zero set of a random or given polynomial")
    p.add_argument("--support", default=S, help="shape such as 3x3, or a support JSON")
    p.add_argument("--poly", default=S, help="polynomial JSON to sample instead")
    p.add_argument("--product", default=S, help="comma-separated factor shapes, e.g. 3x3,3x3")
    p.add_argument("--per-component", dest="per_component", default=S)
    p.add_argument("--n", type=int, default=S)
    p.add_argument("--noise", type=float, default=S, help="Gaussian noise level")
    p.add_argument("--poly-out", dest="poly_out", default=S)

    p = command("recover", "recover a surface from a point cloud")
    p.add_argument("--cloud", default=S)
    p.add_argument("--gamma", default=S, help="lifting support (shape or JSON)")
    p.add_argument("--lambda", dest="lam", default=S,
                   help="minimal support; equal to --gamma for direct recovery")
    p.add_argument("--grid", type=int, default=S, help="grid points per axis")
    p.add_argument("--grid-out", dest="grid_out", default=S)

    p = command("denoise", "kernel low-rank IRLS denoising")
    p.add_argument("--cloud", default=S)
    p.add_argument("--kernel", default=S)
    p.add_argument("--lambda", dest="lam", type=float, default=S)
    p.add_argument("--iters", type=int, default=S)
    p.add_argument("--inner", type=int, default=S)
    p.add_argument("--eta", type=float, default=S)
    p.add_argument("--gamma0", type=float, default=S)
    p.add_argument("--step", type=float, default=S)
    p.add_argument("--log", default=S)

    p = command("fit-fn", "learn anchor outputs from training pairs")
    p.add_argument("--train", default=S, help="CSV with x1..xn and y1..ym")
    p.add_argument("--anchors", default=S)
    p.add_argument("--kernel", default=S)
    p.add_argument("--ridge", type=float, default=S)
    p.add_argument("--method", choices=["features", "kernel"], default=S)

    p = command("eval-fn", "evaluate an anchor model")
    p.add_argument("--model", default=S)
    p.add_argument("--points", default=S)

    p = command("select-anchors", "choose anchor points")
    p.add_argument("--cloud", default=S)
    p.add_argument("--poly", default=S)
    p.add_argument("--count", type=int, default=S)
    p.add_argument("--strategy", choices=["random", "greedy"], default=S)
    p.add_argument("--kernel", default=S)
    p.add_argument("--pool-factor", dest="pool_factor", type=int, default=S)

    p = command("phase-transition", "recovery success rate versus sample count")
    p.add_argument("--factors", default=S, help="comma-separated factor shapes")
    p.add_argument("--gamma", default=S)
    p.add_argument("--counts", default=S, help="comma-separated total sample counts")
    p.add_argument("--per-component", dest="per_component", default=S,
                   help="per-factor counts, rows separated by ';', e.g. 8,16;7,17")
    p.add_argument("--trials", type=int, default=S)
    p.add_argument("--heldout", type=int, default=S)
    p.add_argument("--residual-tol", dest="residual_tol", type=float, default=S)
    p.add_argument("--workers", type=int, default=S)
    return parser


def resolve(command, ns) -> dict:
    """defaults < --config file < explicit flags."""
    cfg = dict(COMMON)
    cfg.update(DEFAULTS[command])
    flags = {k: v for k, v in vars(ns).items() if k not in ("command", "config", "verbose")}
    if ns.config:
        data = _load_json(ns.config)
        if not isinstance(data, dict):
            raise ParseError(f"{ns.config}: expected a JSON object")
        if "command" in data and "config" in data:  # a manifest
            if data["command"] != command:
                raise UsageError(f"manifest is for '{data['command']}', not '{command}'")
            data = data["config"]
        data = {k.replace("-", "_"): v for k, v in data.items()}
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        unknown = set(data) - set(cfg) - {"resolved_gamma0"}
        if unknown:
            raise UsageError(f"unknown settings in {ns.config}: {', '.join(sorted(unknown))}")
        data.pop("resolved_gamma0", None)
        cfg.update(data)
    cfg.update(flags)
    missing = [k for k in REQUIRED.get(command, []) if cfg.get(k) is None]
    if missing:
        raise UsageError("missing required setting(s): " + ", ".join("--" + m for m in missing))
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = resolve(ns.command, ns)
        os.makedirs(cfg["out_dir"], exist_ok=True)
        COMMANDS[ns.command](cfg)
        _write_json(os.path.join(cfg["out_dir"], "manifest.json"),
                    {"command": ns.command, "version": __version__, "seed": cfg["seed"],
                     "config": cfg})
    except UsageError as exc:
        print(f"bandsurf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"bandsurf: parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"bandsurf: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (BandsurfError, ValueError) as exc:
        print(f"bandsurf: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except FileNotFoundError as exc:
        print(f"bandsurf: error: {exc.filename}: no such file", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

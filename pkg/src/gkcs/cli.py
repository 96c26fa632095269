"""Command-line front end.

Every subcommand reads an optional JSON config, applies command-line
overrides, validates everything up front and then writes plot-ready CSV or
JSON into ``--out``. Outputs are byte-identical for identical configs.

Exit codes: 0 success, 1 invalid configuration, 2 a verification check
failed, 3 a numerical routine did not converge.
"""

import argparse
import copy
import csv
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .model import (
    Gauge,
    SpectrumMode,
    alpha_bound,
    continuous_energy,
    derive_params,
    discrete_energy,
    phi_alpha,
)
from .specfun import ConvergenceError
from .states import (
    CutoffError,
    StateConfig,
    build_combined_cs,
    dumps_state,
    epsilon_grid,
)
from .verify import CHECK_GROUPS, SuiteSettings, Tolerances, reports_to_json, run_suite

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_CONVERGENCE = 0, 1, 2, 3

LABEL_NAMES = ("J", "gamma", "Jp", "gammap", "K", "theta", "beta")

DEFAULTS = {
    "params": {"m": 1.0, "hbar": 1.0, "e_charge": 1.0, "B": 1.0, "c": 1.0, "E_field": 1.0},
    "mode": "unshifted",
    "gauge": "gauge1",
    "fixed": "l",
    "fixed_value": 0,
    "cutoff": None,
    "tail_tol": 1e-12,
    "grid_nodes": 2000,
    "convention": "paper",
    "omega": None,
    "tolerances": {},
    "verify": {
        "resolution_cutoff": 20,
        "resolution_orders": [32, 64, 128],
        "moment_order": 64,
        "commutator_cutoff": 40,
        "laguerre_form": "corrected",
        "paper_measure": None,
        "workers": 1,
    },
    "labels": {"J": 1.0, "gamma": 0.0, "Jp": 0.5, "gammap": 0.0, "K": 1.0, "theta": 0.0, "beta": 0.0},
    "spectrum": {"n": [0, 2], "l": [0, 0], "alpha": [-1.0]},
    "wavefunction": {"alpha": -1.0, "x": [-1.0, 1.0, 5], "y": [-1.0, 1.0, 5]},
    "sweep": {"param": "J", "values": [0.5, 1.0, 2.0, 4.0], "workers": 1},
}


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field_name, message):
        super().__init__(f"config field '{field_name}': {message}")
        self.field = field_name


@dataclass
class RunConfig:
    params: object
    mode: SpectrumMode
    gauge: Gauge
    state: StateConfig
    omega: float
    tolerances: Tolerances
    verify: dict
    labels: dict
    spectrum: dict
    wavefunction: dict
    sweep: dict
    raw: dict = field(repr=False)


def _merge(base, override):
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def _number(value, name, positive=False, nonnegative=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(name, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(name, f"must be finite, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(name, f"expected an integer, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(name, f"must be positive, got {value!r}")
    if nonnegative and not value >= 0:
        raise ConfigError(name, f"must be nonnegative, got {value!r}")
    return int(value) if integer else float(value)


def _choice(value, name, choices):
    if value not in choices:
        raise ConfigError(name, f"expected one of {sorted(choices)}, got {value!r}")
    return value


def _int_range(value, name):
    if not isinstance(value, list) or len(value) != 2:
        raise ConfigError(name, "expected [first, last]")
    lo, hi = (_number(v, name, nonnegative=True, integer=True) for v in value)
    if hi < lo:
        raise ConfigError(name, f"last ({hi}) is below first ({lo})")
    return lo, hi


def _axis(value, name):
    if not isinstance(value, list) or len(value) != 3:
        raise ConfigError(name, "expected [start, stop, count]")
    start, stop = _number(value[0], name), _number(value[1], name)
    count = _number(value[2], name, positive=True, integer=True)
    return start, stop, count


def build_config(raw):
    """Validate a merged config dict into a :class:`RunConfig`."""
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown field")
    pr = raw["params"]
    if not isinstance(pr, dict):
        raise ConfigError("params", "expected an object")
    for key in pr:
        if key not in DEFAULTS["params"]:
            raise ConfigError(f"params.{key}", "unknown field")
    values = {}
    for key in DEFAULTS["params"]:
        values[key] = _number(pr[key], f"params.{key}", positive=key != "E_field",
                              nonnegative=key == "E_field")
    p = derive_params(**values)

    mode = SpectrumMode(_choice(raw["mode"], "mode", {m.value for m in SpectrumMode}))
    gauge = Gauge(_choice(raw["gauge"], "gauge", {g.value for g in Gauge}))
    fixed = _choice(raw["fixed"], "fixed", {"l", "n"})
    fixed_value = _number(raw["fixed_value"], "fixed_value", nonnegative=True, integer=True)
    cutoff = raw["cutoff"]
    if cutoff is not None:
        cutoff = _number(cutoff, "cutoff", positive=True, integer=True)
    tail_tol = raw["tail_tol"]
    if tail_tol is not None:
        tail_tol = _number(tail_tol, "tail_tol", positive=True)
    grid_nodes = _number(raw["grid_nodes"], "grid_nodes", integer=True)
    if grid_nodes < 3:
        raise ConfigError("grid_nodes", f"need at least 3 nodes, got {grid_nodes}")
    convention = _choice(raw["convention"], "convention", {"paper", "conjugate"})
    omega = raw["omega"]
    if omega is not None:
        omega = _number(omega, "omega")

    tol_raw = raw["tolerances"]
    if not isinstance(tol_raw, dict):
        raise ConfigError("tolerances", "expected an object")
    tolerances = Tolerances()
    for key, value in tol_raw.items():
        if not hasattr(tolerances, key):
            raise ConfigError(f"tolerances.{key}", "unknown tolerance name")
        tolerances = tolerances.override(**{key: _number(value, f"tolerances.{key}", nonnegative=True)})

    ver = raw["verify"]
    for key in ver:
        if key not in DEFAULTS["verify"]:
            raise ConfigError(f"verify.{key}", "unknown field")
    res_cut = _number(ver["resolution_cutoff"], "verify.resolution_cutoff", positive=True, integer=True)
    orders = ver["resolution_orders"]
    if not isinstance(orders, list) or len(orders) < 2:
        raise ConfigError("verify.resolution_orders", "expected a list of at least two orders")
    orders = tuple(_number(q, "verify.resolution_orders", positive=True, integer=True) for q in orders)
    if any(b != 2 * a for a, b in zip(orders, orders[1:])):
        raise ConfigError("verify.resolution_orders", "each order must double the previous one")
    com_cut = _number(ver["commutator_cutoff"], "verify.commutator_cutoff", integer=True)
    if com_cut < 3:
        raise ConfigError("verify.commutator_cutoff", f"must be >= 3, got {com_cut}")
    paper_measure = ver["paper_measure"]
    if paper_measure is not None:
        if not isinstance(paper_measure, list) or len(paper_measure) != 2:
            raise ConfigError("verify.paper_measure", "expected [mu, sigma] or null")
        paper_measure = tuple(_number(v, "verify.paper_measure") for v in paper_measure)
    verify = {
        "resolution_cutoff": res_cut,
        "resolution_orders": orders,
        "moment_order": _number(ver["moment_order"], "verify.moment_order", positive=True, integer=True),
        "commutator_cutoff": com_cut,
        "laguerre_form": _choice(ver["laguerre_form"], "verify.laguerre_form", {"printed", "corrected"}),
        "paper_measure": paper_measure,
        "workers": _number(ver["workers"], "verify.workers", positive=True, integer=True),
    }

    labels = {}
    for key in raw["labels"]:
        if key not in LABEL_NAMES:
            raise ConfigError(f"labels.{key}", "unknown label")
    for key in LABEL_NAMES:
        labels[key] = _number(raw["labels"][key], f"labels.{key}")
    for key in ("J", "Jp"):
        if labels[key] < 0:
            raise ConfigError(f"labels.{key}", f"must be nonnegative, got {labels[key]!r}")
    if not labels["K"] > 0:
        raise ConfigError("labels.K", f"must be positive, got {labels['K']!r}")
    if not 0.0 <= labels["beta"] < 2.0 * math.pi:
        raise ConfigError("labels.beta", f"must lie in [0, 2 pi), got {labels['beta']!r}")

    spec = raw["spectrum"]
    alphas = spec["alpha"]
    if not isinstance(alphas, list) or not alphas:
        raise ConfigError("spectrum.alpha", "expected a nonempty list")
    if mode is SpectrumMode.UNSHIFTED and p.lam == 0:
        raise ConfigError("params.E_field", "unshifted spectrum needs E_field > 0 for an alpha bound")
    spectrum = {
        "n": _int_range(spec["n"], "spectrum.n"),
        "l": _int_range(spec["l"], "spectrum.l"),
        "alpha": [_number(a, "spectrum.alpha") for a in alphas],
    }

    wf = raw["wavefunction"]
    wavefunction = {
        "alpha": _number(wf["alpha"], "wavefunction.alpha"),
        "x": _axis(wf["x"], "wavefunction.x"),
        "y": _axis(wf["y"], "wavefunction.y"),
    }

    sw = raw["sweep"]
    param = _choice(sw["param"], "sweep.param", set(LABEL_NAMES))
    if not isinstance(sw["values"], list) or not sw["values"]:
        raise ConfigError("sweep.values", "expected a nonempty list")
    sweep = {
        "param": param,
        "values": [_number(v, "sweep.values") for v in sw["values"]],
        "workers": _number(sw["workers"], "sweep.workers", positive=True, integer=True),
    }
    for v in sweep["values"]:
        trial = dict(labels, **{param: v})
        if trial["J"] < 0 or trial["Jp"] < 0 or not trial["K"] > 0 \
                or not 0.0 <= trial["beta"] < 2.0 * math.pi:
            raise ConfigError("sweep.values", f"value {v!r} is outside the domain of {param}")

    state = StateConfig(mode=mode, kappa=p.kappa, fixed=fixed, fixed_value=fixed_value,
                        cutoff=cutoff, tail_tol=tail_tol, convention=convention)
    return RunConfig(p, mode, gauge, state, omega, tolerances, verify, labels, spectrum,
                     wavefunction, sweep, raw)


def _parse_tol(items):
    out = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep:
            raise ConfigError("tolerances", f"expected NAME=VALUE, got {item!r}")
        try:
            number = float(value)
        except ValueError:
            raise ConfigError(f"tolerances.{name}", f"not a number: {value!r}") from None
        names = Tolerances.__dataclass_fields__ if name == "*" else [name]
        for key in names:
            out[key] = number
    return out


def load_config(args):
    raw = copy.deepcopy(DEFAULTS)
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError("config", f"cannot read {args.config}: {exc.strerror}") from None
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config", "top level must be an object")
        raw = _merge(raw, doc)
    if args.mode:
        raw["mode"] = args.mode
    if args.gauge:
        raw["gauge"] = args.gauge
    if args.cutoff is not None:
        raw["cutoff"] = args.cutoff
    if args.kappa is not None:
        if not args.kappa > 0:
            raise ConfigError("kappa", f"must be positive, got {args.kappa!r}")
        # hbar omega_c = kappa fixes the field strength
        pr = raw["params"]
        raw["params"] = dict(pr, B=args.kappa * pr["m"] * pr["c"] / (pr["hbar"] * pr["e_charge"]))
    raw["tolerances"] = dict(raw["tolerances"], **_parse_tol(args.tol))
    for item in getattr(args, "label", None) or ():
        name, sep, value = item.partition("=")
        if not sep:
            raise ConfigError("labels", f"expected NAME=VALUE, got {item!r}")
        try:
            raw["labels"] = dict(raw["labels"], **{name: float(value)})
        except ValueError:
            raise ConfigError(f"labels.{name}", f"not a number: {value!r}") from None
    return build_config(raw)


# -- output helpers -----------------------------------------------------------

def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % x


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- subcommands --------------------------------------------------------------

def spectrum_rows(cfg):
    """(n, l, alpha, E_discrete, E_continuous, E_total, valid) rows."""
    p, mode = cfg.params, cfg.mode
    bound = alpha_bound(mode, p) if (mode is SpectrumMode.SHIFTED or p.lam) else None
    rows = []
    n_lo, n_hi = cfg.spectrum["n"]
    l_lo, l_hi = cfg.spectrum["l"]
    for n in range(n_lo, n_hi + 1):
        e_d = float(discrete_energy(mode, n, p))
        for l in range(l_lo, l_hi + 1):
            for alpha in cfg.spectrum["alpha"]:
                e_c = float(continuous_energy(mode, alpha, p))
                valid = bound is None or alpha <= bound
                rows.append((n, l, alpha, e_d, e_c, e_d + e_c, valid))
    return rows


def cmd_spectrum(cfg, args):
    rows = spectrum_rows(cfg)
    out = _out_dir(args)
    write_csv(out / "spectrum.csv",
              ["n", "l", "alpha", "E_discrete", "E_continuous", "E_total", "valid"], rows)
    invalid = sum(not r[-1] for r in rows)
    if invalid:
        print(f"warning: {invalid} row(s) have alpha above the bound", file=sys.stderr)
    print(f"wrote {out / 'spectrum.csv'} ({len(rows)} rows, {invalid} invalid)")
    return EXIT_OK


def _state_config(cfg):
    # one epsilon grid per run, sized for the largest K used anywhere
    ks = [cfg.labels["K"]]
    if cfg.sweep["param"] == "K":
        ks += cfg.sweep["values"]
    grid = epsilon_grid(max(ks), cfg.state.rho, cfg.raw["grid_nodes"])
    return replace(cfg.state, grid=grid)


def build_state(cfg, labels, config=None):
    config = config or _state_config(cfg)
    return build_combined_cs(*(labels[k] for k in LABEL_NAMES), config)


def cmd_cs_build(cfg, args):
    cs = build_state(cfg, cfg.labels)
    out = _out_dir(args)
    (out / "state.json").write_text(dumps_state(cs) + "\n")
    d = cs.discrete
    write_csv(out / "discrete.csv", ["k", "abs2"],
              zip(range(d.cutoff), np.abs(d.coeffs) ** 2))
    c = cs.continuous
    write_csv(out / "continuous.csv", ["eps", "abs2"],
              zip(c.grid.nodes, np.abs(c.values) ** 2))
    print(f"wrote state.json, discrete.csv, continuous.csv to {out} "
          f"(cutoff {d.cutoff}, norm^2 {cs.norm_sq:.12g})")
    return EXIT_OK


def cmd_verify(cfg, args):
    v = cfg.verify
    settings = SuiteSettings(
        params=cfg.params,
        moment_order=v["moment_order"],
        commutator_cutoff=v["commutator_cutoff"],
        resolution_cutoff=v["resolution_cutoff"],
        resolution_orders=v["resolution_orders"],
        laguerre_form=v["laguerre_form"],
        tolerances=cfg.tolerances,
        paper_measure=v["paper_measure"],
        omega=cfg.omega,
    )
    reports = run_suite(args.which, settings, workers=v["workers"])
    out = _out_dir(args)
    (out / "verify_report.json").write_text(reports_to_json(reports, args.timings) + "\n")
    failed = [r for r in reports if not r.passed]
    for r in failed:
        print(r.line())
    print(f"{len(reports) - len(failed)}/{len(reports)} checks passed; "
          f"report in {out / 'verify_report.json'}")
    return EXIT_VERIFY if failed else EXIT_OK


def wavefunction_rows(cfg):
    wf = cfg.wavefunction
    xs = np.linspace(*wf["x"])
    ys = np.linspace(*wf["y"])
    x, y = np.meshgrid(xs, ys, indexing="ij")
    phi = phi_alpha(cfg.gauge, wf["alpha"], x.ravel(), y.ravel(), cfg.params)
    return list(zip(x.ravel(), y.ravel(), phi.real, phi.imag))


def cmd_wavefunction(cfg, args):
    alpha = cfg.wavefunction["alpha"]
    if cfg.mode is SpectrumMode.SHIFTED or cfg.params.lam:
        bound = alpha_bound(cfg.mode, cfg.params)
        if alpha > bound:
            print(f"warning: alpha={alpha} exceeds the bound {bound}", file=sys.stderr)
    out = _out_dir(args)
    rows = wavefunction_rows(cfg)
    write_csv(out / "wavefunction.csv", ["x", "y", "re_phi", "im_phi"], rows)
    print(f"wrote {out / 'wavefunction.csv'} ({len(rows)} rows)")
    return EXIT_OK


SWEEP_COLUMNS = ("norm_sq", "discrete_norm_sq", "continuous_norm_sq", "f", "g",
                 "mean_index", "cutoff", "tail_bound")


def sweep_rows(cfg):
    config = _state_config(cfg)
    param = cfg.sweep["param"]

    def one(value):
        cs = build_state(cfg, dict(cfg.labels, **{param: value}), config)
        d = cs.discrete
        return (value, cs.norm_sq, d.norm_sq, cs.continuous.norm_sq, cs.f_value, cs.g_value,
                d.mean_index(), d.cutoff, d.tail_bound)

    workers = cfg.sweep["workers"]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, cfg.sweep["values"]))
    return [one(v) for v in cfg.sweep["values"]]


def cmd_sweep(cfg, args):
    rows = sweep_rows(cfg)
    out = _out_dir(args)
    write_csv(out / "sweep.csv", [cfg.sweep["param"], *SWEEP_COLUMNS], rows)
    print(f"wrote {out / 'sweep.csv'} ({len(rows)} rows)")
    return EXIT_OK


COMMANDS = {
    "spectrum": cmd_spectrum,
    "cs-build": cmd_cs_build,
    "verify": cmd_verify,
    "wavefunction": cmd_wavefunction,
    "sweep": cmd_sweep,
}


def make_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--mode", choices=[m.value for m in SpectrumMode])
    common.add_argument("--gauge", choices=[g.value for g in Gauge])
    common.add_argument("--kappa", type=float, help="set B so that hbar*omega_c equals this")
    common.add_argument("--cutoff", type=int, help="discrete Fock cutoff (default: automatic)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--tol", action="append", metavar="NAME=VAL",
                        help="override a tolerance; NAME '*' sets all of them")

    parser = argparse.ArgumentParser(prog="gkcs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="energy table as CSV")
    for name in ("cs-build", "sweep"):
        sp = sub.add_parser(name, parents=[common],
                            help="build and export a state" if name == "cs-build"
                            else "state summaries over one label")
        sp.add_argument("--label", action="append", metavar="NAME=VAL",
                        help=f"override a label ({', '.join(LABEL_NAMES)})")
    vp = sub.add_parser("verify", parents=[common], help="run the verification suite")
    vp.add_argument("which", nargs="?", default="all", choices=["all", *CHECK_GROUPS])
    vp.add_argument("--timings", action="store_true", help="include runtime_ms in the report")
    sub.add_parser("wavefunction", parents=[common], help="phi_alpha on a grid as CSV")
    return parser


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CutoffError as exc:
        print(f"error: config field 'cutoff': {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"error: no convergence: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())

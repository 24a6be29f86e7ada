"""Command-line front end.

Evaluates the library operations on grids and emits machine-readable
records; `verify` runs the cross-check suites.  Every record carries the
echoed inputs, the value, an error bound (series residual) or standard
error (Monte Carlo), and convergence metadata.

Grid syntax: a single number, `lo:hi:count` (inclusive, linear), or
`log:lo:hi:count` (logarithmic).  A config file holds flat `key = value`
lines using the long option names; explicit flags override it.
"""

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import verify as verify_mod
from .errors import SpherehitError
from .fpt import Geometry, InversionControl
from .jointdist import (
    Band,
    Drift,
    JointQuery,
    band_probability,
    drift_band_probability,
    drift_joint_laplace,
    drift_tail_asymptotic,
    hitting_place_density,
    joint_density,
    joint_laplace,
    tail_asymptotic,
    tail_probability,
)
from .mcverify import McConfig, estimate
from .specfun import SeriesControl

USAGE_ERROR = 2
NUMERIC_ERROR = 1


def parse_grid(text):
    """Parse `x`, `lo:hi:count` or `log:lo:hi:count` into a list of floats."""
    text = text.strip()
    logspace = text.startswith("log:")
    if logspace:
        text = text[4:]
    parts = text.split(":")
    if len(parts) == 1:
        return [float(parts[0])]
    if len(parts) != 3:
        raise ValueError(f"grid must be `value` or `lo:hi:count`, got {text!r}")
    lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    if count < 1:
        raise ValueError("grid count must be >= 1")
    if hi < lo:
        raise ValueError(f"grid endpoints must be sorted, got {text!r}")
    if count == 1:
        return [lo]
    if logspace:
        if lo <= 0 or hi <= 0:
            raise ValueError("log grids need positive endpoints")
        return list(np.geomspace(lo, hi, count))
    return list(np.linspace(lo, hi, count))


def parse_band(text):
    lo, hi = (float(v) for v in text.split(","))
    return Band(lo, hi)


def _fmt(x):
    if isinstance(x, float):
        return format(x, ".17g")
    return x


def _flatten(record, prefix=""):
    flat = {}
    for key, val in record.items():
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            flat.update(_flatten(val, name + "."))
        else:
            flat[name] = val
    return flat


def write_records(records, fmt, out_path):
    if fmt == "json":
        text = json.dumps(records, indent=2)
    else:
        rows = [_flatten(r) for r in records]
        header = list(rows[0].keys()) if rows else []
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(row.get(k, "")) for k in header])
        text = buf.getvalue()
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _record(inputs, value, error, meta):
    return {
        "inputs": inputs,
        "value": value,
        "error_bound_or_stderr": error,
        "convergence": meta,
    }


# ---------------------------------------------------------------------------
# argument plumbing

_COMMON = [
    ("d", int, None, "ambient dimension (>= 2)"),
    ("a", float, None, "start radius"),
    ("r", float, 1.0, "sphere radius"),
    ("n-max", int, 400, "series truncation cap"),
    ("abs-tol", float, 1e-10, "series tolerance"),
    ("inv-method", str, "talbot", "inversion method (talbot | stehfest)"),
    ("inv-nodes", int, 0, "inversion node count (0 = method default)"),
    ("format", str, "json", "output format (json | csv)"),
    ("out", str, "", "output path (default stdout)"),
    ("config", str, "", "flat key = value config file"),
]

_DRIFT = [
    ("v1", float, 0.0, "drift along the start axis"),
    ("v-perp", float, 0.0, "orthogonal drift magnitude"),
]

_PER_COMMAND = {
    "laplace": [("lam-grid", str, "1", "rate grid"),
                ("u-axis", float, 0.0, "exponent along the axis"),
                ("u-perp", float, 0.0, "orthogonal exponent magnitude")],
    "density": [("t-grid", str, None, "time grid"),
                ("x-grid", str, None, "place grid (z1/r)")],
    "marginal": [("x-grid", str, None, "place grid (z1/r)")],
    "band": [("band", str, None, "band as `x_lo,x_hi`"),
             ("t1", float, 0.0, "window start"),
             ("t2", float, math.inf, "window end (inf allowed)")],
    "tail": [("band", str, None, "band as `x_lo,x_hi`"),
             ("t-grid", str, None, "tail time grid")],
    "asymp": [("band", str, None, "band as `x_lo,x_hi`"),
              ("t-grid", str, None, "tail time grid")],
    "drift-laplace": _DRIFT + [("lam-grid", str, "1", "rate grid"),
                               ("u-axis", float, 0.0, "exponent along the axis"),
                               ("u-perp", float, 0.0, "orthogonal exponent magnitude"),
                               ("angle", float, 0.0, "angle between u' and v'")],
    "drift-band": _DRIFT + [("band", str, None, "band as `x_lo,x_hi`"),
                            ("t1", float, 0.0, "window start"),
                            ("t2", float, math.inf, "window end (inf allowed)")],
    "drift-asymp": _DRIFT + [("band", str, None, "band as `x_lo,x_hi`"),
                             ("t-grid", str, None, "tail time grid")],
    "mc": _DRIFT + [("band", str, None, "band as `x_lo,x_hi`"),
                    ("t1", float, 0.0, "window start"),
                    ("t2", float, math.inf, "window end (inf allowed)"),
                    ("paths", float, 1e5, "path count"),
                    ("seed", int, 0, "RNG seed"),
                    ("base-step", float, 0.1, "far-field time step"),
                    ("boundary-fraction", float, 0.2, "near-sphere step fraction"),
                    ("min-step", float, 1e-8, "smallest time step"),
                    ("escape-radius", float, 0.0, "escape radius (0 = none)"),
                    ("horizon", float, 0.0, "time horizon (0 = auto)")],
    "verify": [("suite", str, "all", "suite name or `all`"),
               ("paths", float, 1e6, "Monte Carlo path count"),
               ("seed", int, 42, "Monte Carlo seed"),
               ("format", str, "json", "output format for --out"),
               ("out", str, "", "optional results file"),
               ("config", str, "", "flat key = value config file")],
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="spherehit",
        description="Hitting time and place of Brownian motion on a sphere.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, extras in _PER_COMMAND.items():
        sp = sub.add_parser(command, help=f"{command} computation")
        opts = extras if command == "verify" else _COMMON + extras
        for name, typ, _default, help_text in opts:
            sp.add_argument(f"--{name}", type=typ, default=None, help=help_text)
    return parser


def _read_config(path):
    values = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line without `=`: {raw.rstrip()}")
            key, val = (part.strip() for part in line.split("=", 1))
            values[key.replace("_", "-")] = val
    return values


def _resolve(args, command):
    """Merge CLI flags, config file and hard defaults into one namespace."""
    opts = _PER_COMMAND[command] if command == "verify" else _COMMON + _PER_COMMAND[command]
    spec = {name: (typ, default) for name, typ, default, _ in opts}
    config = {}
    raw_cfg = getattr(args, "config", None)
    if raw_cfg:
        config = _read_config(raw_cfg)
    resolved = {}
    for name, (typ, default) in spec.items():
        attr = name.replace("-", "_")
        val = getattr(args, attr, None)
        if val is None and name in config:
            val = typ(config[name])
        if val is None:
            val = default
        resolved[attr] = val
    missing = [k for k, v in resolved.items() if v is None]
    if missing:
        raise SystemExit(
            f"spherehit {command}: missing required option(s): "
            + ", ".join("--" + m.replace("_", "-") for m in missing)
        )
    return argparse.Namespace(**resolved)


def _controls(ns):
    ctrl = SeriesControl(n_max=ns.n_max, abs_tol=ns.abs_tol)
    inv = InversionControl(method=ns.inv_method, nodes=ns.inv_nodes)
    return ctrl, inv


def _base_inputs(ns, **extra):
    inputs = {"d": ns.d, "a": ns.a, "r": ns.r}
    inputs.update(extra)
    return inputs


# ---------------------------------------------------------------------------
# command implementations


def _cmd_laplace(ns, drift=False):
    geom = Geometry(ns.d, ns.r, ns.a)
    ctrl, _ = _controls(ns)
    records = []
    for lam in parse_grid(ns.lam_grid):
        if drift:
            v = Drift(ns.v1, ns.v_perp)
            val, info = drift_joint_laplace(geom, v, lam, ns.u_axis, ns.u_perp,
                                            ctrl, angle=ns.angle, full_output=True)
            inputs = _base_inputs(ns, lam=lam, u_axis=ns.u_axis, u_perp=ns.u_perp,
                                  v1=ns.v1, v_perp=ns.v_perp, angle=ns.angle)
        else:
            val, info = joint_laplace(geom, lam, ns.u_axis, ns.u_perp, ctrl,
                                      full_output=True)
            inputs = _base_inputs(ns, lam=lam, u_axis=ns.u_axis, u_perp=ns.u_perp)
        records.append(_record(inputs, val, info["residual_bound"], info))
    return records


def _cmd_density(ns):
    geom = Geometry(ns.d, ns.r, ns.a)
    ctrl, inv = _controls(ns)
    records = []
    for t in parse_grid(ns.t_grid):
        for x in parse_grid(ns.x_grid):
            val, info = joint_density(geom, t, x, ctrl, inv, full_output=True)
            records.append(_record(_base_inputs(ns, t=t, x=x), val,
                                   info["residual_bound"], info))
    return records


def _cmd_marginal(ns):
    geom = Geometry(ns.d, ns.r, ns.a)
    ctrl, _ = _controls(ns)
    records = []
    for x in parse_grid(ns.x_grid):
        val, info = hitting_place_density(geom, x, ctrl, full_output=True)
        records.append(_record(_base_inputs(ns, x=x), val,
                               info["residual_bound"], info))
    return records


def _cmd_band(ns, drift=False):
    geom = Geometry(ns.d, ns.r, ns.a)
    ctrl, inv = _controls(ns)
    band = parse_band(ns.band)
    if drift:
        v = Drift(ns.v1, ns.v_perp)
        query = JointQuery(geom, (ns.t1, ns.t2), band, v)
        val, info = drift_band_probability(query, ctrl, inv, full_output=True)
        inputs = _base_inputs(ns, band_lo=band.x_lo, band_hi=band.x_hi,
                              t1=ns.t1, t2=ns.t2, v1=ns.v1, v_perp=ns.v_perp)
    else:
        query = JointQuery(geom, (ns.t1, ns.t2), band)
        val, info = band_probability(query, ctrl, inv, full_output=True)
        inputs = _base_inputs(ns, band_lo=band.x_lo, band_hi=band.x_hi,
                              t1=ns.t1, t2=ns.t2)
    return [_record(inputs, val, info["residual_bound"], info)]


def _cmd_tail(ns):
    geom = Geometry(ns.d, ns.r, ns.a)
    ctrl, inv = _controls(ns)
    band = parse_band(ns.band)
    records = []
    for t in parse_grid(ns.t_grid):
        query = JointQuery(geom, (t, math.inf), band)
        val, info = tail_probability(query, ctrl, inv, full_output=True)
        inputs = _base_inputs(ns, band_lo=band.x_lo, band_hi=band.x_hi, t=t)
        records.append(_record(inputs, val, info["residual_bound"], info))
    return records


def _cmd_asymp(ns, drift=False):
    geom = Geometry(ns.d, ns.r, ns.a)
    band = parse_band(ns.band)
    records = []
    for t in parse_grid(ns.t_grid):
        if drift:
            v = Drift(ns.v1, ns.v_perp)
            query = JointQuery(geom, (t, math.inf), band, v)
            val = drift_tail_asymptotic(query)
            inputs = _base_inputs(ns, band_lo=band.x_lo, band_hi=band.x_hi, t=t,
                                  v1=ns.v1, v_perp=ns.v_perp)
        else:
            query = JointQuery(geom, (t, math.inf), band)
            val = tail_asymptotic(query)
            inputs = _base_inputs(ns, band_lo=band.x_lo, band_hi=band.x_hi, t=t)
        records.append(_record(inputs, val, 0.0, {"closed_form": True}))
    return records


def _cmd_mc(ns):
    geom = Geometry(ns.d, ns.r, ns.a)
    ctrl, inv = _controls(ns)
    band = parse_band(ns.band)
    drift = Drift(ns.v1, ns.v_perp) if (ns.v1 or ns.v_perp) else None
    horizon = ns.horizon if ns.horizon > 0 else (ns.t2 if math.isfinite(ns.t2) else 1e10)
    cfg = McConfig(
        n_paths=int(ns.paths), time_horizon=horizon, seed=ns.seed,
        base_step=ns.base_step, boundary_fraction=ns.boundary_fraction,
        min_step=ns.min_step,
        escape_radius=ns.escape_radius if ns.escape_radius > 0 else None,
    )
    query = JointQuery(geom, (ns.t1, ns.t2), band, drift)
    res = estimate(geom, drift, [query], cfg)[0]
    if drift is not None:
        series_val = drift_band_probability(query, ctrl, inv)
    else:
        series_val = band_probability(query, ctrl, inv)
    inputs = _base_inputs(ns, band_lo=band.x_lo, band_hi=band.x_hi,
                          t1=ns.t1, t2=ns.t2, v1=ns.v1, v_perp=ns.v_perp,
                          paths=int(ns.paths), seed=ns.seed)
    meta = {
        "n_escaped": res.n_escaped,
        "n_horizon": res.n_horizon,
        "series_value": series_val,
        "z_score": (res.estimate - series_val) / max(res.std_err, 1e-300),
    }
    return [_record(inputs, res.estimate, res.std_err, meta)]


def _cmd_verify(ns):
    names = list(verify_mod.SUITES) if ns.suite == "all" else [ns.suite]
    results = []
    for name in names:
        kwargs = {}
        if name == "mc-agreement":
            kwargs = {"n_paths": int(ns.paths), "seed": ns.seed}
        res = verify_mod.run_suite(name, **kwargs)
        results.append(res)
        print(f"{'PASS' if res.passed else 'FAIL'} {res.name}: {res.detail}")
        if not res.passed:
            for line in res.failures[:10]:
                print(f"    {line}")
    if ns.out:
        records = [
            _record({"suite": r.name}, r.worst, 0.0,
                    {"passed": r.passed, "detail": r.detail, "seconds": r.seconds})
            for r in results
        ]
        write_records(records, ns.format, ns.out)
    return 0 if all(r.passed for r in results) else NUMERIC_ERROR


def _merge_negative_values(argv):
    """Join `--flag -1:1:3` into `--flag=-1:1:3` so argparse keeps the value."""
    merged = []
    skip = False
    for i, tok in enumerate(argv):
        if skip:
            skip = False
            continue
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if (
            tok.startswith("--")
            and "=" not in tok
            and nxt is not None
            and nxt.startswith("-")
            and not nxt.startswith("--")
            and (":" in nxt or "," in nxt)
        ):
            merged.append(f"{tok}={nxt}")
            skip = True
        else:
            merged.append(tok)
    return merged


def main(argv=None):
    parser = _build_parser()
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    args = parser.parse_args(_merge_negative_values(argv))
    command = args.command
    try:
        ns = _resolve(args, command)
        if command == "verify":
            return _cmd_verify(ns)
        handlers = {
            "laplace": lambda: _cmd_laplace(ns),
            "density": lambda: _cmd_density(ns),
            "marginal": lambda: _cmd_marginal(ns),
            "band": lambda: _cmd_band(ns),
            "tail": lambda: _cmd_tail(ns),
            "asymp": lambda: _cmd_asymp(ns),
            "drift-laplace": lambda: _cmd_laplace(ns, drift=True),
            "drift-band": lambda: _cmd_band(ns, drift=True),
            "drift-asymp": lambda: _cmd_asymp(ns, drift=True),
            "mc": lambda: _cmd_mc(ns),
        }
        records = handlers[command]()
        write_records(records, ns.format, ns.out)
        return 0
    except SpherehitError as exc:
        print(f"spherehit {command}: numerical failure: {exc}", file=sys.stderr)
        return NUMERIC_ERROR
    except (ValueError, OSError) as exc:
        print(f"spherehit {command}: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())

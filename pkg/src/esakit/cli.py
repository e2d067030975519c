"""Command-line front end.

Every run writes ``<outdir>/<name>/`` containing ``config.echo`` (the fully
resolved configuration), ``results.json``, any CSV tables, and
``meta.json`` (timestamps and environment; the only non-reproducible file).

Configuration files hold one ``key = value`` per line (``#`` starts a
comment); keys are the long option names.  Command-line flags override the
file.

Exit codes: 0 success, 2 configuration error, 3 numeric-evaluation error,
4 falsification (contradictory confident verdicts), 1 failed battery
criterion.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import platform
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, NumericEvaluationError

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_NUMERIC, EXIT_FALSIFIED = 0, 1, 2, 3, 4


# ------------------------------------------------------------ parsing helpers

def parse_floats(text):
    try:
        return tuple(float(v) for v in str(text).replace(";", ",").split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def parse_ints(text):
    text = str(text)
    if ":" in text:
        a, b = text.split(":")
        return tuple(range(int(a), int(b)))
    return tuple(int(v) for v in text.split(",") if v.strip())


def parse_set(text, dim):
    """Build a compact set from a short description.

    ``point`` (origin), ``empty``, ``points:x1,y1;x2,y2``, ``segment`` (unit
    segment on the first axis) or ``segment:a1,a2;b1,b2``, ``sphere[:radius]``
    (centred at the origin), ``cantor[:ratio]`` (product dust in dimension d).
    """
    from .sets import CantorDust, FinitePoints, Segment, Sphere

    kind, _, arg = str(text).partition(":")
    kind = kind.strip().lower()
    d = int(dim)
    try:
        if kind == "point":
            return FinitePoints(np.zeros((1, d)))
        if kind == "empty":
            return FinitePoints([], dim=d)
        if kind == "points":
            pts = np.array([parse_floats(p) for p in arg.split(";")])
            return FinitePoints(pts.reshape(-1, d))
        if kind == "segment":
            if arg:
                a, b = (parse_floats(p) for p in arg.split(";"))
            else:
                a, b = (0.0,) * d, (1.0,) + (0.0,) * (d - 1)
            return Segment(a, b)
        if kind == "sphere":
            return Sphere(np.zeros(d), float(arg) if arg else 1.0, dim=d)
        if kind == "cantor":
            return CantorDust(dim=d, ratio=float(arg) if arg else 1 / 3)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad set description {text!r}: {exc}") from exc
    raise ConfigError(f"unknown set kind {kind!r}")


def read_config(path):
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{no}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


# ------------------------------------------------------------------ output

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


class RunDir:
    def __init__(self, outdir, name):
        self.path = Path(outdir) / name
        self.path.mkdir(parents=True, exist_ok=True)

    def json(self, fname, obj):
        text = json.dumps(_clean(obj), indent=2, ensure_ascii=False, allow_nan=False)
        (self.path / fname).write_text(text + "\n", encoding="utf-8")

    def csv(self, fname, header, rows):
        with open(self.path / fname, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, delimiter=",", lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])

    def echo(self, config):
        lines = [f"{k} = {v}" for k, v in sorted(config.items()) if v is not None]
        (self.path / "config.echo").write_text("\n".join(lines) + "\n", encoding="utf-8")


# ------------------------------------------------------------- subcommands

def cmd_kernel(cfg, out: RunDir):
    from .kernels import KernelSpec
    spec = KernelSpec(cfg["kind"], float(cfg["order"]), int(cfg["dim"]))
    r = np.geomspace(float(cfg["rmin"]), float(cfg["rmax"]), int(cfg["n"]))
    vals = np.asarray(spec(r), dtype=float)
    out.csv("profile.csv", ["r", "value"], zip(r, vals))
    out.json("results.json", {"kernel": spec.label, "at_zero": spec.at_zero(),
                              "singularity": list(spec.singularity()), "n": len(r)})
    return EXIT_OK


def cmd_capacity(cfg, out: RunDir):
    from .capacity import CapacityThresholds, capacity_estimate
    from .classify import default_levels
    from .kernels import KernelSpec
    cset = parse_set(cfg["set"], cfg["dim"])
    spec = KernelSpec(cfg["kind"], float(cfg["order"]), int(cfg["dim"]))
    th = CapacityThresholds(growth_slope=float(cfg["growth_slope"]), stabilization=float(cfg["stabilization"]),
                            rate_positive=float(cfg["rate_positive"]), rate_zero=float(cfg["rate_zero"]),
                            max_points=int(cfg["max_points"]))
    levels = parse_ints(cfg["levels"]) if cfg.get("levels") else default_levels(cset, th.max_points // 2)
    est = capacity_estimate(cset, spec, levels, th)
    out.csv("levels.csv", ["n", "min_energy"], est.levels)
    out.json("results.json", est.to_dict())
    print(f"{spec.label} on {cfg['set']}: {est.verdict}")
    return EXIT_OK


def cmd_dimension(cfg, out: RunDir):
    from .classify import estimate_dimension
    cset = parse_set(cfg["set"], cfg["dim"])
    scales = parse_floats(cfg["scales"]) if cfg.get("scales") else None
    dim = estimate_dimension(cset, scales)
    out.csv("counts.csv", ["scale", "count"], zip(dim["scales"], dim["counts"]))
    out.json("results.json", dim)
    print(f"box dimension of {cfg['set']}: {dim['estimate']:.4f}")
    return EXIT_OK


def cmd_simulate(cfg, out: RunDir):
    from .additive import simulate_additive
    from .levy import PathConfig, RngStream, brownian_sheet, characteristic_function_table, simulate_path
    proc = cfg["process"]
    seed = int(cfg["seed"])
    d = int(cfg["dim"])
    if proc == "charfn":
        rows = characteristic_function_table(n_samples=int(cfg["samples"]), seed=seed)
        out.json("results.json", {"characteristic_function": rows})
        return EXIT_OK
    T, dt = float(cfg["horizon"]), float(cfg["step"])
    if proc == "path":
        start = parse_floats(cfg["start"]) if cfg.get("start") else None
        pc = PathConfig(float(cfg["alpha"]), d, T, dt, start)
        path = simulate_path(pc, RngStream(seed, 0))
        out.csv("path.csv", ["t"] + [f"x{i}" for i in range(d)], (np.r_[t, p] for t, p in zip(pc.times, path)))
        out.json("results.json", {"process": proc, "n_points": len(path), "end": path[-1]})
    elif proc == "additive":
        sheet = simulate_additive(float(cfg["alpha"]), d, T, dt, RngStream(seed, 0))
        rows = (np.r_[t, a, b] for t, a, b in zip(sheet.times, sheet.first, sheet.second))
        out.csv("skeletons.csv", ["t"] + [f"first{i}" for i in range(d)] + [f"second{i}" for i in range(d)], rows)
        out.json("results.json", {"process": proc, "n_points": len(sheet.times)})
    elif proc == "sheet":
        g = dt * np.arange(1, int(math.floor(T / dt + 1e-9)) + 1)
        W = brownian_sheet(g, g, d, RngStream(seed, 0))
        rows = ([s, t, *W[i, j]] for i, s in enumerate(g) for j, t in enumerate(g))
        out.csv("sheet.csv", ["s", "t"] + [f"w{i}" for i in range(d)], rows)
        out.json("results.json", {"process": proc, "grid": len(g)})
    else:
        raise ConfigError(f"unknown process {proc!r} for simulate")
    return EXIT_OK


def _hitting_config(cfg, process):
    from .additive import HittingConfig
    d = int(cfg["dim"])
    start = parse_floats(cfg["start"]) if cfg.get("start") else (1.0,) + (0.0,) * (d - 1)
    return HittingConfig(process, float(cfg["alpha"]), d, start, parse_floats(cfg["eps"]),
                         trials=int(cfg["trials"]), horizon=float(cfg["horizon"]),
                         step=float(cfg["step"]) if cfg.get("step") else None, stride=int(cfg["stride"]),
                         kappa_low=float(cfg["kappa_low"]), kappa_high=float(cfg["kappa_high"]),
                         p_max=float(cfg["p_max"]), min_hits=int(cfg["min_hits"]))


def cmd_hit(cfg, out: RunDir):
    from .additive import hitting_scan
    from .levy import RngStream
    names = {"one_param": "one_param", "oneparam": "one_param", "stable": "one_param",
             "additive": "additive", "sheet": "sheet"}
    if cfg["process"] not in names:
        raise ConfigError(f"unknown process {cfg['process']!r}")
    hc = _hitting_config(cfg, names[cfg["process"]])
    cset = parse_set(cfg["set"], cfg["dim"])
    est = hitting_scan(hc, cset, RngStream(int(cfg["seed"]), 0), workers=int(cfg["threads"]))
    out.csv("frequencies.csv", ["eps", "hits", "trials", "lo", "hi"],
            ([r["eps"], r["hits"], r["trials"], r["lo"], r["hi"]] for r in est.table()))
    out.json("results.json", est.to_dict())
    print(f"kappa = {est.kappa:.3f}, verdict {est.verdict}")
    return EXIT_OK


def _prob_config(cfg):
    from .classify import ProbabilisticConfig
    return ProbabilisticConfig(eps_levels=parse_floats(cfg["eps"]), trials=int(cfg["trials"]),
                               horizon=float(cfg["horizon"]), n_starts=int(cfg["starts"]),
                               seed=int(cfg["seed"]), workers=int(cfg["threads"]))


def cmd_classify(cfg, out: RunDir):
    from .classify import classify_analytic, classify_geometric, classify_probabilistic, merge_verdicts
    cset = parse_set(cfg["set"], cfg["dim"])
    a, d = float(cfg["alpha"]), int(cfg["dim"])
    routes = [r.strip().lower() for r in cfg["routes"].split(",")]
    verdicts, analytic = [], None
    if "analytic" in routes:
        analytic = classify_analytic(cset, a, d)
        verdicts.append(analytic)
    if "geometric" in routes:
        verdicts.append(classify_geometric(cset, a, d, margin=float(cfg["margin"])))
    if "probabilistic" in routes:
        verdicts.append(classify_probabilistic(cset, a, d, _prob_config(cfg), analytic))
    if not verdicts:
        raise ConfigError("no known route selected")
    rep = merge_verdicts(verdicts, {"alpha": a, "dim": d, "set": cset.spec()}, {"seed": int(cfg["seed"])})
    out.json("results.json", rep.to_dict())
    h = rep.headline
    print(f"markov_unique: {h['markov_unique'].value}, essentially_self_adjoint: "
          f"{h['essentially_self_adjoint'].value}")
    return EXIT_FALSIFIED if rep.falsified else EXIT_OK


def cmd_crosscheck(cfg, out: RunDir):
    from .classify import cross_check
    cset = parse_set(cfg["set"], cfg["dim"])
    prob = None if str(cfg["probabilistic"]).lower() in ("0", "false", "no") else _prob_config(cfg)
    rep = cross_check(cset, float(cfg["alpha"]), int(cfg["dim"]), prob, margin=float(cfg["margin"]))
    out.json("results.json", rep.to_dict())
    for v in rep.verdicts:
        print(f"{v.route:>13}: MU {v.markov_unique.value:<13} ESA {v.essentially_self_adjoint.value}")
    if rep.falsified:
        print("FALSIFICATION: confident routes disagree", file=sys.stderr)
        return EXIT_FALSIFIED
    return EXIT_OK


def cmd_battery(cfg, out: RunDir):
    from .battery import run_battery
    keys = {k.strip().upper() for k in cfg["criteria"].split(",")} if cfg.get("criteria") else None
    results = run_battery(keys)
    out.json("results.json", {r.key: {"title": r.title, "passed": r.passed, "detail": r.detail}
                              for r in results})
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


COMMANDS = {
    "kernel": (cmd_kernel, {"kind": "bessel", "order": "1", "dim": "1", "rmin": "1e-6", "rmax": "1", "n": "50"}),
    "capacity": (cmd_capacity, {"kind": "riesz", "order": "0", "dim": "1", "set": "segment", "levels": None,
                                "growth_slope": "0.1", "stabilization": "0.02", "rate_positive": "0.95",
                                "rate_zero": "0.98", "max_points": "4096"}),
    "dimension": (cmd_dimension, {"set": "cantor", "dim": "1", "scales": None}),
    "simulate": (cmd_simulate, {"process": "path", "alpha": "2", "dim": "1", "horizon": "1", "step": "0.001",
                                "start": None, "samples": "1000000"}),
    "hit": (cmd_hit, {"process": "one_param", "alpha": "2", "dim": "3", "set": "point", "start": None,
                      "eps": "0.4,0.2,0.1,0.05", "trials": "100000", "horizon": "1", "step": None, "stride": "1",
                      "kappa_low": "0.15", "kappa_high": "0.5", "p_max": "1e-4", "min_hits": "30"}),
    "classify": (cmd_classify, {"alpha": "2", "dim": "3", "set": "point", "routes": "analytic,geometric",
                                "margin": "0.05", "eps": "0.4,0.2,0.1,0.05", "trials": "20000", "horizon": "1",
                                "starts": "2"}),
    "crosscheck": (cmd_crosscheck, {"alpha": "2", "dim": "3", "set": "point", "probabilistic": "true",
                                    "margin": "0.05", "eps": "0.4,0.2,0.1,0.05", "trials": "20000",
                                    "horizon": "1", "starts": "2"}),
    "battery": (cmd_battery, {"criteria": None}),
}


def build_parser():
    p = argparse.ArgumentParser(prog="esakit", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"esakit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, defaults) in COMMANDS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--seed", default=None)
        sp.add_argument("--threads", default=None)
        sp.add_argument("--outdir", default=None)
        sp.add_argument("--config", default=None)
        sp.add_argument("--name", default=None, help="experiment name (output subdirectory)")
        for key in defaults:
            sp.add_argument("--" + key.replace("_", "-"), dest=key, default=None)
    return p


def resolve(args) -> dict:
    """Defaults < config file < command-line flags."""
    _, defaults = COMMANDS[args.command]
    cfg = {"seed": "0", "threads": "1", "outdir": "runs", "name": args.command, **defaults}
    if args.config:
        file_cfg = read_config(args.config)
        unknown = set(file_cfg) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update(file_cfg)
    for key in cfg:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    try:
        int(cfg["seed"]), int(cfg["threads"])
    except ValueError as exc:
        raise ConfigError("seed and threads must be integers") from exc
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    started = datetime.now(timezone.utc).isoformat()
    try:
        cfg = resolve(args)
        out = RunDir(cfg["outdir"], cfg["name"])
        out.echo({k: v for k, v in cfg.items() if k not in ("outdir", "name")})
        fn, _ = COMMANDS[args.command]
        code = fn(cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericEvaluationError as exc:
        print(f"numeric evaluation error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, TypeError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out.json("meta.json", {"command": args.command, "started_utc": started,
                           "elapsed_seconds": time.perf_counter() - t0, "exit_code": code,
                           "version": __version__, "python": platform.python_version(),
                           "numpy": np.__version__})
    return code


if __name__ == "__main__":
    sys.exit(main())

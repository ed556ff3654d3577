"""Command-line front end.

Every subcommand reads an optional INI file (``--config``) whose section is
named after the subcommand; flags given on the command line override the
file.  All values are validated before any computation starts.

Exit codes: 0 success, 2 usage or validation error, 1 runtime failure.
"""

import argparse
import configparser
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import io as sio

GRID_HELP = ("grid: 'lo:hi:step' (lo, lo+step, ... up to the last value below hi + step/2, "
             "so hi is included when it lies on the lattice) or a comma list 'a,b,c'")
ENTROPY_NAMES = ("continuous-exact", "continuous-bound", "ising-exact", "ising-small-eps",
                 "tabulated")


class ConfigError(ValueError):
    pass


def parse_grid(text):
    """Values of a grid spec; see ``GRID_HELP``."""
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"bad grid {text!r}: expected lo:hi:step")
        lo, hi, step = (float(p) for p in parts)
        if not step > 0:
            raise ConfigError(f"bad grid {text!r}: step must be positive")
        if hi < lo:
            raise ConfigError(f"bad grid {text!r}: grid must increase")
        count = int(math.floor((hi - lo) / step + 0.5)) + 1
        return [round(lo + i * step, 12) for i in range(count)]
    if not text:
        raise ConfigError("empty grid")
    return [float(p) for p in text.split(",")]


def _int_list(text):
    return [int(p) for p in str(text).split(",")]


@dataclass(frozen=True)
class Param:
    name: str
    kind: str
    default: object = None
    help: str = ""
    choices: tuple = ()
    check: str = ""


def _common():
    return [
        Param("out", "str", None, "output path"),
        Param("seed", "int", 0, "64-bit seed", check="seed"),
        Param("threads", "int", None, "worker threads (default: $SMCURVE_THREADS or all cores)",
              check="positive"),
    ]


def _chain_params(with_tau=True, sweeps=200, burn_in=0):
    tau = [Param("tau", "float", 0.0, "Metropolis temperature", check="nonneg")]
    return (tau if with_tau else []) + [
        Param("sweeps", "int", sweeps, "Metropolis sweeps", check="positive"),
        Param("burn_in", "int", burn_in, "burn-in sweeps", check="nonneg"),
        Param("anneal_from", "float", 0.0, "start temperature of an annealed burn-in (0: off)",
              check="nonneg"),
        Param("step", "float", 0.3, "spherical proposal scale", check="positive"),
    ]


SUBCOMMANDS = {
    "curve": ("annealed learning curve from entropy-energy competition", [
        Param("model", "choice", "ising-exact", "entropy model", ENTROPY_NAMES),
        Param("table", "str", None, "eps,s table for the tabulated model"),
        Param("method", "choice", "crossing", "solver", ("crossing", "maximizer")),
        Param("alpha", "grid", "0.5:6:0.05", GRID_HELP),
        Param("tol", "float", 1e-12, "solver tolerance", check="positive"),
        Param("jump_threshold", "float", 0.05, "eps gap flagged as a jump", check="positive"),
    ]),
    "phase": ("(alpha, tau) phase map of the Ising perceptron", [
        Param("n", "int", 12, "input dimension", check="positive"),
        Param("alpha", "grid", "0:6:0.5", GRID_HELP, check="nonneg_grid"),
        Param("tau", "grid", "0:2:0.25", GRID_HELP, check="nonneg_grid"),
        Param("trials", "int", 20, "instances per cell", check="positive"),
        Param("threshold", "float", 0.25, "mean error below which a cell is 'good'",
              check="prob"),
        Param("space", "choice", "ising", "weight space", ("ising", "sphere")),
        Param("json", "str", None, "JSON envelope path (default: OUT with .json suffix)"),
    ] + _chain_params(with_tau=False)),
    "simulate": ("empirical Gibbs learning curve", [
        Param("n", "int", 12, "input dimension", check="positive"),
        Param("alpha", "grid", "0.5,1,2,4,6", GRID_HELP, check="nonneg_grid"),
        Param("trials", "int", 100, "instances per load", check="positive"),
        Param("sampler", "choice", "auto", "sampler", ("auto", "exact", "metropolis")),
        Param("space", "choice", "ising", "weight space", ("ising", "sphere")),
    ] + _chain_params()),
    "bounds": ("PAC bounds and the refined spectrum bound for the Ising perceptron", [
        Param("n", "int", 10, "Ising input dimension (class size 2^n)", check="positive"),
        Param("m", "int", 50, "sample size", check="positive"),
        Param("delta", "float", 0.05, "failure probability", check="open01"),
        Param("gap", "float", 0.1, "deviation for the Hoeffding/uniform bounds",
              check="positive"),
        Param("draws", "int", 0, "random datasets for the empirical validity check",
              check="nonneg"),
        Param("survival_instances", "int", 0, "random datasets for the survival-law check",
              check="nonneg"),
        Param("spectrum_out", "str", None, "CSV path for the error spectrum"),
    ]),
    "regpath": ("ridge or TSVD regularization path", [
        Param("a", "str", None, "CSV of the n x p matrix A"),
        Param("b", "str", None, "CSV of the vector b"),
        Param("a_test", "str", None, "held-out A"),
        Param("b_test", "str", None, "held-out b"),
        Param("random", "str", None, "generate a Gaussian ROWSxCOLS problem instead of reading CSVs"),
        Param("knob", "choice", "lambda", "knob", ("lambda", "rank")),
        Param("values", "grid", "0.01:10:0.01", GRID_HELP, check="nonneg_grid"),
    ]),
    "trajectory": ("A -> B -> C label-noise / early-stopping experiment", [
        Param("n", "int", 12, "input dimension", check="positive"),
        Param("m", "int", 60, "training set size", check="positive"),
        Param("noise", "float", 0.4, "fraction of randomized labels", check="open01"),
        Param("t_pre", "int", 200, "sweeps at A and B", check="positive"),
        Param("t_post", "str", "auto",
              "sweeps at C, or 'auto' to pick from --candidates on a held-out noisy split"),
        Param("candidates", "ints", "10,20,40,80,160,320", "stopping times tried by 'auto'"),
        Param("temp_scale", "float", 1.0, "c in tau = c / t_star", check="positive"),
        Param("trials", "int", 200, "independent datasets", check="positive"),
    ]),
    "multilayer": ("empirical curves of committee, parity and reversed-wedge machines", [
        Param("arch", "choice", "committee", "architecture",
              ("perceptron", "committee", "parity", "wedge")),
        Param("n", "int", 12, "input dimension", check="positive"),
        Param("k", "int", 3, "hidden units (committee, parity)", check="positive"),
        Param("gamma", "float", 1.0, "wedge width", check="nonneg"),
        Param("alpha", "grid", "0.5,1,2,4", GRID_HELP, check="nonneg_grid"),
        Param("trials", "int", 50, "instances per load", check="positive"),
        Param("test_samples", "int", 10_000, "Monte Carlo test inputs", check="test_samples"),
        Param("space", "choice", "ising", "weight space", ("ising", "sphere")),
    ] + _chain_params()),
}


@dataclass
class RunConfig:
    subcommand: str
    values: dict = field(default_factory=dict)
    config_path: str = None

    def params(self):
        return SUBCOMMANDS[self.subcommand][1] + _common()


def _convert(p, raw):
    if raw is None:
        return None
    if p.kind == "int":
        return int(raw)
    if p.kind == "float":
        return float(raw)
    if p.kind == "grid":
        return parse_grid(raw) if isinstance(raw, str) else list(raw)
    if p.kind == "ints":
        return _int_list(raw) if isinstance(raw, str) else list(raw)
    return str(raw)


_CHECKS = {
    "positive": (lambda v: v > 0, "must be positive"),
    "nonneg": (lambda v: v >= 0, "must be non-negative"),
    "prob": (lambda v: 0 <= v <= 1, "must lie in [0, 1]"),
    "open01": (lambda v: 0 < v < 1, "must lie in (0, 1)"),
    "seed": (lambda v: 0 <= v < 2**64, "must be a 64-bit unsigned integer"),
    "nonneg_grid": (lambda v: min(v) >= 0, "grid values must be non-negative"),
    "test_samples": (lambda v: v >= 10_000, "must be at least 10000"),
}


def validate_config(config):
    """All problems with ``config``; an empty list means valid.  Never mutates."""
    if config.subcommand not in SUBCOMMANDS:
        return [f"subcommand: unknown {config.subcommand!r}"]
    out = []
    vals = {}
    for p in config.params():
        raw = config.values.get(p.name, p.default)
        try:
            v = _convert(p, raw)
        except (ValueError, TypeError) as exc:
            out.append(f"{p.name}: {exc}")
            vals[p.name] = None
            continue
        vals[p.name] = v
        if v is None:
            continue
        if p.choices and v not in p.choices:
            out.append(f"{p.name}: must be one of {', '.join(p.choices)}")
        if p.kind in ("grid", "ints"):
            if not v:
                out.append(f"{p.name}: grid must be nonempty")
                continue
            if any(b <= a for a, b in zip(v, v[1:])):
                out.append(f"{p.name}: grid must increase")
        if p.check:
            ok, msg = _CHECKS[p.check]
            if not ok(v):
                out.append(f"{p.name}: {msg}")
    for name in config.values:
        if name not in vals and name not in ("config",):
            out.append(f"{name}: unknown setting for {config.subcommand}")
    out.extend(_cross_checks(config.subcommand, vals))
    return out


def _cross_checks(sub, v):
    out = []
    if v.get("out") is None:
        out.append("out: an output path is required")
    if v.get("sweeps") is not None and v.get("burn_in") is not None:
        if not v["sweeps"] > v["burn_in"]:
            out.append("burn_in: need sweeps > burn_in")
    if sub == "curve":
        if v.get("model") == "tabulated" and not v.get("table"):
            out.append("table: the tabulated model needs --table")
        if v.get("alpha") and min(v["alpha"]) <= 0:
            out.append("alpha: loads must be positive")
    if sub in ("phase", "simulate", "bounds") and v.get("space", "ising") == "ising":
        if v.get("n") and v.get("sampler", "auto") == "exact" and v["n"] > 24:
            out.append("n: the exact sampler needs n <= 24")
    if sub == "bounds" and v.get("n") and (v["draws"] or v["survival_instances"]) and v["n"] > 24:
        out.append("n: empirical checks enumerate 2^n students and need n <= 24")
    if sub == "regpath":
        if v.get("random") is None and (v.get("a") is None or v.get("b") is None):
            out.append("a: give --a and --b, or --random ROWSxCOLS")
        if v.get("random") is not None:
            try:
                _shape(v["random"])
            except ValueError as exc:
                out.append(f"random: {exc}")
        if v.get("knob") == "rank" and v.get("values"):
            if any(x != int(x) for x in v["values"]):
                out.append("values: rank knob values must be integers")
    if sub == "trajectory":
        t = v.get("t_post")
        if t is not None and t != "auto":
            try:
                if int(t) < 1:
                    out.append("t_post: must be a positive integer or 'auto'")
            except ValueError:
                out.append("t_post: must be a positive integer or 'auto'")
        if v.get("candidates") and min(v["candidates"]) < 1:
            out.append("candidates: stopping times must be positive")
    if sub == "multilayer" and v.get("arch") == "parity" and v.get("n") and v.get("k"):
        if v["n"] % v["k"]:
            out.append("k: must divide n for the parity machine")
    return out


def _shape(text):
    parts = str(text).lower().split("x")
    if len(parts) != 2 or not all(p.isdigit() and int(p) > 0 for p in parts):
        raise ValueError("expected ROWSxCOLS with positive integers")
    return int(parts[0]), int(parts[1])


def resolved(config):
    """Converted values with defaults filled in; assumes ``validate_config`` passed."""
    return {p.name: _convert(p, config.values.get(p.name, p.default)) for p in config.params()}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="smcurve", description="Learning curves from entropy-energy competition.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")
    subs.required = True
    for name, (desc, params) in SUBCOMMANDS.items():
        sp = subs.add_parser(name, help=desc, description=desc)
        sp.add_argument("--config", help=f"INI file with a [{name}] section")
        for p in params + _common():
            flag = "--" + p.name.replace("_", "-")
            default = p.default if p.default is not None else "none"
            sp.add_argument(flag, dest=p.name, default=argparse.SUPPRESS,
                            help=f"{p.help} (default: {default})")
    return parser


def load_config_file(path, subcommand):
    cp = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        cp.read_file(fh)
    if not cp.has_section(subcommand):
        return {}
    return {k.replace("-", "_"): v for k, v in cp.items(subcommand)}


# the thread budget and output locations do not affect results
_NOT_PROVENANCE = ("threads", "out", "json", "spectrum_out")


def _meta(sub, v):
    return sio.provenance({k: val for k, val in v.items() if k not in _NOT_PROVENANCE}, v["seed"])


def _run_curve(v):
    from .entropy_energy import EntropyModel
    from .solvers import learning_curve

    model = (EntropyModel.from_csv(v["table"]) if v["model"] == "tabulated"
             else EntropyModel.from_name(v["model"]))
    curve = learning_curve(model, v["method"], v["alpha"], v["tol"], v["jump_threshold"],
                           v["threads"])
    meta = _meta("curve", v)
    meta["jumps"] = [{"alpha_before": j.alpha_before, "alpha_after": j.alpha_after,
                      "eps_before": j.eps_before, "eps_after": j.eps_after}
                     for j in curve.jumps]
    flags = curve.jump_flags()
    rows = [(a, e, curve.method, int(f)) for (a, e), f in zip(curve.points, flags)]
    sio.write_csv(v["out"], ["alpha", "eps", "method", "jump_flag"], rows, meta)
    return f"curve: {len(rows)} points, {len(curve.jumps)} jump(s) -> {v['out']}"


def _gibbs_config(v):
    from .gibbs_sim import GibbsConfig

    tau = v["tau"] if isinstance(v.get("tau"), float) else 0.0
    return GibbsConfig(tau, v["sweeps"], v["burn_in"], v["seed"], v["step"], v["anneal_from"])


def _run_phase(v):
    from .gibbs_sim import phase_map

    pm = phase_map(v["n"], v["alpha"], v["tau"], _gibbs_config(v), v["trials"], v["threshold"],
                   v["space"], v["threads"])
    meta = _meta("phase", v)
    rows = list(pm.rows())
    sio.write_csv(v["out"], ["alpha", "tau", "mean_eps", "mean_train_err", "phase_label"], rows,
                  meta)
    json_path = v["json"] or os.path.splitext(v["out"])[0] + ".json"
    cells = [dict(zip(("alpha", "tau", "mean_eps", "mean_train_err", "phase_label"), r))
             for r in rows]
    sio.write_json(json_path, {"provenance": meta, "samplers": pm.samplers.tolist(),
                               "cells": cells})
    good = sum(r[4] == "good" for r in rows)
    return f"phase: {len(rows)} cells, {good} good -> {v['out']}, {json_path}"


def _run_simulate(v):
    from .gibbs_sim import empirical_learning_curve

    pts = empirical_learning_curve(v["n"], v["alpha"], _gibbs_config(v), v["trials"], v["space"],
                                   v["sampler"], v["threads"])
    rows = [(p.alpha, p.m, p.mean_eps, p.stderr, p.mean_train_err, p.trials, p.sampler,
             int(p.low_trials)) for p in pts]
    sio.write_csv(v["out"], ["alpha", "m", "mean_eps", "stderr", "mean_train_err", "trials",
                             "sampler", "low_trials"], rows, _meta("simulate", v))
    return f"simulate: {len(rows)} loads ({pts[0].sampler}) -> {v['out']}"


def _run_bounds(v):
    from .bounds import (PacParams, hoeffding_bound, ising_spectrum, pac_consistent_error_bound,
                         pac_validity_experiment, refined_spectrum_bound, uniform_bound)
    from .gibbs_sim import survival_frequencies

    params = PacParams(v["delta"], v["m"])
    spec = ising_spectrum(v["n"])
    refined = refined_spectrum_bound(spec, params)
    pac = pac_consistent_error_bound(spec.total, params)
    out = {
        "provenance": _meta("bounds", v),
        "class_size": spec.total,
        "refined": refined.to_json_dict(),
        "pac_consistent": pac.to_json_dict(),
        "hoeffding": hoeffding_bound(v["m"], v["gap"]),
        "uniform": uniform_bound(spec.total, v["m"], v["gap"]),
    }
    if v["draws"]:
        res = pac_validity_experiment(v["n"], v["m"], v["delta"], v["draws"], v["seed"],
                                      v["threads"])
        out["validity"] = {"draws": res.draws, "violations": res.violations,
                           "violation_rate": res.violation_rate, "tolerance": res.tolerance,
                           "dominated_every_draw": res.dominated_every_draw}
    if v["survival_instances"]:
        levels = survival_frequencies(v["n"], v["m"], v["survival_instances"], v["seed"],
                                      v["threads"])
        out["survival"] = [{"eps": lv.eps, "count": lv.count, "survived": lv.survived,
                            "instances": lv.instances, "expected": (1.0 - lv.eps) ** v["m"]}
                           for lv in levels]
    if v["spectrum_out"]:
        sio.write_csv(v["spectrum_out"], ["eps", "count"], spec.levels(), _meta("bounds", v))
    sio.write_json(v["out"], out)
    flag = " (vacuous)" if refined.vacuous else ""
    return f"bounds: refined {refined.bound:.6g}{flag}, pac {pac.bound:.6g} -> {v['out']}"


def _run_regpath(v):
    from .linear_reg import LeastSquaresProblem, load_problem, regularization_path

    if v["random"]:
        rows, cols = _shape(v["random"])
        rng = np.random.default_rng(v["seed"])
        problem = LeastSquaresProblem(rng.standard_normal((rows, cols)), rng.standard_normal(rows))
    else:
        problem = load_problem(v["a"], v["b"], v["a_test"], v["b_test"])
    path = regularization_path(problem, v["knob"], v["values"])
    sio.write_csv(v["out"], ["knob", "norm", "train_resid", "test_resid"], path.rows(),
                  _meta("regpath", v))
    return f"regpath: {len(path.knob_values)} points ({v['knob']}) -> {v['out']}"


def _run_trajectory(v):
    from .vsdl import select_stopping_time, trajectory_experiment

    meta = _meta("trajectory", v)
    if v["t_post"] == "auto":
        choice = select_stopping_time(v["n"], v["m"], v["noise"], v["candidates"], v["trials"],
                                      v["seed"] + 1, v["temp_scale"], threads=v["threads"])
        t_post = choice.t_star
        meta["stopping_selection"] = {"candidates": list(choice.candidates),
                                      "validation_errors": list(choice.validation_errors),
                                      "chosen": t_post}
    else:
        t_post = int(v["t_post"])
    rep = trajectory_experiment(v["n"], v["m"], v["noise"], v["t_pre"], t_post, v["trials"],
                                v["seed"], v["temp_scale"], v["threads"])
    doc = rep.to_json_dict()
    doc["provenance"] = dict(doc["provenance"], **meta)
    sio.write_json(v["out"], doc)
    return (f"trajectory: gen A {rep['A'].mean_gen_error:.4f}, B {rep['B'].mean_gen_error:.4f}, "
            f"C {rep['C'].mean_gen_error:.4f} -> {v['out']}")


def _run_multilayer(v):
    from .multilayer import empirical_multilayer_curve

    k_or_gamma = v["gamma"] if v["arch"] == "wedge" else v["k"]
    if v["arch"] == "perceptron":
        k_or_gamma = 1
    pts = empirical_multilayer_curve(v["arch"], v["n"], k_or_gamma, v["alpha"], _gibbs_config(v),
                                     v["trials"], v["test_samples"], v["space"], v["threads"])
    rows = [(p.architecture, p.k_or_gamma, p.alpha, p.m, p.mean_eps, p.stderr, p.mean_train_err,
             p.trials) for p in pts]
    sio.write_csv(v["out"], ["architecture", "k_or_gamma", "alpha", "m", "mean_eps", "stderr",
                             "mean_train_err", "trials"], rows, _meta("multilayer", v))
    return f"multilayer: {len(rows)} loads ({v['arch']}) -> {v['out']}"


RUNNERS = {
    "curve": _run_curve,
    "phase": _run_phase,
    "simulate": _run_simulate,
    "bounds": _run_bounds,
    "regpath": _run_regpath,
    "trajectory": _run_trajectory,
    "multilayer": _run_multilayer,
}


def run(argv=None):
    """Parse, validate and dispatch; returns the process exit code."""
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    flags = {k: v for k, v in vars(ns).items() if k not in ("subcommand", "config")}
    values = {}
    if getattr(ns, "config", None):
        try:
            values.update(load_config_file(ns.config, ns.subcommand))
        except (OSError, configparser.Error) as exc:
            print(f"error: cannot read config file: {exc}", file=sys.stderr)
            return 2
    values.update(flags)
    config = RunConfig(ns.subcommand, values, getattr(ns, "config", None))
    problems = validate_config(config)
    if problems:
        for msg in problems:
            print(f"error: {msg}", file=sys.stderr)
        return 2
    try:
        summary = RUNNERS[ns.subcommand](resolved(config))
    except Exception as exc:  # noqa: BLE001 - reported and mapped to exit 1
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(summary)
    return 0


def main():
    sys.exit(run())

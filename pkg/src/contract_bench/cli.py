"""Command line entry point ``contract-bench``.

Every subcommand reads a JSON config, takes an explicit ``--seed`` and
writes its outputs plus ``metadata.json`` into ``--out``.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from ._seeding import stream
from .errors import ConfigurationError
from .posterior import (
    ConjugatePosterior,
    contraction_radius,
    posterior_mass_outside,
    save_chain,
)
from .priors import prior_from_dict, spec_hash
from .rate_harness import (
    RateScenario,
    _posterior,
    experiment_metadata,
    fit_rate,
    make_truth,
    power_curve,
    run_experiment,
    theoretical_rate,
)
from .smallball import (
    concentration_function,
    entropy_constant,
    rectangle_cover,
    rkhs_cover_count,
    smallball_mc,
    smallball_tilted,
)
from .spectral_core import make_operator, simulate_observation

EXIT_VERDICT_FAILED = 2


def _load(path) -> dict:
    return json.loads(Path(path).read_text())


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, default=_jsonable))


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


def _scenario(cfg: dict, seed: int) -> RateScenario:
    doc = dict(cfg)
    doc["seed"] = seed
    return RateScenario.from_dict(doc)


def _operator(cfg: dict):
    o = cfg["operator"]
    return make_operator(o["kind"], o.get("params", {}), int(o["K_max"]))


def _meta(args, started: float, **extra) -> dict:
    from . import __version__

    return {
        "command": args.command,
        "config": str(args.config),
        "seed": args.seed,
        "version": __version__,
        "wall_clock_seconds": time.perf_counter() - started,
        **extra,
    }


def cmd_simulate(args, cfg, out: Path) -> tuple[int, dict]:
    op = _operator(cfg)
    f0 = make_truth(cfg["truth"], op.K_max)
    grid = cfg.get("n_grid", [cfg["n"]] if "n" in cfg else None)
    if not grid:
        raise ConfigurationError("simulate needs 'n' or 'n_grid'")
    files = []
    for i, n in enumerate(grid):
        obs = simulate_observation(f0, op, float(n), stream(args.seed, i))
        doc = obs.to_json()
        doc["seed"] = [args.seed, i]
        name = "observation.json" if len(grid) == 1 else f"observation_{i}.json"
        _write_json(out / name, doc)
        files.append(name)
    return 0, {"files": files}


def cmd_posterior(args, cfg, out: Path) -> tuple[int, dict]:
    n = float(cfg.pop("n", cfg["n_grid"][0]))
    sc = _scenario(cfg, args.seed)
    op = sc.build_operator()
    prior = sc.build_prior()
    f0 = sc.build_truth(op.K_max)
    s_obs, s_post, s_draw = stream(args.seed, 0, 0).spawn(3)
    obs = simulate_observation(f0, op, n, s_obs)
    post = _posterior(sc, prior, obs, s_post)
    summary = {"n": n, "tau": sc.tau,
               "contraction_radius": contraction_radius(post, f0, sc.tau, draws=sc.draws, seed=s_draw)}
    try:
        xi = float(theoretical_rate(sc).xi(n))
        summary["xi_n"] = xi
        summary["mass_outside_M_xi"] = posterior_mass_outside(post, f0, sc.M * xi, draws=sc.draws, seed=s_draw).estimate
    except ConfigurationError as exc:
        summary["rate_note"] = str(exc)
    if isinstance(post, ConjugatePosterior):
        with (out / "conjugate.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "mean", "variance"])
            for k, (m, v) in enumerate(zip(post.mean, post.var), start=1):
                w.writerow([k, repr(float(m)), repr(float(v))])
    else:
        save_chain(post, out / "chain.csv")
        summary["acceptance"] = post.acceptance
    _write_json(out / "posterior_summary.json", summary)
    return 0, {"prior_hash": spec_hash(sc.prior)}


def cmd_rate_fit(args, cfg, out: Path) -> tuple[int, dict]:
    sc = _scenario(cfg, args.seed)
    t0 = time.perf_counter()
    table = run_experiment(sc, workers=args.workers)
    table.to_csv(out / "rate_table.csv")
    fit = fit_rate(table)
    doc = fit.to_dict()
    try:
        doc["theory"] = theoretical_rate(sc).to_dict()
    except ConfigurationError as exc:
        doc["theory"] = {"error": str(exc)}
    _write_json(out / "rate_fit.json", doc)
    meta = experiment_metadata(sc, time.perf_counter() - t0)
    code = EXIT_VERDICT_FAILED if (args.strict and fit.verdict is False) else 0
    return code, meta


def cmd_smallball(args, cfg, out: Path) -> tuple[int, dict]:
    op = _operator(cfg)
    prior = prior_from_dict(cfg["prior"])
    f0 = make_truth(cfg["truth"], op.K_max)
    method = cfg.get("method", "mc")
    draws = int(cfg.get("draws", 100_000))
    rows = []
    for i, eps in enumerate(cfg["eps_grid"]):
        eps = float(eps)
        s = stream(args.seed, i)
        if method == "mc":
            e = smallball_mc(prior, op, f0, eps, draws, s)
            rows.append((eps, e.estimate, e.std_error))
        elif method == "tilted":
            e = smallball_tilted(prior, op, f0, eps, draws, s)
            rows.append((eps, e.estimate, e.relative_error * e.estimate))
        elif method == "bound":
            r = concentration_function(prior, op, op.rho * f0.coeffs, eps)
            rows.append((eps, math.exp(-r.total), math.nan))
        else:
            raise ConfigurationError(f"unknown small-ball method {method!r}; expected mc, tilted or bound")
    with (out / "smallball.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["eps", "estimate", "error"])
        w.writerows([[repr(a), repr(b), repr(c)] for a, b, c in rows])
    return 0, {"method": method, "draws": draws, "prior_hash": spec_hash(cfg["prior"])}


def cmd_entropy(args, cfg, out: Path) -> tuple[int, dict]:
    rows = []
    if "operator" in cfg:
        op = _operator(cfg)
        prior = prior_from_dict(cfg["prior"])
        cl = op.classification
        beta, c0 = cl.beta, cl.c0
        logs = [rkhs_cover_count(op, prior, float(e)) for e in cfg["eps_grid"]]
    else:
        beta, c0 = float(cfg["beta"]), float(cfg["c0"])
        logs = [rectangle_cover(float(cfg.get("C", 1.0)), c0, beta, float(e)).log_count for e in cfg["eps_grid"]]
    A = entropy_constant(c0, beta)
    # error: distance from the leading-order asymptote
    for eps, lc in zip(cfg["eps_grid"], logs):
        asym = A * math.log(1.0 / float(eps)) ** (1.0 + 1.0 / beta)
        rows.append((float(eps), lc, lc - asym))
    with (out / "entropy.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["eps", "bound", "error"])
        w.writerows([[repr(a), repr(b), repr(c)] for a, b, c in rows])
    return 0, {"beta": beta, "c0": c0, "asymptotic_constant": A}


def cmd_test_power(args, cfg, out: Path) -> tuple[int, dict]:
    opts = {k: cfg.pop(k) for k in ("level", "pilot_replicates", "test_replicates", "separation_factor") if k in cfg}
    if "test_replicates" in opts:
        opts["replicates"] = opts.pop("test_replicates")
    sc = _scenario(cfg, args.seed)
    M0, rows = power_curve(sc, **opts)
    with (out / "test_power.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "separation", "type_I_hat", "type_II_hat", "borell_bound"])
        for r in rows:
            w.writerow([repr(r.n), repr(r.separation), repr(r.type_I_hat), repr(r.type_II_hat), repr(r.borell_bound)])
    return 0, {"M0": M0, "k_n": [r.k_n for r in rows], "xi_n": [r.xi_n for r in rows]}


COMMANDS = {
    "simulate": cmd_simulate,
    "posterior": cmd_posterior,
    "rate-fit": cmd_rate_fit,
    "smallball": cmd_smallball,
    "entropy": cmd_entropy,
    "test-power": cmd_test_power,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="contract-bench", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, type=Path, help="JSON config file")
        s.add_argument("--seed", type=int, default=0, help="base seed (unsigned 64-bit)")
        s.add_argument("--out", type=Path, default=Path("."), help="output directory")
        s.add_argument("--strict", action="store_true", help="exit with code 2 when a rate verdict fails")
        s.add_argument("--workers", type=int, default=None, help="process pool size for rate-fit")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 1
    started = time.perf_counter()
    try:
        cfg = _load(args.config)
        args.out.mkdir(parents=True, exist_ok=True)
        code, extra = COMMANDS[args.command](args, cfg, args.out)
    except (ConfigurationError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    meta = _meta(args, started, **extra)
    meta.setdefault("config_hash", spec_hash(_load(args.config)))
    _write_json(args.out / "metadata.json", meta)
    return code


if __name__ == "__main__":
    sys.exit(main())

"""Batch experiment runner.

Subcommands mirror the experiment lifecycle:

  simulate   build model assets and a prior-predictive simulation store
  run        execute one configured inference run, persisting all artifacts
  diagnose   compute metrics (KDE log-prob, MMD, calibration, curves) for a run
  curves     aggregate many runs into plot-ready CSV files

One JSON config file describes one run. Everything a run writes is
reproducible byte-for-byte from (config, seed) in the same build, except the
wall-clock column of reports.csv.
"""

import argparse
import json
import os
import sys

import numpy as np
import scipy

from . import __version__
from .baselines import SmcAbcConfig, run_sl_mcmc, run_smc_abc
from .calibration import SbcRunConfig, snl_sbc
from .diagnostics import kde_log_prob, likelihood_gof, mmd, rank_histogram, uniformity_band
from .engine import McmcConfig, run_snl, sample_posterior
from .flow import ConditionalMaf, FlowConfig, TrainConfig
from .mcmc import init_chain, run_chain
from .simulators import MODEL_NAMES, get_model, toy_exact_log_likelihood
from .simulators.registry import SimulationFailure
from .store import SimulationStore

CURVES_HEADER = "method,simulations,value,seed"
REPORTS_HEADER = "round,sims,median_dist,val_loss,seconds"
SBC_HEADER = "bin,count,band_lo,band_hi"
METHODS = ("snl", "nl", "sl", "smc_abc")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BAD_CONFIG = 2


class ConfigError(Exception):
    pass


class CountingSimulator:
    """Wraps a simulate(theta, rng) callable and counts every invocation."""

    def __init__(self, fn):
        self.fn = fn
        self.calls = 0

    def __call__(self, theta, rng):
        self.calls += 1
        return self.fn(theta, rng)


def _float_csv(values):
    return ",".join(repr(float(v)) for v in values)


def write_samples_csv(path, samples, labels):
    with open(path, "w") as f:
        f.write(",".join(labels) + "\n")
        for row in np.atleast_2d(samples):
            f.write(_float_csv(row) + "\n")


def read_samples_csv(path):
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def _resolve_config(args):
    with open(args.config) as f:
        config = json.load(f)
    if args.seed is not None:
        config["seed"] = args.seed
    if args.out is not None:
        config["out"] = args.out
    for key in ("model", "method", "seed", "out"):
        if key not in config:
            raise ConfigError(f"config is missing required key '{key}'")
    if config["model"] not in MODEL_NAMES:
        raise ConfigError(f"unknown model '{config['model']}';"
                          f" registry entries: {', '.join(MODEL_NAMES)}")
    if config["method"] not in METHODS:
        raise ConfigError(f"unknown method '{config['method']}';"
                          f" available: {', '.join(METHODS)}")
    config.setdefault("params", {})
    config.setdefault("posterior_samples", 1000)
    config.setdefault("harvest_thin", 5)
    config.setdefault("harvest_burn_in", 200)
    config.setdefault("pilot_size", 1000)
    config.setdefault("assets_dir", None)
    config.setdefault("flow", {})
    config.setdefault("train", {})
    config.setdefault("mcmc", {})
    return config


def _write_manifest(out_dir, config, sim_calls, artifacts, extra=None):
    manifest = {
        "config": config,
        "model": config["model"],
        "method": config["method"],
        "seed": config["seed"],
        "simulator_calls": sim_calls,
        "artifacts": sorted(artifacts),
        "versions": {
            "python": ".".join(str(v) for v in sys.version_info[:3]),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "snlkit": __version__,
        },
    }
    if extra:
        manifest.update(extra)
    with open(os.path.join(out_dir, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=1, sort_keys=True)


def cmd_simulate(args):
    model = get_model(args.model, pilot_size=args.pilot_size, cache_dir=args.out)
    rng = np.random.default_rng(args.seed)
    sim = CountingSimulator(model.simulate)
    store = SimulationStore(model.dim_theta, model.dim_x)
    thetas = np.empty((args.n, model.dim_theta))
    xs = np.empty((args.n, model.dim_x))
    for i in range(args.n):
        while True:
            theta = model.prior.sample(rng)
            try:
                x = sim(theta, rng)
                break
            except SimulationFailure:
                continue
        thetas[i] = theta
        xs[i] = x
    store.add_batch(thetas, xs, 1)
    store.save_jsonl(os.path.join(args.out, "store.jsonl"))
    print(f"wrote {args.n} prior-predictive simulations"
          f" ({sim.calls} simulator calls) to {args.out}")
    return EXIT_OK


def cmd_run(args):
    try:
        config = _resolve_config(args)
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_BAD_CONFIG

    out_dir = config["out"]
    os.makedirs(out_dir, exist_ok=True)
    assets_dir = config["assets_dir"] or os.path.join(out_dir, "assets")
    model = get_model(config["model"], pilot_size=config["pilot_size"],
                      cache_dir=assets_dir)
    sim = CountingSimulator(model.simulate)
    seed = config["seed"]
    params = config["params"]
    artifacts = []
    extra = {}
    method = config["method"]

    if method in ("snl", "nl"):
        if method == "snl":
            n_rounds = int(params.get("n_rounds", 5))
            n_per_round = int(params.get("n_per_round", 1000))
        else:
            n_rounds = 1
            n_per_round = int(params.get("n_simulations", 1000))
        store = SimulationStore(model.dim_theta, model.dim_x)
        posterior, reports = run_snl(
            model.prior, sim, model.x_obs, n_rounds, n_per_round,
            flow_config=FlowConfig(**config["flow"]),
            train_config=TrainConfig(**config["train"]),
            mcmc_config=McmcConfig(**config["mcmc"]),
            seed=seed, snapshot_dir=os.path.join(out_dir, "flows"),
            store=store, keep_flows=False)

        store.save_jsonl(os.path.join(out_dir, "store.jsonl"))
        artifacts.append("store.jsonl")

        harvest_rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
        samples = sample_posterior(posterior, config["posterior_samples"],
                                   harvest_rng, burn_in=config["harvest_burn_in"],
                                   thin=config["harvest_thin"])
        write_samples_csv(os.path.join(out_dir, "posterior_samples.csv"),
                          samples, model.theta_labels)
        artifacts.append("posterior_samples.csv")

        with open(os.path.join(out_dir, "reports.csv"), "w") as f:
            f.write(REPORTS_HEADER + "\n")
            for r in reports:
                f.write(r.csv_row() + "\n")
        artifacts.append("reports.csv")
        artifacts += [f"flows/flow_round_{r.round_index}.npz" for r in reports]

        extra["round_simulations"] = [r.simulations for r in reports]
        extra["round_sim_calls"] = [r.sim_calls for r in reports]
        extra["retries"] = int(sum(r.retries for r in reports))

    elif method == "sl":
        rng = np.random.default_rng(seed)
        result = run_sl_mcmc(model.prior, sim, model.x_obs,
                             int(params.get("n_sims_per_eval", 100)),
                             int(params.get("n_samples", 1000)), rng,
                             burn_in=int(params.get("burn_in", 200)),
                             thin=int(params.get("thin", 1)))
        write_samples_csv(os.path.join(out_dir, "posterior_samples.csv"),
                          result.samples, model.theta_labels)
        artifacts.append("posterior_samples.csv")
        extra["target_evaluations"] = result.n_target_evals
        extra["sims_per_eval"] = result.sims_per_eval

    else:  # smc_abc
        rng = np.random.default_rng(seed)
        smc_config = SmcAbcConfig(
            n_particles=int(params.get("n_particles", 1000)),
            n_rounds=int(params.get("n_rounds", 5)),
            sim_budget=params.get("sim_budget"),
            min_eps=params.get("min_eps"))
        populations = run_smc_abc(model.prior, sim, model.x_obs, rng, smc_config)
        with open(os.path.join(out_dir, "populations.jsonl"), "w") as f:
            for pop in populations:
                f.write(json.dumps({
                    "round": pop.round_index, "eps": pop.eps,
                    "n_sims_total": pop.n_sims_total,
                    "acceptance_rate": pop.acceptance_rate,
                    "resampled": pop.resampled,
                    "particles": pop.particles.tolist(),
                    "weights": pop.weights.tolist()}) + "\n")
        artifacts.append("populations.jsonl")
        final = populations[-1]
        resample_rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
        idx = resample_rng.choice(final.particles.shape[0],
                                  size=config["posterior_samples"],
                                  p=final.weights)
        write_samples_csv(os.path.join(out_dir, "posterior_samples.csv"),
                          final.particles[idx], model.theta_labels)
        artifacts.append("posterior_samples.csv")
        extra["eps_schedule"] = [pop.eps for pop in populations]
        extra["round_sims"] = [pop.n_sims_total for pop in populations]
        extra["round_acceptance"] = [pop.acceptance_rate for pop in populations]

    _write_manifest(out_dir, config, sim.calls, artifacts, extra)
    print(f"run complete: method={method} model={config['model']}"
          f" seed={seed} simulator_calls={sim.calls}")
    return EXIT_OK


def toy_reference_samples(model, n, seed, cache_dir=None):
    """Reference posterior samples via slice sampling on the exact likelihood."""
    path = None
    if cache_dir is not None:
        path = os.path.join(cache_dir, f"toy_reference_n{n}_s{seed}.csv")
        if os.path.exists(path):
            return read_samples_csv(path)
    prior = model.prior
    x_obs = model.x_obs

    def target(theta):
        if not prior.in_support(theta):
            return -np.inf
        return prior.log_prob(theta) + toy_exact_log_likelihood(x_obs, theta)

    rng = np.random.default_rng(np.random.SeedSequence([seed, 3]))
    chain = init_chain(prior.sample(rng), rng, widths=prior.axis_ranges())
    samples, _ = run_chain(chain, target, n, burn_in=200, thin=5)
    if path is not None:
        os.makedirs(cache_dir, exist_ok=True)
        write_samples_csv(path, samples, model.theta_labels)
    return samples


def _write_sbc_csvs(out_dir, model, result, n_trials):
    lo, hi = uniformity_band(n_trials, result.n_posterior_samples)
    matrix = result.rank_matrix()
    paths = []
    for i in range(matrix.shape[1]):
        counts = rank_histogram(matrix[:, i], result.n_posterior_samples)
        path = os.path.join(out_dir, f"sbc_{model.theta_labels[i]}.csv")
        with open(path, "w") as f:
            f.write(SBC_HEADER + "\n")
            for b, c in enumerate(counts):
                f.write(f"{b},{c},{lo!r},{hi!r}\n")
        paths.append(path)
    return paths


def cmd_diagnose(args):
    run_dir = args.run
    manifest_path = os.path.join(run_dir, "manifest.json")
    if not os.path.exists(manifest_path):
        print(f"error: no manifest in {run_dir}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    with open(manifest_path) as f:
        manifest = json.load(f)
    config = manifest["config"]
    assets_dir = config.get("assets_dir") or os.path.join(run_dir, "assets")
    model = get_model(manifest["model"], pilot_size=config.get("pilot_size", 1000),
                      cache_dir=assets_dir)

    samples = read_samples_csv(os.path.join(run_dir, "posterior_samples.csv"))
    metrics = {
        "model": manifest["model"],
        "method": manifest["method"],
        "seed": manifest["seed"],
        "simulations": manifest["simulator_calls"],
        "nll_true": -kde_log_prob(samples, model.theta_star),
    }

    if manifest["model"] == "toy":
        reference = toy_reference_samples(model, samples.shape[0],
                                          args.reference_seed, cache_dir=assets_dir)
        metrics["mmd"] = mmd(samples, reference)

    if manifest["method"] in ("snl", "nl"):
        per_round = []
        sims_per_round = manifest.get("round_simulations", [])
        calls_per_round = manifest.get("round_sim_calls", sims_per_round)
        medians = {}
        reports_path = os.path.join(run_dir, "reports.csv")
        if os.path.exists(reports_path):
            for row in np.loadtxt(reports_path, delimiter=",", skiprows=1, ndmin=2):
                medians[int(row[0])] = float(row[2])
        for i, sims in enumerate(sims_per_round):
            entry = {"round": i + 1, "simulations": int(sims),
                     "sim_calls": int(calls_per_round[i])}
            if (i + 1) in medians:
                entry["median_dist"] = medians[i + 1]
            if args.gof:
                flow = ConditionalMaf.load(
                    os.path.join(run_dir, "flows", f"flow_round_{i + 1}.npz"))
                rng = np.random.default_rng(
                    np.random.SeedSequence([manifest["seed"], 4, i]))
                entry["gof"] = likelihood_gof(flow, model.simulate,
                                              model.theta_star, args.gof, rng)
            per_round.append(entry)
        if per_round:
            metrics["per_round"] = per_round

    if args.sbc_trials > 0:
        sbc_config = SbcRunConfig(
            n_trials=args.sbc_trials,
            n_posterior_samples=args.sbc_samples,
            n_rounds=args.sbc_rounds,
            n_per_round=args.sbc_per_round,
            seed=manifest["seed"],
            jobs=args.jobs,
            flow=config.get("flow", {}),
            train=config.get("train", {}),
            mcmc=config.get("mcmc", {}))
        result = snl_sbc(manifest["model"], sbc_config,
                         pilot_size=config.get("pilot_size", 1000),
                         assets_dir=assets_dir)
        for path in _write_sbc_csvs(run_dir, model, result, args.sbc_trials):
            print(f"wrote {path}")

    with open(os.path.join(run_dir, "metrics.json"), "w") as f:
        json.dump(metrics, f, indent=1, sort_keys=True)
    print(f"diagnose complete: nll_true={metrics['nll_true']:.4f}"
          + (f" mmd={metrics['mmd']:.4f}" if "mmd" in metrics else ""))
    return EXIT_OK


def cmd_curves(args):
    rows = {}
    found_any = False
    for run_dir in args.runs:
        metrics_path = os.path.join(run_dir, "metrics.json")
        if not os.path.exists(metrics_path):
            print(f"warning: skipping {run_dir} (no metrics.json; run diagnose first)",
                  file=sys.stderr)
            continue
        found_any = True
        with open(metrics_path) as f:
            metrics = json.load(f)
        model = metrics["model"]
        method = metrics["method"]
        seed = metrics["seed"]

        def add(metric, sims, value):
            rows.setdefault((model, metric), []).append(
                (method, int(sims), float(value), seed))

        if "nll_true" in metrics:
            add("nll_true", metrics["simulations"], metrics["nll_true"])
        if "mmd" in metrics:
            add("mmd", metrics["simulations"], metrics["mmd"])
        for entry in metrics.get("per_round", []):
            sims = entry.get("sim_calls", entry["simulations"])
            if "median_dist" in entry:
                add("median_dist", sims, entry["median_dist"])
            if "gof" in entry:
                add("gof", sims, entry["gof"])

    if not found_any:
        print("no metrics found", file=sys.stderr)
        return EXIT_ERROR

    os.makedirs(args.out, exist_ok=True)
    for (model, metric), entries in sorted(rows.items()):
        path = os.path.join(args.out, f"{model}_{metric}.csv")
        with open(path, "w") as f:
            f.write(CURVES_HEADER + "\n")
            for method, sims, value, seed in sorted(entries):
                f.write(f"{method},{sims},{value!r},{seed}\n")
        print(f"wrote {path}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="snlkit", description="Simulation-based inference experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="prior-predictive simulations + model assets")
    p_sim.add_argument("--model", required=True)
    p_sim.add_argument("--n", type=int, default=1000)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--pilot-size", type=int, default=1000)
    p_sim.set_defaults(func=cmd_simulate)

    p_run = sub.add_parser("run", help="execute one configured inference run")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None, help="override config seed")
    p_run.add_argument("--out", default=None, help="override config output directory")
    p_run.add_argument("--jobs", type=int, default=1,
                       help="worker processes for parallelizable stages")
    p_run.set_defaults(func=cmd_run)

    p_diag = sub.add_parser("diagnose", help="compute metrics for a finished run")
    p_diag.add_argument("--run", required=True)
    p_diag.add_argument("--gof", type=int, default=0,
                        help="sample count for per-round goodness-of-fit MMD (0 = skip)")
    p_diag.add_argument("--reference-seed", type=int, default=0)
    p_diag.add_argument("--sbc-trials", type=int, default=0,
                        help="calibration trials to run (0 = skip)")
    p_diag.add_argument("--sbc-samples", type=int, default=9)
    p_diag.add_argument("--sbc-rounds", type=int, default=3)
    p_diag.add_argument("--sbc-per-round", type=int, default=300)
    p_diag.add_argument("--jobs", type=int, default=1)
    p_diag.set_defaults(func=cmd_diagnose)

    p_curves = sub.add_parser("curves", help="aggregate runs into CSV curves")
    p_curves.add_argument("--runs", nargs="+", required=True)
    p_curves.add_argument("--out", required=True)
    p_curves.set_defaults(func=cmd_curves)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except KeyError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_BAD_CONFIG


def run_from_argv(argv):
    """Entry point usable from tests; returns the exit code."""
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())

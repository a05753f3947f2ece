"""Simulation-based calibration of the sequential inference procedure.

Each trial draws ground-truth parameters from the prior, simulates data at
them, runs the full inference on that data, and ranks the truth within a
small set of well-separated posterior samples. Calibrated inference yields
uniform ranks. Trials are independent, so they parallelize across processes.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import RankRecord, SbcResult
from .engine import McmcConfig, run_snl, sample_posterior
from .simulators.registry import get_model, simulate_with_retry

__all__ = ["SbcRunConfig", "snl_sbc"]


@dataclass
class SbcRunConfig:
    n_trials: int = 100
    n_posterior_samples: int = 9
    n_rounds: int = 3
    n_per_round: int = 300
    harvest_thin: int = 50
    harvest_burn_in: int = 200
    seed: int = 0
    jobs: int = 1
    flow: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)
    mcmc: dict = field(default_factory=dict)


_WORKER_MODEL = {}


def _get_worker_model(name, pilot_size, assets_dir):
    key = (name, pilot_size, assets_dir)
    if key not in _WORKER_MODEL:
        _WORKER_MODEL[key] = get_model(name, pilot_size=pilot_size,
                                       cache_dir=assets_dir)
    return _WORKER_MODEL[key]


def _run_trial(task):
    """One calibration trial; module-level so it pickles for process pools."""
    (name, pilot_size, assets_dir, trial, seed,
     n_rounds, n_per_round, n_post, thin, burn_in,
     flow_kwargs, train_kwargs, mcmc_kwargs) = task
    from .flow import FlowConfig, TrainConfig

    model = _get_worker_model(name, pilot_size, assets_dir)
    ss = np.random.SeedSequence([seed, trial])
    draw_ss, run_ss, harvest_ss = ss.spawn(3)
    rng = np.random.default_rng(draw_ss)

    theta_true, x, _ = simulate_with_retry(
        model.simulate, lambda: model.prior.sample(rng), rng)

    posterior, _ = run_snl(
        model.prior, model.simulate, x, n_rounds, n_per_round,
        flow_config=FlowConfig(**flow_kwargs),
        train_config=TrainConfig(**train_kwargs),
        mcmc_config=McmcConfig(**mcmc_kwargs),
        seed=int(run_ss.generate_state(1)[0]), keep_flows=False)

    samples = sample_posterior(posterior, n_post,
                               np.random.default_rng(harvest_ss),
                               burn_in=burn_in, thin=thin)
    ranks = (samples < theta_true[None, :]).sum(axis=0)
    return trial, ranks


def snl_sbc(model_name, config, pilot_size=1000, assets_dir=None, progress=None):
    """Calibration ranks for the sequential procedure on a registered model."""
    tasks = [
        (model_name, pilot_size, assets_dir, trial, config.seed,
         config.n_rounds, config.n_per_round, config.n_posterior_samples,
         config.harvest_thin, config.harvest_burn_in,
         config.flow, config.train, config.mcmc)
        for trial in range(config.n_trials)
    ]

    records = []
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            for trial, ranks in pool.map(_run_trial, tasks):
                records.append(RankRecord(trial=trial, ranks=ranks))
                if progress is not None:
                    progress(len(records), config.n_trials)
    else:
        for task in tasks:
            trial, ranks = _run_trial(task)
            records.append(RankRecord(trial=trial, ranks=ranks))
            if progress is not None:
                progress(len(records), config.n_trials)

    records.sort(key=lambda r: r.trial)
    return SbcResult(records=records,
                     n_posterior_samples=config.n_posterior_samples,
                     n_failures=0)

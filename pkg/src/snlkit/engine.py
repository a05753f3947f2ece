"""Round-based neural likelihood estimation.

Each round proposes parameters (round 1 from the prior, later rounds from a
persistent slice-sampling chain over the current posterior approximation),
simulates data at them, and retrains the conditional flow from scratch on
everything simulated so far. The posterior approximation is the product of
the flow's density at the observed data and the prior.
"""

import os
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .flow import ConditionalMaf, FlowConfig, TrainConfig, train_flow
from .mcmc import init_chain, run_chain
from .simulators.registry import SimulationFailure
from .store import SimulationStore

__all__ = ["McmcConfig", "RoundReport", "PosteriorApprox",
           "posterior_log_density", "run_snl", "run_nl", "sample_posterior"]

MAX_RETRIES = 100


@dataclass
class McmcConfig:
    burn_in: int = 200
    proposal_thin: int = 1


@dataclass
class PosteriorApprox:
    """Unnormalized posterior: flow density at the observed data times the prior.

    Snapshots the flow parameters on construction, so build it only after
    training has finished.
    """

    flow: ConditionalMaf
    prior: object
    x_obs: np.ndarray

    def __post_init__(self):
        self.x_obs = np.asarray(self.x_obs, dtype=float)
        self._likelihood = self.flow.observed_density(self.x_obs)

    def log_density(self, theta):
        theta = np.asarray(theta, dtype=float)
        lp_prior = self.prior.log_prob(theta)
        if lp_prior == -np.inf:
            return -np.inf
        return float(self._likelihood.logpdf(theta) + lp_prior)


def posterior_log_density(theta, posterior):
    return posterior.log_density(theta)


@dataclass
class RoundReport:
    round_index: int
    simulations: int
    sim_calls: int
    retries: int
    median_distance: float
    val_loss: float
    seconds: float
    flow: Optional[ConditionalMaf] = None
    proposals: Optional[np.ndarray] = None
    chain_start: Optional[np.ndarray] = None
    chain_end: Optional[np.ndarray] = None
    flow_path: Optional[str] = None

    def csv_row(self):
        return (f"{self.round_index},{self.simulations},{self.median_distance!r},"
                f"{self.val_loss!r},{self.seconds:.3f}")


def _simulate_at(simulator, theta, rng, propose_replacement, counter):
    """Simulate at theta; on failure re-propose up to the retry bound."""
    attempts = 0
    while True:
        attempts += 1
        counter["calls"] += 1
        try:
            return theta, simulator(theta, rng), attempts - 1
        except SimulationFailure:
            if attempts >= MAX_RETRIES:
                raise RuntimeError(
                    f"simulator failed {MAX_RETRIES} times for one slot") from None
            theta = propose_replacement()


def run_snl(prior, simulator, x_obs, n_rounds, n_per_round, *,
            flow_config=None, train_config=None, mcmc_config=None,
            seed=0, snapshot_dir=None, store=None, keep_flows=True):
    """Run the sequential round loop; returns the final posterior and per-round reports."""
    if n_rounds < 1:
        raise ValueError("n_rounds must be >= 1")
    if n_per_round < 2:
        raise ValueError("n_per_round must be >= 2")
    x_obs = np.asarray(x_obs, dtype=float)
    flow_config = flow_config or FlowConfig()
    train_config = train_config or TrainConfig()
    mcmc_config = mcmc_config or McmcConfig()

    root = np.random.SeedSequence(seed)
    sim_ss, chain_ss, flow_ss, train_ss = root.spawn(4)
    sim_rng = np.random.default_rng(sim_ss)
    chain_rng = np.random.default_rng(chain_ss)
    flow_seeds = flow_ss.generate_state(n_rounds)
    train_seeds = train_ss.generate_state(n_rounds)

    dim_theta = prior.dim
    dim_x = x_obs.size
    if store is None:
        store = SimulationStore(dim_theta, dim_x)

    posterior = None
    chain = None
    counter = {"calls": 0}
    reports = []

    for r in range(1, n_rounds + 1):
        t_start = time.perf_counter()
        chain_start = None

        if r == 1:
            proposals = prior.sample(sim_rng, n_per_round)

            def replacement():
                return prior.sample(sim_rng)
        else:
            if chain is None:
                chain = init_chain(prior.sample(chain_rng), chain_rng,
                                   widths=prior.axis_ranges())
            chain_start = chain.position.copy()
            target = posterior.log_density
            proposals, chain = run_chain(chain, target, n_per_round,
                                         burn_in=mcmc_config.burn_in,
                                         thin=mcmc_config.proposal_thin)

            def replacement():
                extra, _ = run_chain(chain, target, 1, burn_in=0,
                                     thin=mcmc_config.proposal_thin)
                return extra[0]

        thetas = np.empty((n_per_round, dim_theta))
        xs = np.empty((n_per_round, dim_x))
        retries = 0
        for i in range(n_per_round):
            theta, x, n_retries = _simulate_at(simulator, proposals[i], sim_rng,
                                               replacement, counter)
            thetas[i] = theta
            xs[i] = x
            retries += n_retries
        store.add_batch(thetas, xs, r)

        flow = ConditionalMaf(dim_x, dim_theta, config=flow_config,
                              rng=np.random.default_rng(int(flow_seeds[r - 1])))
        all_thetas, all_xs = store.arrays()
        result = train_flow(flow, all_thetas, all_xs,
                            replace(train_config, seed=int(train_seeds[r - 1])))
        posterior = PosteriorApprox(flow=flow, prior=prior, x_obs=x_obs)

        median_dist = float(np.median(np.linalg.norm(xs - x_obs, axis=1)))
        report = RoundReport(
            round_index=r,
            simulations=r * n_per_round,
            sim_calls=counter["calls"],
            retries=retries,
            median_distance=median_dist,
            val_loss=result.best_val_loss,
            seconds=time.perf_counter() - t_start,
            flow=flow if keep_flows else None,
            proposals=thetas.copy(),
            chain_start=chain_start,
            chain_end=chain.position.copy() if chain is not None else None,
        )
        if snapshot_dir is not None:
            os.makedirs(snapshot_dir, exist_ok=True)
            report.flow_path = os.path.join(snapshot_dir, f"flow_round_{r}.npz")
            flow.save(report.flow_path)
        reports.append(report)

    return posterior, reports


def run_nl(prior, simulator, x_obs, n_simulations, *,
           flow_config=None, train_config=None, seed=0, snapshot_dir=None):
    """Single-round variant: train the flow on prior-predictive simulations only."""
    posterior, _ = run_snl(prior, simulator, x_obs, 1, n_simulations,
                           flow_config=flow_config, train_config=train_config,
                           seed=seed, snapshot_dir=snapshot_dir)
    return posterior


def sample_posterior(posterior, n_samples, rng, burn_in=200, thin=5):
    """Harvest posterior samples with a fresh prior-initialized chain."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    prior = posterior.prior
    chain = init_chain(prior.sample(rng), rng, widths=prior.axis_ranges())
    samples, _ = run_chain(chain, posterior.log_density, n_samples,
                           burn_in=burn_in, thin=thin)
    return samples

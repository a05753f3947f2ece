"""Comparison methods: synthetic likelihood and sequential Monte Carlo ABC."""

import math
from dataclasses import dataclass, field

import numpy as np

from .mcmc import init_chain, run_chain
from .simulators.registry import SimulationFailure

__all__ = ["synthetic_log_likelihood", "SlResult", "run_sl_mcmc",
           "ParticlePopulation", "effective_sample_size", "run_smc_abc"]


# ------------------------------------------------------- synthetic likelihood

def synthetic_log_likelihood(theta, simulator, n_sims, x_obs, rng, jitter=1e-8):
    """Gaussian surrogate log-likelihood from a fresh batch of simulations.

    Fits mean and (unbiased) covariance to `n_sims` runs at theta and returns
    the fitted Gaussian's log-density at the observed data. A batch of
    identical simulations is rejected; a near-singular covariance is jittered.
    """
    x_obs = np.asarray(x_obs, dtype=float)
    d = x_obs.size
    if n_sims < d + 2:
        raise ValueError(f"need at least {d + 2} simulations for {d} features")

    sims = np.stack([simulator(theta, rng) for _ in range(n_sims)])
    if np.all(sims == sims[0]):
        raise ValueError("degenerate batch: all simulations identical")

    mean = sims.mean(axis=0)
    cov = np.cov(sims, rowvar=False)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        try:
            chol = np.linalg.cholesky(cov + jitter * np.eye(d))
        except np.linalg.LinAlgError:
            raise ValueError("singular covariance in synthetic-likelihood batch") from None

    diff = x_obs - mean
    sol = np.linalg.solve(chol, diff)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return float(-0.5 * (d * np.log(2.0 * np.pi) + logdet + sol @ sol))


@dataclass
class SlResult:
    samples: np.ndarray
    n_target_evals: int
    n_sim_calls: int
    sims_per_eval: int


def run_sl_mcmc(prior, simulator, x_obs, n_sims, n_samples, rng,
                burn_in=200, thin=1):
    """Slice sampling over prior x synthetic likelihood.

    Every target evaluation runs `n_sims` fresh simulations, so the total
    simulation cost is n_sims times the number of target evaluations.
    """
    counter = {"evals": 0, "sims": 0}

    def counting_simulator(theta, r):
        counter["sims"] += 1
        return simulator(theta, r)

    def target(theta):
        if not prior.in_support(theta):
            return -np.inf
        counter["evals"] += 1
        return prior.log_prob(theta) + synthetic_log_likelihood(
            theta, counting_simulator, n_sims, x_obs, rng)

    chain = init_chain(prior.sample(rng), rng, widths=prior.axis_ranges())
    samples, _ = run_chain(chain, target, n_samples, burn_in=burn_in, thin=thin)
    return SlResult(samples=samples, n_target_evals=counter["evals"],
                    n_sim_calls=counter["sims"], sims_per_eval=n_sims)


# ------------------------------------------------------------------- SMC ABC

@dataclass
class ParticlePopulation:
    particles: np.ndarray
    weights: np.ndarray
    eps: float
    round_index: int
    n_sims_total: int
    acceptance_rate: float
    resampled: bool = False

    def __post_init__(self):
        s = self.weights.sum()
        if not math.isclose(s, 1.0, abs_tol=1e-12):
            raise ValueError("weights must sum to 1")
        if np.any(self.weights < 0):
            raise ValueError("weights must be non-negative")


def effective_sample_size(weights):
    """1 / sum(w^2) for normalized importance weights."""
    w = np.asarray(weights, dtype=float)
    return float(1.0 / np.sum(w * w))


@dataclass
class SmcAbcConfig:
    n_particles: int = 1000
    accept_quantile: float = 0.2
    eps_decay: float = 0.9
    ess_threshold: float = 0.5
    n_rounds: int = 5
    sim_budget: int | None = None
    min_eps: float | None = None
    min_acceptance: float = 1e-3
    cov_jitter: float = 1e-10


def run_smc_abc(prior, simulator, x_obs, rng, config=None):
    """Population Monte Carlo ABC with a geometric tolerance schedule.

    The first population takes the best 20% of a prior-predictive pilot, which
    fixes the initial tolerance at the pilot's 20th-percentile distance and
    makes the first-round acceptance rate exactly that quantile. Later rounds
    perturb weighted ancestors with a Gaussian kernel (twice the weighted
    population covariance), accept at the decayed tolerance, importance-weight
    by prior over kernel mixture, and resample whenever the effective sample
    size drops below half the population.
    """
    config = config or SmcAbcConfig()
    x_obs = np.asarray(x_obs, dtype=float)
    m = config.n_particles
    dim = prior.dim

    # pilot doubles as the first round: exactly m of them are accepted
    pilot_size = int(math.ceil(m / config.accept_quantile))
    sims = 0
    pilot_thetas = np.empty((pilot_size, dim))
    pilot_dists = np.empty(pilot_size)
    for i in range(pilot_size):
        theta = prior.sample(rng)
        pilot_thetas[i] = theta
        try:
            x = simulator(theta, rng)
            pilot_dists[i] = np.linalg.norm(x - x_obs)
        except SimulationFailure:
            pilot_dists[i] = np.inf
        sims += 1

    order = np.argsort(pilot_dists, kind="stable")
    keep = order[:m]
    eps0 = float(pilot_dists[keep[-1]])
    particles = pilot_thetas[keep]
    weights = np.full(m, 1.0 / m)

    populations = [ParticlePopulation(
        particles=particles.copy(), weights=weights.copy(), eps=eps0,
        round_index=1, n_sims_total=sims, acceptance_rate=m / pilot_size)]

    eps = eps0
    for round_index in range(2, config.n_rounds + 1):
        if config.sim_budget is not None and sims >= config.sim_budget:
            break
        if config.min_eps is not None and eps <= config.min_eps:
            break
        eps = eps0 * config.eps_decay ** (round_index - 1)

        mu = weights @ particles
        centered = particles - mu
        cov = 2.0 * (centered.T * weights) @ centered
        chol = np.linalg.cholesky(cov + config.cov_jitter * np.eye(dim))

        new_particles = np.empty((m, dim))
        accepted = 0
        attempts = 0
        max_attempts = int(math.ceil(m / config.min_acceptance))
        while accepted < m:
            if attempts >= max_attempts:
                raise RuntimeError(
                    f"SMC-ABC acceptance below {config.min_acceptance:.2%}"
                    f" in round {round_index}")
            j = rng.choice(m, p=weights)
            cand = particles[j] + chol @ rng.standard_normal(dim)
            if not prior.in_support(cand):
                continue
            attempts += 1
            sims += 1
            try:
                x = simulator(cand, rng)
            except SimulationFailure:
                continue
            if np.linalg.norm(x - x_obs) <= eps:
                new_particles[accepted] = cand
                accepted += 1

        # weight: prior density over the kernel mixture of the old population
        diffs = new_particles[:, None, :] - particles[None, :, :]
        sol = np.linalg.solve(chol, diffs.reshape(-1, dim).T).T.reshape(m, m, dim)
        quad = np.sum(sol * sol, axis=2)
        logdet = 2.0 * np.sum(np.log(np.diag(chol)))
        log_kernel = -0.5 * (quad + dim * np.log(2.0 * np.pi) + logdet)
        kmax = log_kernel.max(axis=1, keepdims=True)
        log_mixture = (kmax[:, 0] + np.log(np.exp(log_kernel - kmax) @ weights))
        log_prior = np.array([prior.log_prob(t) for t in new_particles])
        log_w = log_prior - log_mixture
        log_w -= log_w.max()
        new_weights = np.exp(log_w)
        new_weights /= new_weights.sum()

        resampled = False
        if effective_sample_size(new_weights) < config.ess_threshold * m:
            idx = rng.choice(m, size=m, p=new_weights)
            new_particles = new_particles[idx]
            new_weights = np.full(m, 1.0 / m)
            resampled = True

        particles = new_particles
        weights = new_weights
        populations.append(ParticlePopulation(
            particles=particles.copy(), weights=weights.copy(), eps=eps,
            round_index=round_index, n_sims_total=sims,
            acceptance_rate=accepted / attempts, resampled=resampled))

    return populations

import numpy as np
import pytest
from scipy import stats

from snlkit.baselines import (SmcAbcConfig, effective_sample_size, run_sl_mcmc,
                              run_smc_abc, synthetic_log_likelihood)


class GaussianPrior:
    """Unbounded Gaussian prior used as a conjugate test double."""

    def __init__(self, mean, std):
        self.mean = np.atleast_1d(np.asarray(mean, dtype=float))
        self.std = float(std)

    @property
    def dim(self):
        return self.mean.size

    def sample(self, rng, n=None):
        shape = (self.dim,) if n is None else (n, self.dim)
        return self.mean + self.std * rng.standard_normal(shape)

    def log_prob(self, theta):
        z = (np.asarray(theta) - self.mean) / self.std
        return float(np.sum(-0.5 * z * z - 0.5 * np.log(2 * np.pi) - np.log(self.std)))

    def in_support(self, theta):
        return True

    def axis_ranges(self):
        return np.full(self.dim, 4.0 * self.std)


def gaussian_simulator(theta, rng):
    return np.atleast_1d(theta) + rng.standard_normal(np.atleast_1d(theta).shape)


def batch_mean_se(samples, n_batches=20):
    chunks = np.array_split(samples, n_batches)
    means = np.array([c.mean() for c in chunks])
    return means.std(ddof=1) / np.sqrt(n_batches)


# ------------------------------------------------------- synthetic likelihood

def test_sl_matches_analytic_gaussian():
    rng = np.random.default_rng(0)
    for _ in range(10):
        theta = rng.normal(size=2)
        x_obs = rng.normal(size=2)
        value = synthetic_log_likelihood(theta, gaussian_simulator, 20_000, x_obs, rng)
        exact = stats.multivariate_normal.logpdf(x_obs, theta, np.eye(2))
        assert abs(value - exact) < 0.1


def test_sl_rejects_identical_batch():
    def constant(theta, rng):
        return np.array([1.0, 2.0])

    with pytest.raises(ValueError, match="identical"):
        synthetic_log_likelihood(np.zeros(2), constant, 16, np.zeros(2),
                                 np.random.default_rng(1))


def test_sl_requires_enough_simulations():
    with pytest.raises(ValueError):
        synthetic_log_likelihood(np.zeros(3), gaussian_simulator, 4,
                                 np.zeros(3), np.random.default_rng(2))


def test_sl_consumes_exactly_n_calls():
    counter = {"n": 0}

    def counting(theta, rng):
        counter["n"] += 1
        return gaussian_simulator(theta, rng)

    synthetic_log_likelihood(np.zeros(1), counting, 37, np.zeros(1),
                             np.random.default_rng(3))
    assert counter["n"] == 37


def test_sl_mcmc_recovers_conjugate_posterior():
    # prior N(0, 2^2), likelihood N(theta, 1), x_obs = 1.5:
    # posterior mean 1.2, sd sqrt(0.8)
    prior = GaussianPrior([0.0], 2.0)
    x_obs = np.array([1.5])
    rng = np.random.default_rng(4)
    result = run_sl_mcmc(prior, gaussian_simulator, x_obs, n_sims=100,
                         n_samples=1500, rng=rng, burn_in=100)
    posterior_mean = 1.5 * (1.0 / (1.0 + 0.25))
    se = batch_mean_se(result.samples[:, 0])
    assert abs(result.samples[:, 0].mean() - posterior_mean) < 3 * se
    assert result.n_sim_calls == 100 * result.n_target_evals


def test_sl_mcmc_samples_stay_in_prior_support():
    from snlkit.simulators import BoxUniform
    prior = BoxUniform([0.0], [1.0])

    def sim(theta, rng):
        return np.atleast_1d(theta) + 0.3 * rng.standard_normal(1)

    result = run_sl_mcmc(prior, sim, np.array([0.4]), n_sims=20,
                         n_samples=300, rng=np.random.default_rng(5), burn_in=50)
    assert np.all((result.samples >= 0.0) & (result.samples <= 1.0))


# ------------------------------------------------------------------- SMC ABC

def test_ess_endpoints():
    assert effective_sample_size(np.full(100, 0.01)) == pytest.approx(100.0)
    one_hot = np.zeros(100)
    one_hot[3] = 1.0
    assert effective_sample_size(one_hot) == pytest.approx(1.0)


def test_smc_accept_everything_reproduces_prior():
    prior = GaussianPrior([0.0], 1.0)
    rng = np.random.default_rng(6)
    config = SmcAbcConfig(n_particles=1000, accept_quantile=1.0, n_rounds=1)
    pops = run_smc_abc(prior, gaussian_simulator, np.array([0.0]), rng, config)
    particles = pops[0].particles[:, 0]
    n = particles.size
    assert abs(particles.mean()) < 3.0 / np.sqrt(n)
    assert abs(particles.var() - 1.0) < 3.0 * np.sqrt(2.0 / n)


def test_smc_schedule_and_first_round_acceptance():
    prior = GaussianPrior([0.0], 1.0)
    rng = np.random.default_rng(7)
    config = SmcAbcConfig(n_particles=100, n_rounds=4)
    pops = run_smc_abc(prior, gaussian_simulator, np.array([0.5]), rng, config)
    eps0 = pops[0].eps
    for t, pop in enumerate(pops):
        assert pop.eps == eps0 * 0.9**t
        assert pop.round_index == t + 1
    assert pops[0].acceptance_rate == pytest.approx(0.2)
    # strictly decreasing tolerances, normalized weights, ESS within bounds
    for a, b in zip(pops[:-1], pops[1:]):
        assert b.eps < a.eps
        assert b.n_sims_total > a.n_sims_total
    for pop in pops:
        assert pop.weights.sum() == pytest.approx(1.0, abs=1e-12)
        ess = effective_sample_size(pop.weights)
        assert 1.0 <= ess <= config.n_particles + 1e-9


def test_smc_abort_on_vanishing_acceptance():
    prior = GaussianPrior([0.0], 1.0)
    state = {"round": 0}

    def tricky(theta, rng):
        # pilot behaves normally; afterwards simulations land far away
        state["round"] += 1
        if state["round"] <= 25:
            return np.atleast_1d(theta) + rng.standard_normal(1)
        return np.array([1e6])

    config = SmcAbcConfig(n_particles=5, n_rounds=3, min_acceptance=1e-3)
    with pytest.raises(RuntimeError, match="acceptance"):
        run_smc_abc(prior, tricky, np.array([0.0]),
                    np.random.default_rng(8), config)


def test_smc_mean_converges_to_analytic_posterior():
    posterior_mean = 1.5 * (1.0 / (1.0 + 0.25))
    wins = 0
    for seed in range(3):
        prior = GaussianPrior([0.0], 2.0)
        rng = np.random.default_rng(100 + seed)
        config = SmcAbcConfig(n_particles=400, n_rounds=5)
        pops = run_smc_abc(prior, gaussian_simulator, np.array([1.5]), rng, config)
        errors = [abs(float(p.weights @ p.particles[:, 0]) - posterior_mean)
                  for p in pops]
        non_increasing = sum(b <= a + 1e-12 for a, b in zip(errors[:-1], errors[1:]))
        if errors[-1] <= errors[0] and non_increasing >= 2:
            wins += 1
    assert wins >= 2, f"convergence trend in only {wins}/3 seeds"

"""Baselines on a conjugate 1-D problem with a known posterior.

Both synthetic likelihood (Gaussian surrogate fitted to fresh simulations at
every visited parameter) and sequential Monte Carlo ABC run against
x | theta ~ N(theta, 1) with a Gaussian prior, so the exact posterior is
available for comparison.

Run:  python demos/baselines_demo.py
"""

import numpy as np

from snlkit.baselines import SmcAbcConfig, run_sl_mcmc, run_smc_abc


class GaussianPrior:
    def __init__(self, mean, std):
        self.mean = np.atleast_1d(float(mean))
        self.std = float(std)

    dim = 1

    def sample(self, rng, n=None):
        shape = (1,) if n is None else (n, 1)
        return self.mean + self.std * rng.standard_normal(shape)

    def log_prob(self, theta):
        z = (np.asarray(theta) - self.mean) / self.std
        return float(np.sum(-0.5 * z * z) - 0.5 * np.log(2 * np.pi) - np.log(self.std))

    def in_support(self, theta):
        return True

    def axis_ranges(self):
        return np.array([4.0 * self.std])


def simulator(theta, rng):
    return np.atleast_1d(theta) + rng.standard_normal(1)


prior = GaussianPrior(0.0, 2.0)
x_obs = np.array([1.5])
post_var = 1.0 / (1.0 / prior.std**2 + 1.0)
post_mean = x_obs[0] * post_var
print(f"exact posterior: mean {post_mean:.3f}, std {np.sqrt(post_var):.3f}")

rng = np.random.default_rng(0)
sl = run_sl_mcmc(prior, simulator, x_obs, n_sims=100, n_samples=2000, rng=rng)
print(f"synthetic likelihood: mean {sl.samples.mean():+.3f}, "
      f"std {sl.samples.std():.3f}  "
      f"({sl.n_sim_calls} simulations over {sl.n_target_evals} target evaluations)")

pops = run_smc_abc(prior, simulator, x_obs, np.random.default_rng(1),
                   SmcAbcConfig(n_particles=1000, n_rounds=6))
print("smc-abc tolerance schedule and weighted posterior means:")
for pop in pops:
    wmean = float(pop.weights @ pop.particles[:, 0])
    print(f"  round {pop.round_index}: eps = {pop.eps:6.3f}, "
          f"mean = {wmean:+.3f}, acceptance = {pop.acceptance_rate:5.1%}, "
          f"cumulative simulations = {pop.n_sims_total}")

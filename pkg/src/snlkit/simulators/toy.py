"""Gaussian toy model with a complex four-mode posterior.

Five parameters control the mean and covariance of a 2-D Gaussian; the data
vector stacks four independent draws. The two scale parameters enter squared,
so the posterior carries a four-fold sign symmetry, and the likelihood is
available in closed form for reference sampling.
"""

import numpy as np

from .priors import BoxUniform

__all__ = ["toy_prior", "toy_mean_cov", "toy_simulate", "toy_exact_log_likelihood",
           "TOY_THETA_STAR", "TOY_N_POINTS"]

TOY_THETA_STAR = np.array([0.7, -2.9, -1.0, -0.9, 0.6])
TOY_N_POINTS = 4
COV_JITTER = 1e-8


def toy_prior():
    return BoxUniform([-3.0] * 5, [3.0] * 5)


def toy_mean_cov(theta):
    """Mean vector and (jittered) covariance implied by the parameters."""
    theta = np.asarray(theta, dtype=float)
    mean = theta[:2].copy()
    s1 = theta[2] ** 2
    s2 = theta[3] ** 2
    rho = np.tanh(theta[4])
    cov = np.array([[s1**2, rho * s1 * s2],
                    [rho * s1 * s2, s2**2]])
    cov += COV_JITTER * np.eye(2)
    return mean, cov


def toy_simulate(theta, rng):
    """Draw the 8-dimensional data vector (four stacked 2-D Gaussian points)."""
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise ValueError("non-finite parameters")
    mean, cov = toy_mean_cov(theta)
    chol = np.linalg.cholesky(cov)
    z = rng.standard_normal((TOY_N_POINTS, 2))
    pts = mean + z @ chol.T
    return pts.reshape(-1)


def toy_exact_log_likelihood(x, theta):
    """Sum of the four bivariate Gaussian log-densities at the data points."""
    x = np.asarray(x, dtype=float).reshape(TOY_N_POINTS, 2)
    mean, cov = toy_mean_cov(theta)
    chol = np.linalg.cholesky(cov)
    diff = x - mean
    sol = np.linalg.solve(chol, diff.T)
    quad = np.sum(sol * sol)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return float(-TOY_N_POINTS * (np.log(2.0 * np.pi) + 0.5 * logdet) - 0.5 * quad)

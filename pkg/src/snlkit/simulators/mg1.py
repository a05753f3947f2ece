"""Single-server queue with uniform service times and Poisson arrivals.

Service of customer i takes s_i ~ U(theta1, theta2); inter-arrival times are
exponential with rate theta3. The summary vector holds the 0/25/50/75/100th
quantiles of the 50 inter-departure times, whitened by a full-covariance
pilot transform. The prior puts theta1 and theta2 - theta1 each uniform on
[0, 10] and theta3 uniform on [0, 1/3].
"""

import numpy as np

from .priors import LinearBoxUniform

__all__ = ["mg1_prior", "mg1_simulate_raw", "mg1_simulate",
           "MG1_THETA_STAR", "MG1_N_CUSTOMERS", "MG1_QUANTILES"]

MG1_THETA_STAR = np.array([1.0, 5.0, 0.2])
MG1_N_CUSTOMERS = 50
MG1_QUANTILES = np.array([0.0, 0.25, 0.5, 0.75, 1.0])

_SHEAR = np.array([[1.0, 0.0, 0.0],
                   [1.0, 1.0, 0.0],
                   [0.0, 0.0, 1.0]])


def mg1_prior():
    return LinearBoxUniform(_SHEAR, [0.0, 0.0, 0.0], [10.0, 10.0, 1.0 / 3.0])


def mg1_simulate_raw(theta, rng):
    """Quantiles of the inter-departure times, before whitening."""
    theta = np.asarray(theta, dtype=float)
    t1, t2, t3 = theta
    if t3 <= 0:
        raise ValueError("arrival rate must be positive")
    if t1 < 0 or t2 < t1:
        raise ValueError("service-time bounds must satisfy 0 <= theta1 <= theta2")

    service = rng.uniform(t1, t2, size=MG1_N_CUSTOMERS)
    arrivals = np.cumsum(rng.exponential(1.0 / t3, size=MG1_N_CUSTOMERS))

    # d_i = s_i + max(d_{i-1}, a_i), unrolled with a cumulative maximum
    csum = np.cumsum(service)
    departures = csum + np.maximum.accumulate(arrivals - np.concatenate(([0.0], csum[:-1])))
    inter_dep = np.diff(np.concatenate(([0.0], departures)))
    return np.quantile(inter_dep, MG1_QUANTILES)


def mg1_simulate(theta, rng, whitening):
    """Whitened summary vector for one queue realization."""
    return whitening.apply(mg1_simulate_raw(theta, rng))

"""Likelihood-free Bayesian inference with conditional masked autoregressive flows.

The package trains an exact-density conditional flow as a surrogate for an
intractable simulator likelihood, guiding simulations over rounds with a
persistent slice-sampling chain over the current posterior approximation.
Baselines (synthetic likelihood, sequential Monte Carlo ABC), the simulator
models, and a diagnostic suite round out the toolkit.
"""

__version__ = "0.1.0"

from .flow import ConditionalMaf, FlowConfig, TrainConfig, train_flow
from .engine import (McmcConfig, PosteriorApprox, RoundReport,
                     posterior_log_density, run_nl, run_snl, sample_posterior)
from .mcmc import ChainState, init_chain, run_chain, slice_update_axis
from .store import SimulationStore
from .baselines import (ParticlePopulation, SlResult, SmcAbcConfig,
                        effective_sample_size, run_sl_mcmc, run_smc_abc,
                        synthetic_log_likelihood)
from .diagnostics import (kde_log_prob, likelihood_gof, median_distance, mmd,
                          sbc_ranks)
from .calibration import SbcRunConfig, snl_sbc
from .simulators import MODEL_NAMES, Model, SimulationFailure, get_model

__all__ = [
    "__version__",
    "ConditionalMaf", "FlowConfig", "TrainConfig", "train_flow",
    "McmcConfig", "PosteriorApprox", "RoundReport",
    "posterior_log_density", "run_nl", "run_snl", "sample_posterior",
    "ChainState", "init_chain", "run_chain", "slice_update_axis",
    "SimulationStore",
    "ParticlePopulation", "SlResult", "SmcAbcConfig",
    "effective_sample_size", "run_sl_mcmc", "run_smc_abc", "synthetic_log_likelihood",
    "kde_log_prob", "likelihood_gof", "median_distance", "mmd", "sbc_ranks",
    "SbcRunConfig", "snl_sbc",
    "MODEL_NAMES", "Model", "SimulationFailure", "get_model",
]

from .priors import BoxUniform, LinearBoxUniform, TruncatedGaussianBox
from .whitening import WhiteningTransform, pilot_whitening
from .toy import (TOY_THETA_STAR, toy_exact_log_likelihood, toy_mean_cov,
                  toy_prior, toy_simulate)
from .mg1 import MG1_THETA_STAR, mg1_prior, mg1_simulate, mg1_simulate_raw
from .lotka_volterra import (LV_THETA_STAR, RawTimeseries, gillespie,
                             lv_features, lv_prior_broad,
                             lv_prior_oscillating, lv_simulate)
from .registry import (MODEL_NAMES, Model, SimulationFailure, get_model,
                       simulate_with_retry)

__all__ = [
    "BoxUniform", "LinearBoxUniform", "TruncatedGaussianBox",
    "WhiteningTransform", "pilot_whitening",
    "TOY_THETA_STAR", "toy_exact_log_likelihood", "toy_mean_cov", "toy_prior", "toy_simulate",
    "MG1_THETA_STAR", "mg1_prior", "mg1_simulate", "mg1_simulate_raw",
    "LV_THETA_STAR", "RawTimeseries", "gillespie", "lv_features",
    "lv_prior_broad", "lv_prior_oscillating", "lv_simulate",
    "MODEL_NAMES", "Model", "SimulationFailure", "get_model", "simulate_with_retry",
]

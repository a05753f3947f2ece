"""Acceptance gate: the headline behaviors at desk scale, one line per criterion.

Run with `pytest tests/test_acceptance.py -v -s`. Expensive experiment banks
(five-seed sequential runs on the toy and queue models, the calibration
study) are shared across criteria through session fixtures; everything is
seeded and single-core.
"""

import time

import numpy as np
import pytest

from snlkit import (PosteriorApprox, get_model, mmd, run_nl, run_snl,
                    sample_posterior)
from snlkit.baselines import SmcAbcConfig, run_sl_mcmc, run_smc_abc
from snlkit.calibration import SbcRunConfig, snl_sbc
from snlkit.diagnostics import (chi_square_uniformity, kde_log_prob,
                                likelihood_gof, sbc_ranks)
from snlkit.flow import ConditionalMaf, TrainConfig, loss_and_backward, train_flow
from snlkit.mcmc import init_chain, run_chain
from snlkit.simulators import toy_exact_log_likelihood

pytestmark = pytest.mark.acceptance

N_SEEDS = 5
LOG_2PI = np.log(2.0 * np.pi)


def criterion(name, ok, detail):
    print(f"\nACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} - {detail}", flush=True)
    assert ok, f"{name}: {detail}"


# ----------------------------------------------------------- experiment banks

@pytest.fixture(scope="session")
def toy_model():
    return get_model("toy")


@pytest.fixture(scope="session")
def mg1_model():
    return get_model("mg1")


@pytest.fixture(scope="session")
def toy_reference(toy_model):
    """Posterior samples by slice sampling the exact likelihood."""
    prior = toy_model.prior
    x_obs = toy_model.x_obs

    def target(theta):
        if not prior.in_support(theta):
            return -np.inf
        return prior.log_prob(theta) + toy_exact_log_likelihood(x_obs, theta)

    rng = np.random.default_rng(990)
    chain = init_chain(prior.sample(rng), rng, widths=prior.axis_ranges())
    samples, _ = run_chain(chain, target, 1000, burn_in=200, thin=5)
    return samples


@pytest.fixture(scope="session")
def toy_bank(toy_model):
    """Five seeds of the sequential run (R=5, N=1000) plus matched single-round runs."""
    bank = []
    t0 = time.perf_counter()
    for seed in range(N_SEEDS):
        posterior, reports = run_snl(toy_model.prior, toy_model.simulate,
                                     toy_model.x_obs, 5, 1000, seed=seed)
        snl_samples = sample_posterior(posterior, 1000,
                                       np.random.default_rng(500 + seed),
                                       burn_in=200, thin=5)
        nl_posterior = run_nl(toy_model.prior, toy_model.simulate,
                              toy_model.x_obs, 5000, seed=100 + seed)
        nl_samples = sample_posterior(nl_posterior, 1000,
                                      np.random.default_rng(600 + seed),
                                      burn_in=200, thin=5)
        bank.append({
            "seed": seed,
            "reports": reports,
            "snl_samples": snl_samples,
            "nl_samples": nl_samples,
        })
    bank_seconds = time.perf_counter() - t0
    return {"runs": bank, "seconds": bank_seconds}


MG1_TRAIN = TrainConfig(min_steps=16000)


@pytest.fixture(scope="session")
def mg1_bank(mg1_model):
    """Five seeds of the queue-model sequential run with per-round snapshots."""
    bank = []
    for seed in range(N_SEEDS):
        posterior, reports = run_snl(mg1_model.prior, mg1_model.simulate,
                                     mg1_model.x_obs, 5, 1000, seed=seed,
                                     train_config=MG1_TRAIN)
        final_samples = sample_posterior(posterior, 1000,
                                         np.random.default_rng(700 + seed),
                                         burn_in=200, thin=5)
        round1 = PosteriorApprox(flow=reports[0].flow, prior=mg1_model.prior,
                                 x_obs=mg1_model.x_obs)
        round1_samples = sample_posterior(round1, 1000,
                                          np.random.default_rng(800 + seed),
                                          burn_in=200, thin=5)
        bank.append({
            "seed": seed,
            "reports": reports,
            "final_samples": final_samples,
            "round1_samples": round1_samples,
        })
    return bank


# -------------------------------------------------- criterion 1: flow algebra

def test_c1_flow_correctness_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    flow = ConditionalMaf(8, 5, rng=rng)
    for _, arr in flow.parameters():
        arr += 0.1 * rng.normal(size=arr.shape)
    for bn in flow.bn_layers:
        bn.running_mean[:] = 0.1 * rng.normal(size=8)
        bn.running_var[:] = np.exp(0.2 * rng.normal(size=8))

    # gradients against central finite differences at 100 random coordinates
    x = rng.normal(size=(6, 8))
    c = rng.normal(size=(6, 5))

    def loss_value():
        u, total, _ = flow.forward(x, c, train=True)
        return 0.5 * 8 * LOG_2PI + 0.5 * np.mean(np.sum(u * u, axis=1)) - np.mean(total)

    loss_and_backward(flow, x, c, train=True)
    grads = [g.copy() for g in flow.gradients()]
    params = [a for _, a in flow.parameters()]
    picker = np.random.default_rng(12)
    h = 1e-5
    worst_rel = 0.0
    for _ in range(100):
        pi = int(picker.integers(len(params)))
        arr = params[pi]
        flat = int(picker.integers(arr.size))
        old = arr.flat[flat]
        arr.flat[flat] = old + h
        up = loss_value()
        arr.flat[flat] = old - h
        down = loss_value()
        arr.flat[flat] = old
        fd = (up - down) / (2 * h)
        an = grads[pi].flat[flat]
        # floor 1e-5: central differences at h=1e-5 carry ~1e-10 absolute noise
        worst_rel = max(worst_rel, abs(fd - an) / max(abs(fd), abs(an), 1e-5))
    grad_ok = worst_rel < 1e-4

    # invertibility round trip
    xs = rng.normal(size=(50, 8))
    cs = rng.normal(size=(50, 5))
    u, _, _ = flow.forward(xs, cs, train=False)
    back = u.copy()
    from snlkit.flow import MadeLayer
    for layer in reversed(flow.layers):
        back = layer.invert(back, cs) if isinstance(layer, MadeLayer) else layer.invert(back)
    inv_err = float(np.max(np.abs(back - xs)))

    # exact identity at initialization
    fresh = ConditionalMaf(8, 5, rng=np.random.default_rng(13))
    pts = rng.normal(size=(20, 8))
    ident_err = float(np.max(np.abs(
        fresh.log_prob(pts, rng.normal(size=(20, 5)))
        - (-4.0 * LOG_2PI - 0.5 * np.sum(pts * pts, axis=1)))))

    # 1-D normalization by quadrature
    data_rng = np.random.default_rng(14)
    cond1 = data_rng.uniform(-1, 1, size=(400, 1))
    x1 = cond1 + data_rng.normal(size=(400, 1))
    flow1 = ConditionalMaf(1, 1, rng=np.random.default_rng(15))
    train_flow(flow1, cond1, x1, TrainConfig(seed=16, max_epochs=60, patience=10))
    grid = np.linspace(-40, 40, 20001)
    dens = np.exp(flow1.log_prob(grid[:, None], np.tile([0.2], (grid.size, 1))))
    quad_err = float(abs(np.trapezoid(dens, grid) - 1.0))

    seconds = time.perf_counter() - t0
    ok = grad_ok and inv_err < 1e-8 and ident_err < 1e-12 and quad_err < 1e-3 and seconds < 60
    criterion("C1 flow correctness", ok,
              f"grad rel err {worst_rel:.2e} (<1e-4), inversion {inv_err:.2e} (<1e-8), "
              f"identity {ident_err:.2e} (<1e-12), quadrature {quad_err:.2e} (<1e-3), "
              f"{seconds:.0f}s (<60s)")


# ------------------------------------------- criterion 2: density estimation

def test_c2_density_estimation_sanity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(21)
    theta = rng.uniform(-1.0, 1.0, size=(2000, 1))
    x = theta + rng.normal(size=(2000, 1))
    flow = ConditionalMaf(1, 1, rng=np.random.default_rng(22))
    train_flow(flow, theta, x, TrainConfig(seed=23))

    details = []
    ok = True
    for probe in (-0.5, 0.0, 0.5):
        u0, _, _ = flow.forward(np.array([[0.0]]), np.array([[probe]]), train=False)
        u1, _, _ = flow.forward(np.array([[1.0]]), np.array([[probe]]), train=False)
        slope = float(u1[0, 0] - u0[0, 0])
        mean = -float(u0[0, 0]) / slope
        std = 1.0 / abs(slope)
        ok = ok and abs(mean - probe) < 0.1 and 0.85 < std < 1.15
        details.append(f"theta={probe:+.1f}: mean {mean:+.3f}, std {std:.3f}")
    seconds = time.perf_counter() - t0
    ok = ok and seconds < 300
    criterion("C2 density estimation", ok,
              "; ".join(details) + f"; {seconds:.0f}s (<300s)")


# --------------------------------------- criterion 3: toy model end to end

def test_c3_toy_accuracy_vs_cost(toy_model, toy_reference, toy_bank):
    prior_samples = toy_model.prior.sample(np.random.default_rng(31), 1000)
    mmd_prior = mmd(prior_samples, toy_reference)
    wins = 0
    rows = []
    for run in toy_bank["runs"]:
        mmd_snl = mmd(run["snl_samples"], toy_reference)
        mmd_nl = mmd(run["nl_samples"], toy_reference)
        win = mmd_snl < 0.5 * mmd_prior and mmd_snl < mmd_nl
        wins += win
        rows.append(f"s{run['seed']}: snl {mmd_snl:.3f} nl {mmd_nl:.3f}"
                    f"{' +' if win else ' -'}")
    seconds = toy_bank["seconds"]
    ok = wins >= 4 and seconds < 1800
    criterion("C3 toy accuracy vs cost", ok,
              f"prior-to-reference {mmd_prior:.3f} (half: {0.5 * mmd_prior:.3f}); "
              + "; ".join(rows) + f"; wins {wins}/5 (need >=4), bank {seconds:.0f}s (<1800s)")


# ------------------------------------ criterion 4: queue constraint and trend

def test_c4a_mg1_hard_constraint(mg1_model, mg1_bank):
    q0_obs = mg1_model.whitening.invert(mg1_model.x_obs)[0]
    pooled = np.concatenate([run["final_samples"][:, 0] for run in mg1_bank])
    frac = float(np.mean(pooled <= q0_obs))
    per_seed = [float(np.mean(run["final_samples"][:, 0] <= q0_obs))
                for run in mg1_bank]
    criterion("C4a queue hard constraint", frac >= 0.99,
              f"pooled fraction theta1 <= q0({q0_obs:.3f}) = {frac:.3f} (need >=0.99); "
              f"per seed {[round(f, 3) for f in per_seed]}")


def test_c4b_mg1_nll_trend(mg1_model, mg1_bank):
    wins = 0
    rows = []
    for run in mg1_bank:
        nll1 = -kde_log_prob(run["round1_samples"], mg1_model.theta_star)
        nll5 = -kde_log_prob(run["final_samples"], mg1_model.theta_star)
        win = nll5 < nll1
        wins += win
        rows.append(f"s{run['seed']}: {nll1:.2f}->{nll5:.2f}{' +' if win else ' -'}")
    criterion("C4b queue NLL trend", wins >= 4,
              "; ".join(rows) + f"; wins {wins}/5 (need >=4)")


# --------------------------------- criterion 5: median-distance convergence

def test_c5_median_distance_convergence(toy_bank):
    good_seeds = 0
    rows = []
    for run in toy_bank["runs"]:
        medians = [r.median_distance for r in run["reports"]]
        non_increasing = sum(b <= a for a, b in zip(medians[:-1], medians[1:]))
        good = non_increasing >= 3
        good_seeds += good
        rows.append(f"s{run['seed']}: {[round(m, 2) for m in medians]}"
                    f" ({non_increasing}/4{'+' if good else '-'})")
    criterion("C5 median distance", good_seeds >= 3,
              "; ".join(rows) + f"; good seeds {good_seeds}/5 (need >=3)")


# ----------------------------------------------- criterion 6: calibration

def test_c6_simulation_based_calibration():
    t0 = time.perf_counter()
    config = SbcRunConfig(n_trials=100, n_posterior_samples=9, n_rounds=3,
                          n_per_round=300, harvest_thin=50, harvest_burn_in=200,
                          seed=60)
    result = snl_sbc("toy", config)
    matrix = result.rank_matrix()
    p_values = [chi_square_uniformity(matrix[:, i], 9) for i in range(5)]
    snl_ok = all(p > 0.005 for p in p_values)

    # exact-sampler oracle on a conjugate Gaussian: must be uniform
    class Prior:
        dim = 2

        def sample(self, rng, n=None):
            shape = (2,) if n is None else (n, 2)
            return rng.standard_normal(shape)

    def simulator(theta, rng):
        return theta + 0.5 * rng.standard_normal(2)

    def exact_posterior(x, rng):
        var = 1.0 / (1.0 + 4.0)
        return x * 4.0 * var + np.sqrt(var) * rng.standard_normal((9, 2))

    oracle = sbc_ranks(Prior(), simulator, exact_posterior, 200, 9,
                       np.random.default_rng(61))
    oracle_ps = [chi_square_uniformity(oracle.rank_matrix()[:, i], 9)
                 for i in range(2)]
    oracle_ok = all(p > 0.01 for p in oracle_ps)
    seconds = time.perf_counter() - t0
    criterion("C6 calibration", snl_ok and oracle_ok,
              f"snl p-values {[round(p, 3) for p in p_values]} (need >0.005); "
              f"oracle p-values {[round(p, 3) for p in oracle_ps]} (need >0.01); "
              f"{seconds:.0f}s")


# -------------------------------------- criterion 7: goodness-of-fit trend

def test_c7_likelihood_gof_trend(mg1_model, mg1_bank):
    wins = 0
    rows = []
    untrained = ConditionalMaf(5, 3, rng=np.random.default_rng(70))
    for run in mg1_bank:
        seed = run["seed"]
        rng1 = np.random.default_rng(710 + seed)
        rng5 = np.random.default_rng(720 + seed)
        rng0 = np.random.default_rng(730 + seed)
        gof1 = likelihood_gof(run["reports"][0].flow, mg1_model.simulate,
                              mg1_model.theta_star, 1000, rng1)
        gof5 = likelihood_gof(run["reports"][4].flow, mg1_model.simulate,
                              mg1_model.theta_star, 1000, rng5)
        gof_raw = likelihood_gof(untrained, mg1_model.simulate,
                                 mg1_model.theta_star, 1000, rng0)
        win = gof5 < gof1 and gof5 < gof_raw
        wins += win
        rows.append(f"s{seed}: r1 {gof1:.3f} r5 {gof5:.3f} raw {gof_raw:.3f}"
                    f"{' +' if win else ' -'}")
    criterion("C7 goodness-of-fit trend", wins >= 3,
              "; ".join(rows) + f"; wins {wins}/5 (need >=3)")


# ------------------------------------------ criterion 8: baseline sanity

def test_c8_baseline_sanity(toy_model):
    rng = np.random.default_rng(80)
    pops = run_smc_abc(toy_model.prior, toy_model.simulate, toy_model.x_obs,
                       rng, SmcAbcConfig(n_particles=100, n_rounds=4))
    eps0 = pops[0].eps
    schedule_ok = all(pop.eps == eps0 * 0.9**t for t, pop in enumerate(pops))
    acceptance_ok = pops[0].acceptance_rate >= 0.2

    # conjugate check for the synthetic-likelihood sampler
    class GaussPrior:
        dim = 1

        def sample(self, rng_, n=None):
            shape = (1,) if n is None else (n, 1)
            return 2.0 * rng_.standard_normal(shape)

        def log_prob(self, theta):
            return float(-0.25 * np.sum(np.asarray(theta) ** 2 / 2.0)
                         - 0.5 * np.log(2 * np.pi) - np.log(2.0))

        def in_support(self, theta):
            return True

        def axis_ranges(self):
            return np.array([8.0])

    def gauss_sim(theta, rng_):
        return np.atleast_1d(theta) + rng_.standard_normal(1)

    result = run_sl_mcmc(GaussPrior(), gauss_sim, np.array([1.5]), n_sims=100,
                         n_samples=1500, rng=np.random.default_rng(81),
                         burn_in=100)
    post_mean = 1.5 * (1.0 / 1.25)
    chunks = np.array_split(result.samples[:, 0], 20)
    se = np.std([c.mean() for c in chunks], ddof=1) / np.sqrt(20)
    err = abs(result.samples[:, 0].mean() - post_mean)
    sl_ok = err < 3 * se

    criterion("C8 baseline sanity", schedule_ok and acceptance_ok and sl_ok,
              f"eps schedule exact: {schedule_ok}; first-round acceptance "
              f"{pops[0].acceptance_rate:.2f} (>=0.2); SL mean error {err:.4f}"
              f" vs 3se {3 * se:.4f}")


# ------------------------------------------- criterion 9: cost accounting

def test_c9_cost_accounting(tmp_path):
    import json
    import os

    from snlkit.cli import main

    fast = {"posterior_samples": 40, "harvest_burn_in": 30, "harvest_thin": 1,
            "train": {"max_epochs": 25, "patience": 10}, "mcmc": {"burn_in": 25}}
    configs = {
        "snl": {"params": {"n_rounds": 3, "n_per_round": 50}},
        "nl": {"params": {"n_simulations": 80}},
        "sl": {"params": {"n_sims_per_eval": 10, "n_samples": 40, "burn_in": 10}},
        "smc_abc": {"params": {"n_particles": 30, "n_rounds": 3}},
    }
    run_dirs = {}
    for method, extra in configs.items():
        config = {"model": "toy", "method": method, "seed": 9,
                  "out": str(tmp_path / f"run_{method}"), **fast, **extra}
        path = tmp_path / f"{method}.json"
        with open(path, "w") as f:
            json.dump(config, f)
        assert main(["run", "--config", str(path)]) == 0
        assert main(["diagnose", "--run", config["out"]]) == 0
        run_dirs[method] = config["out"]

    assert main(["curves", "--runs", *run_dirs.values(),
                 "--out", str(tmp_path / "curves")]) == 0

    manifests = {}
    for method, out in run_dirs.items():
        with open(os.path.join(out, "manifest.json")) as f:
            manifests[method] = json.load(f)

    # method semantics pin the expected counter values
    checks = []
    m = manifests["snl"]
    checks.append(("snl counter", m["simulator_calls"],
                   3 * 50 + m["retries"]))
    checks.append(("snl rounds", m["round_sim_calls"][-1], m["simulator_calls"]))
    m = manifests["nl"]
    checks.append(("nl counter", m["simulator_calls"], 80))
    m = manifests["sl"]
    checks.append(("sl counter", m["simulator_calls"],
                   10 * m["target_evaluations"]))
    m = manifests["smc_abc"]
    checks.append(("smc counter", m["simulator_calls"], m["round_sims"][-1]))

    # every curve row's simulation count equals the instrumented counter
    with open(tmp_path / "curves" / "toy_nll_true.csv") as f:
        lines = f.read().strip().split("\n")[1:]
    for line in lines:
        method, sims, _, _ = line.split(",")
        checks.append((f"curve {method}", int(sims),
                       manifests[method]["simulator_calls"]))
    with open(tmp_path / "curves" / "toy_median_dist.csv") as f:
        med_lines = f.read().strip().split("\n")[1:]
    snl_rows = [line for line in med_lines if line.startswith("snl")]
    checks.append(("snl curve rows", [int(r.split(",")[1]) for r in snl_rows],
                   manifests["snl"]["round_sim_calls"]))

    bad = [c for c in checks if c[1] != c[2]]
    criterion("C9 cost accounting", not bad,
              "all curve/manifest/counter values equal" if not bad
              else f"mismatches: {bad}")

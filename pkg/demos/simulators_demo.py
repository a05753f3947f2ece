"""A tour of the three simulator models and their summary statistics.

Run:  python demos/simulators_demo.py
"""

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from snlkit.simulators import (LV_THETA_STAR, MG1_THETA_STAR, TOY_THETA_STAR,
                               lv_features, lv_simulate, mg1_simulate_raw,
                               toy_simulate)

rng = np.random.default_rng(0)

# Gaussian toy: four 2-D points from a parameter-dependent Gaussian
draws = np.stack([toy_simulate(TOY_THETA_STAR, rng) for _ in range(300)])
pts = draws.reshape(-1, 2)
print(f"toy model at {TOY_THETA_STAR}: point cloud mean {pts.mean(0).round(2)}, "
      f"cov\n{np.cov(pts, rowvar=False).round(2)}")

# M/G/1 queue: quantiles of inter-departure times
q = np.stack([mg1_simulate_raw(MG1_THETA_STAR, rng) for _ in range(300)])
print(f"\nqueue at theta* = {MG1_THETA_STAR}: "
      f"mean quantiles (min..max) {q.mean(0).round(2)}")
print(f"minimum inter-departure never drops below theta1: "
      f"min over 300 runs = {q[:, 0].min():.3f}")

# predator-prey jump process: oscillating trajectories and their features
fig, ax = plt.subplots(figsize=(8, 3.5))
ts = lv_simulate(LV_THETA_STAR, rng)
t = np.arange(151) * 0.2
ax.plot(t, ts.predators, label="predators")
ax.plot(t, ts.prey, label="prey")
ax.set_xlabel("time")
ax.set_ylabel("population")
ax.legend()
fig.tight_layout()
fig.savefig("lotka_volterra_demo.png", dpi=120)

feats = lv_features(ts)
names = ["pred mean", "pred log var", "pred ac1", "pred ac2",
         "prey mean", "prey log var", "prey ac1", "prey ac2", "cross-corr"]
print("\npredator-prey features (unwhitened):")
for name, value in zip(names, feats):
    print(f"  {name:13s} {value:8.3f}")
print("wrote lotka_volterra_demo.png")

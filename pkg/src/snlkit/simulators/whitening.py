"""Affine whitening of summary statistics fitted on a pilot run."""

import numpy as np

__all__ = ["WhiteningTransform", "pilot_whitening"]

MAX_CONDITION = 1e6


class WhiteningTransform:
    """x_white = matrix @ (x - shift); `matrix` is full or diagonal."""

    def __init__(self, shift, matrix, mode):
        self.shift = np.asarray(shift, dtype=float)
        self.matrix = np.asarray(matrix, dtype=float)
        self.mode = mode

    @property
    def dim(self):
        return self.shift.size

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        return (x - self.shift) @ self.matrix.T

    def invert(self, y):
        y = np.asarray(y, dtype=float)
        return y @ np.linalg.inv(self.matrix).T + self.shift

    def to_dict(self):
        return {"mode": self.mode, "shift": self.shift.tolist(),
                "matrix": self.matrix.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["shift"]), np.array(d["matrix"]), d["mode"])


def pilot_whitening(simulations, mode="full", jitter=1e-8):
    """Fit a whitening transform to pilot simulations.

    Full mode maps by the inverse Cholesky factor of the sample covariance so
    the transformed pilot has identity covariance; diagonal mode scales each
    feature by its standard deviation.
    """
    x = np.asarray(simulations, dtype=float)
    d = x.shape[1]
    if x.shape[0] < d + 2:
        raise ValueError(f"need at least {d + 2} pilot simulations for {d} features")
    shift = x.mean(axis=0)

    if mode == "diagonal":
        std = x.std(axis=0, ddof=1)
        if np.any(std == 0):
            raise ValueError("zero-variance feature in pilot run")
        matrix = np.diag(1.0 / std)
    elif mode == "full":
        cov = np.cov(x, rowvar=False)
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            chol = np.linalg.cholesky(cov + jitter * np.eye(d))
        matrix = np.linalg.inv(chol)
    else:
        raise ValueError("mode must be 'full' or 'diagonal'")

    if np.linalg.cond(matrix) >= MAX_CONDITION:
        raise ValueError("whitening transform is ill-conditioned")
    return WhiteningTransform(shift, matrix, mode)

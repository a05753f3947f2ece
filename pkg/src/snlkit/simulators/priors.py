"""Prior distributions over simulator parameters.

Every prior exposes sample / log_prob / in_support plus per-axis ranges of its
bounding box, which the slice sampler uses as initial bracket widths.
"""

import numpy as np
from scipy.stats import norm

__all__ = ["BoxUniform", "LinearBoxUniform", "TruncatedGaussianBox"]


class BoxUniform:
    """Uniform distribution over an axis-aligned box."""

    def __init__(self, lows, highs):
        self.lows = np.asarray(lows, dtype=float)
        self.highs = np.asarray(highs, dtype=float)
        if self.lows.shape != self.highs.shape or self.lows.ndim != 1:
            raise ValueError("lows and highs must be matching 1-D arrays")
        if not np.all(self.lows < self.highs):
            raise ValueError("every lower bound must be below its upper bound")
        self._log_volume = float(np.sum(np.log(self.highs - self.lows)))

    @property
    def dim(self):
        return self.lows.size

    def sample(self, rng, n=None):
        shape = (self.dim,) if n is None else (n, self.dim)
        return rng.uniform(self.lows, self.highs, size=shape)

    def in_support(self, theta):
        theta = np.asarray(theta)
        return bool(np.all(theta >= self.lows) and np.all(theta <= self.highs))

    def log_prob(self, theta):
        return -self._log_volume if self.in_support(theta) else -np.inf

    def axis_ranges(self):
        return self.highs - self.lows


class LinearBoxUniform:
    """Uniform distribution over the image of a box under a linear map.

    theta = transform @ u with u uniform on the box; the transform must have
    |det| = 1 so the density inside the support stays 1/volume(box).
    """

    def __init__(self, transform, lows, highs):
        self.transform = np.asarray(transform, dtype=float)
        self.box = BoxUniform(lows, highs)
        det = np.linalg.det(self.transform)
        if abs(abs(det) - 1.0) > 1e-12:
            raise ValueError("transform must be volume preserving")
        self._inv = np.linalg.inv(self.transform)

    @property
    def dim(self):
        return self.box.dim

    def sample(self, rng, n=None):
        u = self.box.sample(rng, n)
        return u @ self.transform.T

    def in_support(self, theta):
        return self.box.in_support(self._inv @ np.asarray(theta, dtype=float))

    def log_prob(self, theta):
        return self.box.log_prob(self._inv @ np.asarray(theta, dtype=float))

    def axis_ranges(self):
        corners = _box_corners(self.box.lows, self.box.highs) @ self.transform.T
        return corners.max(axis=0) - corners.min(axis=0)


class TruncatedGaussianBox:
    """Isotropic Gaussian restricted to a box, normalized per axis.

    Axes are independent, so the density factorizes into 1-D truncated
    normals and the normalization constant is exact.
    """

    def __init__(self, center, scale, lows, highs):
        self.center = np.asarray(center, dtype=float)
        self.scale = float(scale)
        self.box = BoxUniform(lows, highs)
        if self.center.shape != self.box.lows.shape:
            raise ValueError("center dimension does not match bounds")
        a = (self.box.lows - self.center) / self.scale
        b = (self.box.highs - self.center) / self.scale
        self._log_z = float(np.sum(np.log(norm.cdf(b) - norm.cdf(a))))

    @property
    def dim(self):
        return self.center.size

    def sample(self, rng, n=None):
        m = 1 if n is None else n
        out = np.empty((m, self.dim))
        filled = 0
        while filled < m:
            cand = self.center + self.scale * rng.standard_normal((m - filled, self.dim))
            ok = np.all((cand >= self.box.lows) & (cand <= self.box.highs), axis=1)
            kept = cand[ok]
            out[filled:filled + kept.shape[0]] = kept
            filled += kept.shape[0]
        return out[0] if n is None else out

    def in_support(self, theta):
        return self.box.in_support(theta)

    def log_prob(self, theta):
        theta = np.asarray(theta, dtype=float)
        if not self.in_support(theta):
            return -np.inf
        z = (theta - self.center) / self.scale
        lp = np.sum(-0.5 * z * z - 0.5 * np.log(2.0 * np.pi) - np.log(self.scale))
        return float(lp - self._log_z)

    def axis_ranges(self):
        return self.box.axis_ranges()


def _box_corners(lows, highs):
    d = lows.size
    corners = np.empty((2**d, d))
    for i in range(2**d):
        bits = [(i >> j) & 1 for j in range(d)]
        corners[i] = np.where(bits, highs, lows)
    return corners

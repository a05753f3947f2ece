"""Bijective layers: masked autoregressive blocks and batch-norm bijections.

All layers transform in the "density direction" (data towards the Gaussian
base) and expose an exact inverse for sampling. Backward passes accumulate
gradients of a scalar loss of the form

    loss = mean_n [ 0.5*||u_n||^2 ] * (...)  - w_logdet-weighted log-dets,

driven generically through ``backward(cache, grad_u, w_logdet)`` where
``grad_u`` is d(loss)/d(output) and ``w_logdet`` multiplies each sample's
log-det term in the loss.
"""

import numpy as np

__all__ = ["MadeLayer", "BatchNormBijection"]


class MadeLayer:
    """One masked autoregressive bijection with Gaussian conditionals.

    Density direction: u = (x - mu) * exp(-alpha), log|det| = -sum(alpha),
    where mu and alpha come from a masked feedforward network that sees
    x-coordinates of strictly lower degree plus the full conditioner. The
    alpha head is smoothly squashed to [-alpha_cap, alpha_cap] so exp() can
    never overflow. Zero-initialized heads make the layer an exact identity.
    """

    def __init__(self, masks, cond_dim, rng, alpha_cap=7.0):
        self.masks = masks
        self.cond_dim = cond_dim
        self.alpha_cap = float(alpha_cap)

        d = masks.data_dim
        sizes = masks.hidden_sizes

        def init(n_in, n_out, fan_in):
            return rng.uniform(-1.0, 1.0, size=(n_in, n_out)) / np.sqrt(fan_in)

        # hidden stack; the first layer also receives the conditioner
        self.Ws = [init(d, sizes[0], d + cond_dim)]
        self.bs = [np.zeros(sizes[0])]
        self.A = init(cond_dim, sizes[0], d + cond_dim) if cond_dim else np.zeros((0, sizes[0]))
        for n_in, n_out in zip(sizes[:-1], sizes[1:]):
            self.Ws.append(init(n_in, n_out, n_in))
            self.bs.append(np.zeros(n_out))

        # zero output heads -> identity map at initialization
        self.Vm = np.zeros((sizes[-1], d))
        self.bm = np.zeros(d)
        self.Va = np.zeros((sizes[-1], d))
        self.ba = np.zeros(d)

        self.grads = {}

    @property
    def data_dim(self):
        return self.masks.data_dim

    def parameters(self):
        out = [("A", self.A), ("Vm", self.Vm), ("bm", self.bm), ("Va", self.Va), ("ba", self.ba)]
        for i, (w, b) in enumerate(zip(self.Ws, self.bs)):
            out += [(f"W{i}", w), (f"b{i}", b)]
        return out

    def rebind(self, name, array):
        """Swap a parameter's storage (used to pack parameters contiguously)."""
        if name in ("A", "Vm", "bm", "Va", "ba"):
            setattr(self, name, array)
        elif name.startswith("W"):
            self.Ws[int(name[1:])] = array
        else:
            self.bs[int(name[1:])] = array

    def _masked_weights(self):
        ws = [w * m for w, m in zip(self.Ws, self.masks.hidden_masks)]
        return ws, self.Vm * self.masks.out_mask, self.Va * self.masks.out_mask

    def heads(self, x, cond, masked=None):
        """Network outputs (mu, alpha) for a batch; used by forward and inversion."""
        ws, vm, va = masked if masked is not None else self._masked_weights()
        h = np.tanh(x @ ws[0] + cond @ self.A + self.bs[0])
        for w, b in zip(ws[1:], self.bs[1:]):
            h = np.tanh(h @ w + b)
        mu = h @ vm + self.bm
        a_raw = h @ va + self.ba
        alpha = self.alpha_cap * np.tanh(a_raw / self.alpha_cap)
        return mu, alpha

    def forward(self, x, cond):
        """Density-direction pass. Returns (u, per-sample logdet, cache)."""
        ws, vm, va = self._masked_weights()
        hs = []
        h = np.tanh(x @ ws[0] + cond @ self.A + self.bs[0])
        hs.append(h)
        for w, b in zip(ws[1:], self.bs[1:]):
            h = np.tanh(h @ w + b)
            hs.append(h)
        mu = h @ vm + self.bm
        a_raw = h @ va + self.ba
        alpha = self.alpha_cap * np.tanh(a_raw / self.alpha_cap)
        e = np.exp(-alpha)
        u = (x - mu) * e
        logdet = -alpha.sum(axis=1)
        cache = (x, cond, hs, alpha, e, u, ws, vm, va)
        return u, logdet, cache

    def backward(self, cache, grad_u, w_logdet):
        """Accumulate parameter grads (into preallocated views); return d(loss)/d(x)."""
        x, cond, hs, alpha, e, u, ws, vm, va = cache
        masks = self.masks

        # u = (x - mu) e^{-alpha}; loss also holds w_logdet * (-sum alpha)
        dalpha = -(grad_u * u) - w_logdet
        da_raw = dalpha * (1.0 - (alpha / self.alpha_cap) ** 2)
        dmu = -grad_u * e

        h_last = hs[-1]
        g = self.grads
        np.matmul(h_last.T, da_raw, out=g["Va"])
        g["Va"] *= masks.out_mask
        g["ba"][...] = da_raw.sum(axis=0)
        np.matmul(h_last.T, dmu, out=g["Vm"])
        g["Vm"] *= masks.out_mask
        g["bm"][...] = dmu.sum(axis=0)

        dh = da_raw @ va.T + dmu @ vm.T
        for i in range(len(ws) - 1, 0, -1):
            dz = dh * (1.0 - hs[i] ** 2)
            np.matmul(hs[i - 1].T, dz, out=g[f"W{i}"])
            g[f"W{i}"] *= masks.hidden_masks[i]
            g[f"b{i}"][...] = dz.sum(axis=0)
            dh = dz @ ws[i].T
        dz0 = dh * (1.0 - hs[0] ** 2)
        np.matmul(x.T, dz0, out=g["W0"])
        g["W0"] *= masks.hidden_masks[0]
        g["b0"][...] = dz0.sum(axis=0)
        np.matmul(cond.T, dz0, out=g["A"])

        return grad_u * e + dz0 @ ws[0].T

    def invert(self, u, cond):
        """Generative-direction pass; one network sweep per coordinate degree."""
        masked = self._masked_weights()
        x = np.zeros_like(u)
        for degree in range(1, self.data_dim + 1):
            mu, alpha = self.heads(x, cond, masked=masked)
            idx = int(np.flatnonzero(self.masks.input_degrees == degree)[0])
            x[:, idx] = u[:, idx] * np.exp(alpha[:, idx]) + mu[:, idx]
        return x


class BatchNormBijection:
    """Invertible per-coordinate normalization with a log-det term.

    Training passes normalize by batch statistics and refresh the running
    statistics; eval and sampling use the running statistics only. The running
    variance starts at 1 - eps so a freshly built layer is an exact identity
    in eval mode.
    """

    def __init__(self, dim, eps=1e-5, momentum=0.9):
        self.eps = float(eps)
        self.momentum = float(momentum)
        self.log_gamma = np.zeros(dim)
        self.beta = np.zeros(dim)
        self.running_mean = np.zeros(dim)
        self.running_var = np.ones(dim) - eps
        self.grads = {}

    def parameters(self):
        return [("log_gamma", self.log_gamma), ("beta", self.beta)]

    def rebind(self, name, array):
        setattr(self, name, array)

    def buffers(self):
        return [("running_mean", self.running_mean), ("running_var", self.running_var)]

    def forward(self, x, train):
        if train:
            if x.shape[0] < 2:
                raise ValueError("batch-norm training pass needs a batch of >= 2")
            mean = x.mean(axis=0)
            var = x.var(axis=0)
            self.running_mean *= self.momentum
            self.running_mean += (1.0 - self.momentum) * mean
            self.running_var *= self.momentum
            self.running_var += (1.0 - self.momentum) * var
        else:
            mean = self.running_mean
            var = self.running_var
        inv_std = 1.0 / np.sqrt(var + self.eps)
        x_hat = (x - mean) * inv_std
        u = np.exp(self.log_gamma) * x_hat + self.beta
        logdet_scalar = float(np.sum(self.log_gamma - 0.5 * np.log(var + self.eps)))
        logdet = np.full(x.shape[0], logdet_scalar)
        cache = (x, mean, var, inv_std, x_hat, train)
        return u, logdet, cache

    def backward(self, cache, grad_u, w_logdet):
        x, mean, var, inv_std, x_hat, train = cache
        n = x.shape[0]

        self.grads["beta"][...] = grad_u.sum(axis=0)
        # log-det contributes n * w_logdet * log_gamma_j to the loss
        self.grads["log_gamma"][...] = (grad_u * x_hat).sum(axis=0) * np.exp(self.log_gamma) + n * w_logdet

        dx_hat = grad_u * np.exp(self.log_gamma)
        if not train:
            return dx_hat * inv_std

        # batch statistics: var (and the log-det's -0.5*log(var+eps)) depend on x
        dvar = (dx_hat * (x - mean)).sum(axis=0) * (-0.5) * inv_std**3
        dvar += -n * w_logdet * 0.5 / (var + self.eps)
        dmean = -(dx_hat.sum(axis=0)) * inv_std
        return dx_hat * inv_std + dvar * 2.0 * (x - mean) / n + dmean / n

    def invert(self, u):
        std = np.sqrt(self.running_var + self.eps)
        return (u - self.beta) * np.exp(-self.log_gamma) * std + self.running_mean

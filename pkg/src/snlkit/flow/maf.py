"""Conditional masked autoregressive flow: exact density, sampling, persistence."""

import io
import json

import numpy as np

from .layers import BatchNormBijection, MadeLayer
from .masks import build_masks, natural_ordering, reversed_ordering

__all__ = ["FlowConfig", "ConditionalMaf", "FlowError"]

LOG_2PI = float(np.log(2.0 * np.pi))


class FlowError(RuntimeError):
    """Raised when a flow pass produces non-finite intermediate values."""


class FlowConfig:
    """Architecture settings for the conditional flow."""

    def __init__(self, n_layers=5, hidden_sizes=(50, 50), alpha_cap=7.0,
                 bn_eps=1e-5, bn_momentum=0.9, alternate_orderings=True):
        self.n_layers = int(n_layers)
        self.hidden_sizes = tuple(int(h) for h in hidden_sizes)
        self.alpha_cap = float(alpha_cap)
        self.bn_eps = float(bn_eps)
        self.bn_momentum = float(bn_momentum)
        self.alternate_orderings = bool(alternate_orderings)

    def to_dict(self):
        return {
            "n_layers": self.n_layers,
            "hidden_sizes": list(self.hidden_sizes),
            "alpha_cap": self.alpha_cap,
            "bn_eps": self.bn_eps,
            "bn_momentum": self.bn_momentum,
            "alternate_orderings": self.alternate_orderings,
        }


class ConditionalMaf:
    """Stack of masked autoregressive layers interleaved with batch-norm bijections.

    Models the conditional density of a data vector given a conditioning
    vector as a chain of bijections applied to a standard-normal base.
    A freshly constructed flow is an exact identity, so its eval-mode density
    is the standard normal regardless of the conditioner.
    """

    def __init__(self, data_dim, cond_dim, config=None, rng=None, orderings=None):
        if data_dim < 1:
            raise ValueError("data_dim must be >= 1")
        self.data_dim = int(data_dim)
        self.cond_dim = int(cond_dim)
        self.config = config or FlowConfig()
        rng = rng if rng is not None else np.random.default_rng(0)

        cfg = self.config
        if orderings is None:
            orderings = []
            for k in range(cfg.n_layers):
                if cfg.alternate_orderings and k % 2 == 1:
                    orderings.append(reversed_ordering(data_dim))
                else:
                    orderings.append(natural_ordering(data_dim))
        self.orderings = [np.asarray(o, dtype=int) for o in orderings]
        if len(self.orderings) != cfg.n_layers:
            raise ValueError("need one ordering per autoregressive layer")

        self.made_layers = []
        self.bn_layers = []
        self.layers = []
        for k in range(cfg.n_layers):
            masks = build_masks(data_dim, cfg.hidden_sizes, cond_dim, self.orderings[k])
            made = MadeLayer(masks, cond_dim, rng, alpha_cap=cfg.alpha_cap)
            self.made_layers.append(made)
            self.layers.append(made)
            if k < cfg.n_layers - 1:
                bn = BatchNormBijection(data_dim, eps=cfg.bn_eps, momentum=cfg.bn_momentum)
                self.bn_layers.append(bn)
                self.layers.append(bn)
        self._pack_storage()

    # ------------------------------------------------------------------ state

    def _pack_storage(self):
        """Move all parameters (and their grads) into one contiguous buffer.

        The optimizer then updates a single flat array instead of dozens of
        small ones, which dominates the step cost otherwise.
        """
        entries = []
        for layer in self.layers:
            for name, arr in layer.parameters():
                entries.append((layer, name, arr))
        total = sum(arr.size for _, _, arr in entries)
        self._flat_params = np.empty(total)
        self._flat_grads = np.zeros(total)
        offset = 0
        for layer, name, arr in entries:
            block = slice(offset, offset + arr.size)
            view = self._flat_params[block].reshape(arr.shape)
            view[...] = arr
            layer.rebind(name, view)
            layer.grads[name] = self._flat_grads[block].reshape(arr.shape)
            offset += arr.size

    def flat_parameters(self):
        return self._flat_params

    def flat_gradients(self):
        return self._flat_grads

    def parameters(self):
        """(name, array) pairs for every learnable array, in layer order."""
        out = []
        for i, layer in enumerate(self.layers):
            for name, arr in layer.parameters():
                out.append((f"layer{i}_{name}", arr))
        return out

    def gradients(self):
        out = []
        for i, layer in enumerate(self.layers):
            for name, _ in layer.parameters():
                out.append(layer.grads[name])
        return out

    def state_arrays(self):
        """Parameters plus batch-norm buffers; used for checkpointing."""
        out = [arr for _, arr in self.parameters()]
        for bn in self.bn_layers:
            out += [arr for _, arr in bn.buffers()]
        return out

    def copy_state(self):
        return [arr.copy() for arr in self.state_arrays()]

    def load_state(self, arrays):
        targets = self.state_arrays()
        if len(arrays) != len(targets):
            raise ValueError("state size mismatch")
        for dst, src in zip(targets, arrays):
            dst[...] = src

    # ------------------------------------------------------------- evaluation

    def _check_inputs(self, x, cond):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        cond = np.atleast_2d(np.asarray(cond, dtype=float))
        if x.shape[1] != self.data_dim:
            raise ValueError(f"expected data dimension {self.data_dim}, got {x.shape[1]}")
        if cond.shape[1] != self.cond_dim:
            raise ValueError(f"expected conditioner dimension {self.cond_dim}, got {cond.shape[1]}")
        if cond.shape[0] == 1 and x.shape[0] > 1:
            cond = np.broadcast_to(cond, (x.shape[0], self.cond_dim))
        if x.shape[0] == 1 and cond.shape[0] > 1:
            x = np.broadcast_to(x, (cond.shape[0], self.data_dim))
        if x.shape[0] != cond.shape[0]:
            raise ValueError("batch sizes of data and conditioner do not match")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(cond))):
            raise ValueError("non-finite inputs")
        return x, cond

    def forward(self, x, cond, train=False):
        """Map data to the base variable. Returns (u, per-sample total logdet, caches)."""
        u = x
        total = np.zeros(x.shape[0])
        caches = []
        for layer in self.layers:
            if isinstance(layer, MadeLayer):
                u, logdet, cache = layer.forward(u, cond)
            else:
                u, logdet, cache = layer.forward(u, train=train)
            total += logdet
            caches.append(cache)
        return u, total, caches

    def log_prob(self, x, cond, mode="eval"):
        """Exact conditional log-density; scalar for 1-D inputs, else a vector."""
        if mode not in ("eval", "train"):
            raise ValueError("mode must be 'eval' or 'train'")
        scalar = np.asarray(x).ndim == 1
        x, cond = self._check_inputs(x, cond)
        u, total, _ = self.forward(x, cond, train=(mode == "train"))
        lp = -0.5 * self.data_dim * LOG_2PI - 0.5 * np.sum(u * u, axis=1) + total
        return float(lp[0]) if scalar else lp

    def coordinate_log_terms(self, x, cond):
        """Eval-mode per-coordinate decomposition of the log-density.

        Term i collects the base density of u_i plus every per-coordinate
        log-det contribution; the terms sum to log_prob. With natural
        orderings in every layer, term i depends only on coordinates <= i.
        """
        x, cond = self._check_inputs(x, cond)
        terms = np.full((x.shape[0], self.data_dim), -0.5 * LOG_2PI)
        z = x
        for layer in self.layers:
            if isinstance(layer, MadeLayer):
                mu, alpha = layer.heads(z, cond)
                z = (z - mu) * np.exp(-alpha)
                terms -= alpha
            else:
                scale = np.exp(layer.log_gamma) / np.sqrt(layer.running_var + layer.eps)
                z = z * scale + layer.beta - layer.running_mean * scale
                terms += layer.log_gamma - 0.5 * np.log(layer.running_var + layer.eps)
        terms -= 0.5 * z * z
        return terms

    def sample(self, cond, n_samples=1, rng=None):
        """Ancestral sampling: draw the base variable and invert layer by layer."""
        rng = rng if rng is not None else np.random.default_rng()
        cond = np.asarray(cond, dtype=float)
        if cond.ndim == 1:
            cond = np.broadcast_to(cond, (n_samples, self.cond_dim))
        z = rng.standard_normal((n_samples, self.data_dim))
        for layer in reversed(self.layers):
            if isinstance(layer, MadeLayer):
                z = layer.invert(z, cond)
            else:
                z = layer.invert(z)
            if not np.all(np.isfinite(z)):
                raise FlowError("non-finite values produced while sampling")
        return z

    # ------------------------------------------------------------ persistence

    def save(self, path):
        """Write a self-describing binary snapshot (npz)."""
        arrays = {}
        for name, arr in self.parameters():
            arrays[name] = arr
        for i, bn in enumerate(self.bn_layers):
            for name, arr in bn.buffers():
                arrays[f"bn{i}_{name}"] = arr
        for k, ordering in enumerate(self.orderings):
            arrays[f"ordering{k}"] = ordering
        meta = {
            "data_dim": self.data_dim,
            "cond_dim": self.cond_dim,
            "config": self.config.to_dict(),
        }
        arrays["meta_json"] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
        if hasattr(path, "write"):
            np.savez(path, **arrays)
        else:
            with open(path, "wb") as f:
                np.savez(f, **arrays)

    @classmethod
    def load(cls, path):
        with np.load(path) as data:
            meta = json.loads(bytes(data["meta_json"]).decode())
            cfg_dict = meta["config"]
            config = FlowConfig(**cfg_dict)
            orderings = [data[f"ordering{k}"] for k in range(config.n_layers)]
            flow = cls(meta["data_dim"], meta["cond_dim"], config=config,
                       rng=np.random.default_rng(0), orderings=orderings)
            for name, arr in flow.parameters():
                arr[...] = data[name]
            for i, bn in enumerate(flow.bn_layers):
                for name, arr in bn.buffers():
                    arr[...] = data[f"bn{i}_{name}"]
        return flow

    def save_bytes(self):
        buf = io.BytesIO()
        self.save(buf)
        return buf.getvalue()

    def observed_density(self, x_obs):
        """Frozen fast evaluator of theta -> log q(x_obs | theta) in eval mode.

        Snapshots the current parameters, so train or mutate the flow first.
        Intended for MCMC targets, where the same data vector is scored at
        many parameter values.
        """
        return ObservedDensity(self, x_obs)


class ObservedDensity:
    """Precomputed eval-mode density of one data vector as a function of theta.

    Caches the masked weight products, folds each batch-norm bijection into an
    affine pair plus a constant log-det (eval mode uses running statistics
    only), and precomputes the first layer's data-path activation, which never
    changes because the data vector is fixed. Only the conditioner path and
    the downstream layers are evaluated per call.
    """

    def __init__(self, flow, x_obs):
        x = np.asarray(x_obs, dtype=float)
        if x.shape != (flow.data_dim,):
            raise ValueError("observed vector has the wrong dimension")
        self.data_dim = flow.data_dim
        self.cond_dim = flow.cond_dim
        self.alpha_cap = float(flow.config.alpha_cap)
        self.x_obs = x.copy()

        self._made = []
        self._bn = []
        const_logdet = 0.0
        first = True
        for layer in flow.layers:
            if isinstance(layer, MadeLayer):
                ws, vm, va = layer._masked_weights()
                pre0 = x @ ws[0] + layer.bs[0] if first else None
                heads = np.concatenate([vm, va], axis=1)
                head_bias = np.concatenate([layer.bm, layer.ba])
                self._made.append((
                    [w.copy() for w in ws], [b.copy() for b in layer.bs],
                    layer.A.copy(), heads, head_bias, pre0,
                ))
                first = False
            else:
                eps = layer.eps
                scale = np.exp(layer.log_gamma) / np.sqrt(layer.running_var + eps)
                shift = layer.beta - layer.running_mean * scale
                const_logdet += float(np.sum(
                    layer.log_gamma - 0.5 * np.log(layer.running_var + eps)))
                self._bn.append((scale, shift))
        self._const_logdet = const_logdet

    def logpdf(self, theta):
        theta = np.asarray(theta, dtype=float)
        cap = self.alpha_cap
        d = self.data_dim
        z = self.x_obs
        logdet = self._const_logdet
        for k, (ws, bs, a_mat, heads, head_bias, pre0) in enumerate(self._made):
            pre = pre0 + theta @ a_mat if pre0 is not None else z @ ws[0] + bs[0] + theta @ a_mat
            h = np.tanh(pre)
            for w, b in zip(ws[1:], bs[1:]):
                h = np.tanh(h @ w + b)
            out = h @ heads + head_bias
            alpha = cap * np.tanh(out[d:] / cap)
            z = (z - out[:d]) * np.exp(-alpha)
            logdet -= alpha.sum()
            if k < len(self._bn):
                scale, shift = self._bn[k]
                z = z * scale + shift
        return -0.5 * d * LOG_2PI - 0.5 * (z @ z) + logdet

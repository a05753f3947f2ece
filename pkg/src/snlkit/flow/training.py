"""Maximum-likelihood training of the conditional flow with early stopping."""

from dataclasses import dataclass

import numpy as np

__all__ = ["TrainConfig", "TrainResult", "Adam", "train_flow"]


@dataclass
class TrainConfig:
    batch_size: int = 100
    learning_rate: float = 1e-4
    val_fraction: float = 0.05
    patience: int = 20
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    max_epochs: int | None = None
    # floor on optimizer steps before early stopping may fire: small training
    # sets have few steps per epoch, and their validation loss crosses a
    # transient bump wider than the patience window before the real descent
    min_steps: int = 4000
    # replace the momentum running statistics with full-training-set batch
    # statistics once training finishes; momentum statistics only reflect the
    # last few minibatches, which jitters every downstream density evaluation
    refresh_stats: bool = True

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must lie in (0, 1)")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


@dataclass
class TrainResult:
    flow: object
    best_val_loss: float
    best_epoch: int
    n_epochs: int
    val_losses: list


class Adam:
    """Adam over a list of numpy arrays, updated in place."""

    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1**self.t
        bias2 = 1.0 - b2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)


def loss_and_backward(flow, x, cond, train=True):
    """Negative mean conditional log-likelihood; fills flow gradients."""
    u, total_logdet, caches = flow.forward(x, cond, train=train)
    n = x.shape[0]
    d = flow.data_dim
    loss = 0.5 * d * np.log(2.0 * np.pi) + 0.5 * np.mean(np.sum(u * u, axis=1)) - np.mean(total_logdet)

    grad_u = u / n
    w_logdet = -1.0 / n
    for layer, cache in zip(reversed(flow.layers), reversed(caches)):
        grad_u = layer.backward(cache, grad_u, w_logdet)
    return float(loss)


def _minibatches(indices, batch_size):
    n = indices.size
    if n == 1:
        # degenerate two-record store: repeat the lone training point so the
        # batch-norm pass stays defined
        return [np.repeat(indices, 2)]
    edges = list(range(0, n, batch_size))
    batches = [indices[a:a + batch_size] for a in edges]
    # batch-norm needs >= 2 samples; fold a trailing singleton into its neighbour
    if len(batches) > 1 and batches[-1].size == 1:
        batches[-2] = np.concatenate([batches[-2], batches[-1]])
        batches.pop()
    return batches


def train_flow(flow, cond, x, config=None):
    """Fit the flow to (conditioner, data) pairs by maximum likelihood.

    Uses Adam on minibatches, holds out a random validation fraction, and
    stops once the validation loss has not improved for `patience` epochs,
    restoring the parameters (and batch-norm statistics) of the best epoch.
    """
    config = config or TrainConfig()
    cond = np.asarray(cond, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or cond.ndim != 2 or x.shape[0] != cond.shape[0]:
        raise ValueError("expected matching 2-D arrays of pairs")
    n = x.shape[0]
    if n < 2:
        raise ValueError("need at least 2 records to train")
    if np.all(x == x[0]):
        raise ValueError("degenerate training data: all data vectors identical")

    rng = np.random.default_rng(config.seed)
    perm = rng.permutation(n)
    n_val = max(1, int(round(config.val_fraction * n)))
    if n_val >= n:
        n_val = n - 1
    val_idx = perm[:n_val]
    train_idx = perm[n_val:]

    x_val, c_val = x[val_idx], cond[val_idx]
    optimizer = Adam([flow.flat_parameters()], config.learning_rate,
                     config.beta1, config.beta2, config.adam_eps)

    steps_per_epoch = len(_minibatches(train_idx, config.batch_size))
    min_epochs = -(-config.min_steps // steps_per_epoch) if config.min_steps else 0

    best_val = np.inf
    best_state = flow.copy_state()
    best_epoch = 0
    stall = 0
    epoch = 0
    val_losses = []

    while True:
        epoch += 1
        order = train_idx[rng.permutation(train_idx.size)]
        for batch in _minibatches(order, config.batch_size):
            loss_and_backward(flow, x[batch], cond[batch], train=True)
            optimizer.step([flow.flat_gradients()])

        val_loss = float(-np.mean(flow.log_prob(x_val, c_val, mode="eval")))
        val_losses.append(val_loss)

        if val_loss < best_val:
            best_val = val_loss
            best_state = flow.copy_state()
            best_epoch = epoch
            stall = 0
        else:
            stall += 1
        if epoch >= min_epochs and stall >= config.patience:
            break
        if config.max_epochs is not None and epoch >= config.max_epochs:
            break

    flow.load_state(best_state)
    if config.refresh_stats:
        refresh_batch_norm_stats(flow, cond[train_idx], x[train_idx])
        best_val = float(-np.mean(flow.log_prob(x_val, c_val, mode="eval")))
    return TrainResult(flow=flow, best_val_loss=best_val, best_epoch=best_epoch,
                       n_epochs=epoch, val_losses=val_losses)


def refresh_batch_norm_stats(flow, cond, x):
    """Set every batch-norm layer's running statistics from the full data.

    Walks the stack once, replacing each normalization layer's running mean
    and variance with the statistics of its input activations over all rows.
    """
    from .layers import MadeLayer

    z = np.asarray(x, dtype=float)
    cond = np.asarray(cond, dtype=float)
    for layer in flow.layers:
        if isinstance(layer, MadeLayer):
            z, _, _ = layer.forward(z, cond)
        else:
            layer.running_mean[:] = z.mean(axis=0)
            layer.running_var[:] = z.var(axis=0)
            z, _, _ = layer.forward(z, train=False)

"""Connectivity masks enforcing autoregressive structure in masked layers."""

import numpy as np

__all__ = ["MaskSet", "build_masks", "natural_ordering", "reversed_ordering"]


def natural_ordering(data_dim):
    """Degree assignment 1..D in coordinate order."""
    return np.arange(1, data_dim + 1)


def reversed_ordering(data_dim):
    """Degree assignment D..1 in coordinate order."""
    return np.arange(data_dim, 0, -1)


class MaskSet:
    """Binary masks for one masked autoregressive layer.

    Every unit carries an integer degree. A hidden unit of degree d receives
    input only from units of degree <= d; the output heads for the coordinate
    of degree d receive input only from units of degree strictly below d.
    Conditioner inputs are unmasked and feed every first-layer hidden unit.
    """

    def __init__(self, input_degrees, hidden_degrees, hidden_masks, out_mask, cond_dim):
        self.input_degrees = input_degrees
        self.hidden_degrees = hidden_degrees
        self.hidden_masks = hidden_masks
        self.out_mask = out_mask
        self.cond_dim = cond_dim

    @property
    def data_dim(self):
        return self.input_degrees.size

    @property
    def hidden_sizes(self):
        return tuple(d.size for d in self.hidden_degrees)

    def cond_mask(self):
        """All-ones connectivity from conditioner inputs to the first hidden layer."""
        return np.ones((self.cond_dim, self.hidden_degrees[0].size))

    def data_to_output_connectivity(self):
        """Boolean matrix C with C[j, i] true iff input j has a path to output head i.

        Computed by multiplying the masks along the network, so it reflects the
        actual connectivity rather than the intended degree rule.
        """
        prod = self.hidden_masks[0].astype(float)
        for m in self.hidden_masks[1:]:
            prod = prod @ m
        prod = prod @ self.out_mask
        return prod > 0


def build_masks(data_dim, hidden_sizes, cond_dim, ordering=None):
    """Build the mask set for one autoregressive layer.

    `ordering` assigns a degree (a permutation of 1..data_dim) to each input
    coordinate; None means the natural ordering. Hidden degrees cycle over
    1..data_dim-1, so for data_dim == 1 every data-input connection is masked
    out and the outputs depend on the conditioner alone.
    """
    if data_dim < 1:
        raise ValueError("data_dim must be >= 1")
    if any(h < 1 for h in hidden_sizes):
        raise ValueError("hidden layer sizes must be >= 1")
    if cond_dim < 0:
        raise ValueError("cond_dim must be >= 0")

    if ordering is None:
        input_degrees = natural_ordering(data_dim)
    else:
        input_degrees = np.asarray(ordering, dtype=int)
        if not np.array_equal(np.sort(input_degrees), np.arange(1, data_dim + 1)):
            raise ValueError("ordering must be a permutation of 1..data_dim")

    hidden_degrees = [
        np.arange(n) % max(1, data_dim - 1) + min(1, data_dim - 1)
        for n in hidden_sizes
    ]

    degrees = [input_degrees] + hidden_degrees
    hidden_masks = [
        (prev[:, None] <= cur[None, :]).astype(float)
        for prev, cur in zip(degrees[:-1], degrees[1:])
    ]
    out_mask = (hidden_degrees[-1][:, None] < input_degrees[None, :]).astype(float)

    return MaskSet(input_degrees, hidden_degrees, hidden_masks, out_mask, cond_dim)

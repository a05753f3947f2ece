"""Growing set of (parameters, data) pairs with per-round bookkeeping."""

import json

import numpy as np

__all__ = ["SimulationStore"]


class SimulationStore:
    """Ordered (theta, x) records tagged by the round that produced them."""

    def __init__(self, dim_theta, dim_x):
        self.dim_theta = int(dim_theta)
        self.dim_x = int(dim_x)
        self._thetas = []
        self._xs = []
        self._rounds = []

    def __len__(self):
        return len(self._thetas)

    @property
    def n_rounds(self):
        return max(self._rounds, default=0)

    def add_batch(self, thetas, xs, round_index):
        thetas = np.asarray(thetas, dtype=float)
        xs = np.asarray(xs, dtype=float)
        if thetas.shape != (xs.shape[0], self.dim_theta) or xs.shape[1] != self.dim_x:
            raise ValueError("record dimensions do not match the store")
        if self._rounds and round_index < self._rounds[-1]:
            raise ValueError("round indices must be non-decreasing")
        for th, x in zip(thetas, xs):
            self._thetas.append(th)
            self._xs.append(x)
            self._rounds.append(int(round_index))

    def arrays(self):
        return np.array(self._thetas), np.array(self._xs)

    def rounds(self):
        return np.array(self._rounds, dtype=int)

    def round_arrays(self, round_index):
        mask = np.array(self._rounds) == round_index
        if not mask.any():
            raise ValueError(f"no records for round {round_index}")
        thetas, xs = self.arrays()
        return thetas[mask], xs[mask]

    def save_jsonl(self, path):
        with open(path, "w") as f:
            for th, x, r in zip(self._thetas, self._xs, self._rounds):
                f.write(json.dumps({"round": r, "theta": th.tolist(), "x": x.tolist()}))
                f.write("\n")

    @classmethod
    def load_jsonl(cls, path):
        records = []
        with open(path) as f:
            for line in f:
                if line.strip():
                    records.append(json.loads(line))
        if not records:
            raise ValueError(f"empty store file {path}")
        store = cls(len(records[0]["theta"]), len(records[0]["x"]))
        for rec in records:
            store._thetas.append(np.array(rec["theta"], dtype=float))
            store._xs.append(np.array(rec["x"], dtype=float))
            store._rounds.append(int(rec["round"]))
        return store

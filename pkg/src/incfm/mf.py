"""Matrix factorization baselines fitted to the constant target 1.

Users and items live in growable latent tables keyed by arbitrary hashable
IDs.  A key seen for the first time gets a Gaussian vector from the model's
generator, so vectors depend only on the seed and the order keys show up.
"""

from __future__ import annotations

import numpy as np


class LatentTable:
    """Key -> row mapping over a contiguous ``(n, k)`` array."""

    def __init__(self, k):
        self.k = k
        self.rows = {}
        self._data = np.zeros((16, k))

    def __len__(self):
        return len(self.rows)

    def __contains__(self, key):
        return key in self.rows

    @property
    def matrix(self):
        return self._data[: len(self.rows)]

    def insert(self, key, vector):
        n = len(self.rows)
        if n == self._data.shape[0]:
            grown = np.zeros((2 * n, self.k))
            grown[:n] = self._data
            self._data = grown
        self._data[n] = vector
        self.rows[key] = n
        return n

    def __getitem__(self, key):
        return self._data[self.rows[key]]


class MfModel:
    def __init__(self, k, eta, lam, init_sigma=0.01, seed=0):
        if k < 1:
            raise ValueError("k must be >= 1")
        if not eta > 0:
            raise ValueError("eta must be > 0")
        if lam < 0:
            raise ValueError("lambda must be >= 0")
        if not init_sigma > 0:
            raise ValueError("init_sigma must be > 0")
        self.k = k
        self.eta = float(eta)
        self.lam = float(lam)
        self.init_sigma = float(init_sigma)
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.P = LatentTable(k)
        self.Q = LatentTable(k)

    def _ensure(self, table, key):
        row = table.rows.get(key)
        if row is None:
            row = table.insert(key, self.rng.normal(0.0, self.init_sigma, self.k))
        return row

    def ensure_user(self, key):
        return self._ensure(self.P, key)

    def ensure_item(self, key):
        return self._ensure(self.Q, key)

    def state_bytes(self):
        return self.P.matrix.tobytes() + self.Q.matrix.tobytes()


def imf_update(model, user, item):
    """One joint SGD step pulling ``p_u . q_i`` toward 1, in place.

    Both right-hand sides read the pre-update vectors.
    """
    u = model.ensure_user(user)
    i = model.ensure_item(item)
    p = model.P.matrix[u]
    q = model.Q.matrix[i]
    err = 1.0 - float(p @ q)
    step = 2.0 * model.eta
    p_new = p + step * (err * q - model.lam * p)
    q_new = q + step * (err * p - model.lam * q)
    model.P.matrix[u] = p_new
    model.Q.matrix[i] = q_new
    return model


def mf_batch_train(model, events, epochs, seed):
    """Lazily register every key in ``events`` order, then run shuffled epochs."""
    if epochs < 0:
        raise ValueError("epochs must be >= 0")
    for user, item in events:
        model.ensure_user(user)
        model.ensure_item(item)
    for epoch in range(epochs):
        order = np.random.default_rng([seed, epoch]).permutation(len(events))
        for j in order:
            imf_update(model, *events[j])
    return model


def mf_score_items(model, user, items):
    """``p_u . q_i`` for each item; unknown keys are registered first."""
    u = model.ensure_user(user)
    rows = np.fromiter((model.ensure_item(i) for i in items), dtype=np.int64, count=len(items))
    return model.Q.matrix[rows] @ model.P.matrix[u]

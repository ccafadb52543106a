"""Second-order factorization machine: parameters, prediction and gradients.

Prediction uses the factored form of the pairwise interaction term, so the
cost is linear in the number of nonzero input entries.  A naive double loop
over feature pairs is kept alongside as a reference oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DimensionError(ValueError):
    """Raised when an input vector addresses features the model does not have."""


class SparseVector:
    """Index/value pairs over a feature space of size ``dim``.

    Indices are strictly increasing and explicit zeros are dropped, so
    ``nnz`` is the number of nonzero features.
    """

    __slots__ = ("dim", "indices", "values")

    def __init__(self, dim, indices=(), values=()):
        indices = np.asarray(indices, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if indices.shape != values.shape or indices.ndim != 1:
            raise ValueError("indices and values must be 1-d arrays of equal length")
        if dim < 0:
            raise ValueError("dim must be non-negative")
        if indices.size:
            if np.any(np.diff(indices) <= 0):
                raise ValueError("indices must be strictly increasing")
            if indices[0] < 0 or indices[-1] >= dim:
                raise ValueError(f"index out of range for dim={dim}")
        keep = values != 0.0
        if not keep.all():
            indices, values = indices[keep], values[keep]
        self.dim = int(dim)
        self.indices = indices
        self.values = values

    @classmethod
    def from_dict(cls, dim, entries):
        """Build from an ``{index: value}`` mapping in any order."""
        keys = sorted(entries)
        return cls(dim, keys, [entries[i] for i in keys])

    @classmethod
    def concat(cls, dim, *parts):
        """Merge fragments with disjoint index sets into one vector."""
        idx = np.concatenate([p.indices for p in parts]) if parts else np.empty(0, np.int64)
        val = np.concatenate([p.values for p in parts]) if parts else np.empty(0)
        order = np.argsort(idx, kind="stable")
        return cls(dim, idx[order], val[order])

    @property
    def nnz(self):
        return int(self.indices.size)

    def to_dense(self):
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out

    def __eq__(self, other):
        if not isinstance(other, SparseVector):
            return NotImplemented
        return (
            self.dim == other.dim
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self):
        pairs = ", ".join(f"{i}: {v:g}" for i, v in zip(self.indices, self.values))
        return f"SparseVector(dim={self.dim}, {{{pairs}}})"


class OpCounter:
    """Tally of scalar multiply-adds performed by the instrumented kernels.

    Each vectorised array operation adds the number of elements it touches.
    """

    def __init__(self):
        self.count = 0

    def add(self, n):
        self.count += int(n)


def _tally(counter, n):
    if counter is not None:
        counter.add(n)


@dataclass(eq=False)
class FmModel:
    k: int
    eta: float
    lambda0: float
    lambda_w: float
    lambda_v: np.ndarray
    init_sigma: float
    seed: int
    w0: float = 0.0
    w: np.ndarray = field(default_factory=lambda: np.zeros(0))
    V: np.ndarray = None
    rng: np.random.Generator = field(default=None, repr=False)

    def __post_init__(self):
        if self.V is None:
            self.V = np.zeros((0, self.k))
        if self.rng is None:
            self.rng = np.random.default_rng(self.seed)

    @property
    def d(self):
        return int(self.w.shape[0])

    def copy(self):
        rng = np.random.default_rng()
        rng.bit_generator.state = self.rng.bit_generator.state
        return FmModel(
            k=self.k, eta=self.eta, lambda0=self.lambda0, lambda_w=self.lambda_w,
            lambda_v=self.lambda_v.copy(), init_sigma=self.init_sigma, seed=self.seed,
            w0=self.w0, w=self.w.copy(), V=self.V.copy(), rng=rng,
        )

    def state_bytes(self):
        """Raw bytes of every parameter; equal bytes means bit-identical models."""
        head = np.array([self.w0, self.lambda0, self.lambda_w], dtype=np.float64)
        return b"".join(
            a.tobytes() for a in (head, self.lambda_v, self.w, self.V)
        )


def fm_init(d, k, eta, lambdas=(0.0, 0.0, 0.0), sigma=0.01, seed=0):
    """Create a model with zero bias and linear weights and Gaussian factors.

    ``lambdas`` is ``(lambda0, lambda_w, lambda_v)`` where ``lambda_v`` is a
    scalar (shared by all factors) or a length-``k`` sequence.
    """
    if d < 0:
        raise ValueError("d must be >= 0")
    if k < 1:
        raise ValueError("k must be >= 1")
    if not eta > 0:
        raise ValueError("eta must be > 0")
    if not sigma > 0:
        raise ValueError("sigma must be > 0")
    lambda0, lambda_w, lambda_v = lambdas
    lambda_v = np.broadcast_to(np.asarray(lambda_v, dtype=np.float64), (k,)).copy()
    if lambda0 < 0 or lambda_w < 0 or np.any(lambda_v < 0):
        raise ValueError("regularization parameters must be >= 0")
    rng = np.random.default_rng(seed)
    V = rng.normal(0.0, sigma, size=(d, k))
    return FmModel(
        k=k, eta=float(eta), lambda0=float(lambda0), lambda_w=float(lambda_w),
        lambda_v=lambda_v, init_sigma=float(sigma), seed=seed,
        w0=0.0, w=np.zeros(d), V=V, rng=rng,
    )


def check_dim(model, x):
    if x.dim > model.d:
        raise DimensionError(f"input dim {x.dim} exceeds model dim {model.d}")


def factor_sums(model, x, counter=None):
    """Per-factor sums ``sum_i v_if x_i`` and ``sum_i v_if^2 x_i^2``.

    These are shared by prediction, the parameter gradient and the
    regularization gradient.
    """
    Vx = model.V[x.indices]
    xv = x.values[:, None]
    weighted = Vx * xv
    s = weighted.sum(axis=0)
    sq = (weighted * weighted).sum(axis=0)
    _tally(counter, 2 * weighted.size)
    return Vx, s, sq


def _predict_from_sums(model, x, s, sq, counter=None):
    linear = float(model.w[x.indices] @ x.values)
    _tally(counter, x.nnz + model.k)
    return model.w0 + linear + 0.5 * float(s @ s - sq.sum())


def fm_predict(model, x, counter=None):
    """FM output ``w0 + <w, x> + sum_{i<j} <v_i, v_j> x_i x_j``."""
    check_dim(model, x)
    _, s, sq = factor_sums(model, x, counter)
    return _predict_from_sums(model, x, s, sq, counter)


def fm_predict_naive(model, x):
    """Same value as :func:`fm_predict` by explicit enumeration of all pairs."""
    check_dim(model, x)
    dense = np.zeros(model.d)
    dense[x.indices] = x.values
    y = model.w0 + sum(model.w[i] * dense[i] for i in range(model.d))
    for i in range(model.d):
        for j in range(i + 1, model.d):
            y += float(model.V[i] @ model.V[j]) * dense[i] * dense[j]
    return float(y)


@dataclass
class FmGradient:
    """Gradient of the squared loss, restricted to the active features of ``x``."""

    dW0: float
    indices: np.ndarray
    dW: np.ndarray  # aligned with ``indices``
    dV: np.ndarray  # shape (nnz, k), rows aligned with ``indices``
    prediction: float


def fm_gradient_squared_loss(model, x, y, counter=None):
    check_dim(model, x)
    Vx, s, sq = factor_sums(model, x, counter)
    y_hat = _predict_from_sums(model, x, s, sq, counter)
    g = 2.0 * (y_hat - y)
    xv = x.values[:, None]
    dV = g * (xv * s - Vx * (xv * xv))
    _tally(counter, 2 * dV.size)
    return FmGradient(
        dW0=g, indices=x.indices, dW=g * x.values, dV=dV, prediction=y_hat,
    )

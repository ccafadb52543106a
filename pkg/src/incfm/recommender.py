"""Candidate scoring and ranking by closeness of the prediction to 1."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .fm import DimensionError, FmModel, SparseVector, check_dim, factor_sums
from .mf import MfModel, mf_score_items


class Catalog:
    """Insertion-ordered item registry.

    For FM scoring each item carries its feature block (ID one-hot plus
    attributes); the blocks are stacked into a sparse matrix on demand.
    """

    def __init__(self):
        self.keys = []
        self.position = {}
        self.blocks = []
        self._matrix = None

    def __len__(self):
        return len(self.keys)

    def __contains__(self, key):
        return key in self.position

    def __iter__(self):
        return iter(self.keys)

    def add(self, key, block=None):
        if key in self.position:
            return self.position[key]
        self.position[key] = len(self.keys)
        self.keys.append(key)
        self.blocks.append(block)
        self._matrix = None
        return self.position[key]

    def item_design(self):
        """Item blocks as a CSR matrix over the features they use.

        Returns ``(features, X, X_sq)``: column ``c`` of ``X`` is model feature
        ``features[c]``, and ``X_sq`` holds the squared values.
        """
        if self._matrix is None:
            indptr = np.zeros(len(self.blocks) + 1, dtype=np.int64)
            indptr[1:] = np.cumsum([b.nnz for b in self.blocks])
            indices = np.concatenate([b.indices for b in self.blocks])
            values = np.concatenate([b.values for b in self.blocks])
            features, columns = np.unique(indices, return_inverse=True)
            shape = (len(self.blocks), features.size)
            X = sp.csr_matrix((values, columns, indptr), shape=shape)
            X_sq = sp.csr_matrix((values * values, columns, indptr), shape=shape)
            self._matrix = (features, X, X_sq)
        return self._matrix


@dataclass
class EventContext:
    """What the scorer needs about one event: who, and the shared FM block."""

    user: object
    block: SparseVector | None = None


@dataclass
class ScoredList:
    """Catalog ranked by ``|score - 1|`` ascending; ties keep catalog order."""

    keys: list
    scores: np.ndarray
    order: np.ndarray  # catalog positions, best first

    def __len__(self):
        return len(self.order)

    @property
    def distances(self):
        return np.abs(self.scores[self.order] - 1.0)

    @property
    def entries(self):
        return [
            (self.keys[j], float(self.scores[j]), abs(float(self.scores[j]) - 1.0))
            for j in self.order
        ]

    def ranked_keys(self):
        return [self.keys[j] for j in self.order]


def rank_by_closeness(keys, scores, exclude=None):
    scores = np.asarray(scores, dtype=np.float64)
    candidates = np.arange(len(keys))
    if exclude:
        candidates = np.array([j for j in candidates if keys[j] not in exclude], dtype=np.int64)
    # stable sort: equal distances stay in catalog insertion order
    order = candidates[np.argsort(np.abs(scores[candidates] - 1.0), kind="stable")]
    return ScoredList(keys=list(keys), scores=scores, order=order)


def fm_score_catalog(model, context_block, catalog):
    """Predictions for every catalog item combined with ``context_block``.

    Context and item blocks touch disjoint features, so the factor sums of
    the joint vector are the sums of the two parts.
    """
    check_dim(model, context_block)
    features, X, X_sq = catalog.item_design()
    if features.size and features[-1] >= model.d:
        raise DimensionError("catalog references features beyond the model dimension")
    _, s_ctx, sq_ctx = factor_sums(model, context_block)
    base = model.w0 + float(model.w[context_block.indices] @ context_block.values)
    V_items = model.V[features]
    S = X @ V_items
    SQ = X_sq @ (V_items * V_items)
    S += s_ctx
    pair = (S * S).sum(axis=1) - SQ.sum(axis=1) - sq_ctx.sum()
    return base + X @ model.w[features] + 0.5 * pair


def score_all(model, context, catalog, exclude=None):
    """Score and rank the whole catalog for one event."""
    if len(catalog) == 0:
        raise ValueError("empty catalog")
    if isinstance(model, FmModel):
        scores = fm_score_catalog(model, context.block, catalog)
    elif isinstance(model, MfModel):
        u = model.P.rows.get(context.user)
        rows = [model.Q.rows.get(k) for k in catalog.keys]
        if u is None or None in rows:
            scores = mf_score_items(model, context.user, catalog.keys)
        else:
            scores = model.Q.matrix[rows] @ model.P.matrix[u]
    else:
        raise TypeError(f"unsupported model type {type(model).__name__}")
    return rank_by_closeness(catalog.keys, scores, exclude)


def top_n(scored, n):
    if n < 1:
        raise ValueError("n must be >= 1")
    return [scored.keys[j] for j in scored.order[:n]]


def rank_of(scored, target):
    """Zero-based position of ``target`` in the ranking."""
    try:
        j = scored.keys.index(target)
    except ValueError:
        raise KeyError(f"{target!r} is not in the catalog") from None
    hits = np.flatnonzero(scored.order == j)
    if hits.size == 0:
        raise KeyError(f"{target!r} was excluded from the ranking")
    return int(hits[0])

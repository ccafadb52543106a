"""Adapters exposing FM and MF models through the prequential hooks.

A runner owns its model, the item catalog and (for FM) the feature encoder.
``prepare`` must be called for an event before ``recommend``/``update``; it
registers new users, items and feature values and grows the model, so the
true item is always rankable.  ``observe`` commits the event to history.
"""

from __future__ import annotations

from collections import defaultdict

from .fm import SparseVector
from .mf import imf_update, mf_batch_train
from .online import UpdatePolicy, batch_train, grow_model, incremental_step
from .recommender import Catalog, EventContext, score_all


class _Runner:
    def __init__(self, model, online, exclude_consumed=False):
        self.model = model
        self.online = online
        self.catalog = Catalog()
        self.exclude_consumed = exclude_consumed
        self.consumed = defaultdict(set)

    def _exclude(self, event):
        return self.consumed.get(event.user) if self.exclude_consumed else None

    def observe(self, event):
        if self.exclude_consumed:
            self.consumed[event.user].add(event.item)


class FmRunner(_Runner):
    def __init__(self, model, encoder, policy=UpdatePolicy(), online=True, exclude_consumed=False):
        super().__init__(model, online, exclude_consumed)
        self.encoder = encoder
        self.policy = policy
        self._pending = None

    def prepare(self, event):
        block = self.encoder.context(event)
        if event.item not in self.catalog:
            self.catalog.add(event.item, self.encoder.item_block(event.item))
        grow_model(self.model, self.encoder.registry.dim)
        self._pending = (event, block)

    def _context_block(self, event):
        if self._pending is None or self._pending[0] is not event:
            self.prepare(event)
        return self._pending[1]

    def input_vector(self, event):
        """The training vector of ``event``: its context joined with its own item."""
        block = self._context_block(event)
        item = self.catalog.blocks[self.catalog.position[event.item]]
        return SparseVector.concat(self.model.d, block, item)

    def batch_train(self, events):
        train = []
        for event in events:
            self.prepare(event)
            train.append((self.input_vector(event), 1.0))
            self.observe(event)
        if train:
            batch_train(self.model, train, self.policy)

    def recommend(self, event):
        ctx = EventContext(event.user, self._context_block(event))
        return score_all(self.model, ctx, self.catalog, self._exclude(event))

    def update(self, event):
        incremental_step(self.model, self.input_vector(event), self.policy)

    def observe(self, event):
        super().observe(event)
        self.encoder.observe(event)
        self._pending = None


class MfRunner(_Runner):
    def __init__(self, model, online=True, epochs=30, shuffle_seed=0, exclude_consumed=False):
        super().__init__(model, online, exclude_consumed)
        self.epochs = epochs
        self.shuffle_seed = shuffle_seed

    def prepare(self, event):
        self.model.ensure_user(event.user)
        self.catalog.add(event.item)
        self.model.ensure_item(event.item)

    def batch_train(self, events):
        for event in events:
            self.prepare(event)
            self.observe(event)
        mf_batch_train(self.model, [(e.user, e.item) for e in events], self.epochs, self.shuffle_seed)

    def recommend(self, event):
        return score_all(self.model, EventContext(event.user), self.catalog, self._exclude(event))

    def update(self, event):
        imf_update(self.model, event.user, event.item)

from __future__ import annotations


class FeatureRegistry:
    """Growable map from ``(field, value)`` to a feature index.

    Indices are handed out in first-encounter order and never reassigned, so
    replaying a stream prefix reproduces the same layout.  Scalar fields use
    ``value=None``.
    """

    def __init__(self):
        self._index = {}

    @property
    def dim(self):
        return len(self._index)

    def __contains__(self, key):
        return key in self._index

    def __len__(self):
        return len(self._index)

    def get(self, field, value=None):
        key = (field, value)
        idx = self._index.get(key)
        if idx is None:
            idx = self._index[key] = len(self._index)
        return idx

    def lookup(self, field, value=None):
        return self._index[(field, value)]

    def reserve(self, field, values):
        """Register a whole categorical block up front."""
        return [self.get(field, v) for v in values]

    def field_size(self, field):
        return sum(1 for f, _ in self._index if f == field)

    def items(self):
        return self._index.items()

"""MovieLens 100k: loading, binarization to 5-star events, feature encoding."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from ..fm import SparseVector
from .registry import FeatureRegistry

GENRES = (
    "unknown", "Action", "Adventure", "Animation", "Children's", "Comedy",
    "Crime", "Documentary", "Drama", "Fantasy", "Film-Noir", "Horror",
    "Musical", "Mystery", "Romance", "Sci-Fi", "Thriller", "War", "Western",
)
# "unknown" is not a genre
ENCODED_GENRES = GENRES[1:]


class DataFormatError(ValueError):
    pass


@dataclass(frozen=True)
class RatingEvent:
    user: int
    item: int
    rating: int
    timestamp: int


@dataclass(frozen=True)
class UserInfo:
    age: int
    gender: str
    occupation: str


def _read_lines(path, encoding="latin-1"):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    with open(path, encoding=encoding, newline="") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\r\n")
            if line:
                yield lineno, line


def _parse(path, lineno, fn):
    try:
        return fn()
    except (ValueError, IndexError) as exc:
        raise DataFormatError(f"{path}:{lineno}: malformed line ({exc})") from None


def load_movielens(data_path, user_path, item_path):
    """Read the native files and keep only rating == 5 events.

    Returns ``(events, users, items)``: events stably sorted by timestamp,
    and user/item tables restricted to IDs that occur in those events.
    Item values are the 19 genre flags in file order.
    """
    events = []
    for lineno, line in _read_lines(data_path):
        def row():
            u, i, r, t = line.split("\t")
            return RatingEvent(int(u), int(i), int(r), int(t))
        ev = _parse(data_path, lineno, row)
        if ev.rating == 5:
            events.append(ev)
    events.sort(key=lambda e: e.timestamp)

    users = {}
    for lineno, line in _read_lines(user_path):
        def row():
            uid, age, gender, occ, _zip = line.split("|")
            if gender not in ("M", "F"):
                raise ValueError(f"gender {gender!r}")
            return int(uid), UserInfo(int(age), gender, occ)
        uid, info = _parse(user_path, lineno, row)
        users[uid] = info

    items = {}
    for lineno, line in _read_lines(item_path):
        def row():
            parts = line.split("|")
            flags = tuple(int(v) for v in parts[-len(GENRES):])
            if len(parts) < 5 + len(GENRES) or any(f not in (0, 1) for f in flags):
                raise ValueError("expected 19 binary genre flags")
            return int(parts[0]), flags
        iid, flags = _parse(item_path, lineno, row)
        items[iid] = flags

    seen_users = {e.user for e in events}
    seen_items = {e.item for e in events}
    missing = (seen_users - users.keys()) | {("item", i) for i in seen_items - items.keys()}
    if missing:
        raise DataFormatError(f"events reference unknown ids: {sorted(missing, key=str)[:5]}")
    users = {u: users[u] for u in sorted(seen_users)}
    items = {i: items[i] for i in sorted(seen_items)}
    return events, users, items


def weekday(timestamp):
    return datetime.fromtimestamp(timestamp, tz=timezone.utc).weekday()


def encode_ml100k(event, candidate, history, registry, users, items):
    """Full input vector for ``event`` scored against ``candidate``.

    ``history`` maps user -> ``(last item, last timestamp)`` for events
    already consumed.  The registry grows as new values show up.
    """
    ctx = MovieLensEncoder.context_entries(event, history, registry, users, items)
    item = MovieLensEncoder.item_entries(candidate, registry, items)
    ctx.update(item)
    return SparseVector.from_dict(registry.dim, ctx)


class MovieLensEncoder:
    """Stateful encoder: owns the feature registry and the rating history.

    The vector for (event, candidate) is the concatenation of a context block
    shared by every candidate (user ID, demographics, last-rated genres, day,
    last-rated day) and the candidate's item block (movie ID, genres).
    """

    def __init__(self, users, items, registry=None):
        self.users = users
        self.items = items
        self.registry = registry if registry is not None else FeatureRegistry()
        self.history = {}

    @staticmethod
    def context_entries(event, history, registry, users, items):
        info = users[event.user]
        out = {
            registry.get("user", event.user): 1.0,
            registry.get("occupation", info.occupation): 1.0,
            registry.get("sex"): 1.0 if info.gender == "M" else 0.0,
            registry.get("age"): info.age / 100.0,
        }
        last = history.get(event.user)
        if last is not None:
            last_item, last_ts = last
            for name, flag in zip(GENRES, items[last_item]):
                if flag and name != "unknown":
                    out[registry.get("last_genre", name)] = 1.0
        out[registry.get("day", weekday(event.timestamp))] = 1.0
        if last is not None:
            out[registry.get("last_day", weekday(last_ts))] = 1.0
        return out

    @staticmethod
    def item_entries(item, registry, items):
        if item not in items:
            raise KeyError(f"unregistered candidate item {item!r}")
        out = {registry.get("item", item): 1.0}
        for name, flag in zip(GENRES, items[item]):
            if flag and name != "unknown":
                out[registry.get("genre", name)] = 1.0
        return out

    def context(self, event):
        entries = self.context_entries(event, self.history, self.registry, self.users, self.items)
        return SparseVector.from_dict(self.registry.dim, entries)

    def item_block(self, item):
        entries = self.item_entries(item, self.registry, self.items)
        return SparseVector.from_dict(self.registry.dim, entries)

    def encode(self, event, candidate=None):
        candidate = event.item if candidate is None else candidate
        return encode_ml100k(event, candidate, self.history, self.registry, self.users, self.items)

    def observe(self, event):
        self.history[event.user] = (event.item, event.timestamp)


def default_paths(directory):
    directory = Path(directory)
    return directory / "u.data", directory / "u.user", directory / "u.item"

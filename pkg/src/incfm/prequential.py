"""Test-then-learn evaluation over a time-ordered stream of positive events.

The stream is cut into a batch-training prefix, a one-pass update segment
and a test suffix.  Each test event is first used to evaluate the current
model (recall@N, windowed recall@N/T, percentile rank of the true item) and
only afterwards, for online models, to update it.
"""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass, field

from .recommender import rank_of, top_n


class PrequentialError(RuntimeError):
    def __init__(self, event_index, phase, cause):
        super().__init__(f"{phase} failed at event {event_index}: {cause!r}")
        self.event_index = event_index
        self.phase = phase
        self.cause = cause


@dataclass(frozen=True)
class SplitSpec:
    batch_frac: float = 0.20
    one_pass_frac: float = 0.10
    test_frac: float = 0.70

    def __post_init__(self):
        fracs = (self.batch_frac, self.one_pass_frac, self.test_frac)
        if any(f < 0 for f in fracs) or not math.isclose(sum(fracs), 1.0):
            raise ValueError(f"split fractions must be >= 0 and sum to 1, got {fracs}")

    def sizes(self, count):
        n_batch = math.floor(count * self.batch_frac)
        n_pass = math.floor(count * self.one_pass_frac)
        return n_batch, n_pass, count - n_batch - n_pass


def split_events(events, spec=SplitSpec()):
    """Contiguous (batch, one-pass, test) segments of a time-ordered list."""
    ts = [e.timestamp for e in events]
    if any(b < a for a, b in zip(ts, ts[1:])):
        raise ValueError("events must be sorted by timestamp")
    n_batch, n_pass, _ = spec.sizes(len(events))
    return (
        list(events[:n_batch]),
        list(events[n_batch:n_batch + n_pass]),
        list(events[n_batch + n_pass:]),
    )


def recall_at_n(recommended, truth):
    return 1 if truth in recommended else 0


def percentile_rank(rank, catalog_size):
    """Position as a percentage: 0 for the top of the list, 100 for the bottom."""
    if catalog_size < 1 or not 0 <= rank < catalog_size:
        raise ValueError(f"rank {rank} out of range for catalog of {catalog_size}")
    if catalog_size == 1:
        return 0.0
    return 100.0 * rank / (catalog_size - 1)


@dataclass
class LogEntry:
    event_index: int
    timestamp: int
    hit: int
    windowed_recall: float
    percentile_rank: float


@dataclass
class EvalState:
    n: int
    window_t: int
    window: deque = None
    hit_count: int = 0
    mpr_sum: float = 0.0
    event_count: int = 0
    log: list = field(default_factory=list)
    recommend_seconds: float = 0.0
    update_seconds: float = 0.0
    updates: int = 0
    validation: EvalState | None = None

    def __post_init__(self):
        if self.n < 1 or self.window_t < 1:
            raise ValueError("n and window_t must be >= 1")
        if self.window is None:
            self.window = deque(maxlen=self.window_t)
        self._window_hits = sum(self.window)

    def record(self, event_index, timestamp, hit, pr):
        if len(self.window) == self.window_t:
            self._window_hits -= self.window[0]
        self.window.append(hit)
        self._window_hits += hit
        self.hit_count += hit
        self.mpr_sum += pr
        self.event_count += 1
        windowed = self._window_hits / len(self.window)
        self.log.append(LogEntry(event_index, timestamp, hit, windowed, pr))

    @property
    def mpr(self):
        return self.mpr_sum / self.event_count if self.event_count else float("nan")

    @property
    def mean_windowed_recall(self):
        if not self.log:
            return float("nan")
        return sum(e.windowed_recall for e in self.log) / len(self.log)

    @property
    def recall(self):
        return self.hit_count / self.event_count if self.event_count else float("nan")


def _evaluate(runner, event, n):
    scored = runner.recommend(event)
    try:
        rank = rank_of(scored, event.item)
    except KeyError:
        # truth excluded from the candidates: a miss at the bottom of the list
        return 0, 100.0
    hit = recall_at_n(top_n(scored, n), event.item)
    return hit, percentile_rank(rank, len(scored))


def run_prequential(runner, events, spec=SplitSpec(), n=10, window_t=3000,
                    record_validation=False):
    """Run all three phases and return the test-phase :class:`EvalState`.

    ``runner`` provides ``prepare``, ``batch_train``, ``recommend``,
    ``update`` and ``observe`` plus an ``online`` flag; static runners are
    never updated after batch training.  With ``record_validation`` the
    one-pass segment is also evaluated (before each update) and the state is
    attached as ``state.validation``.
    """
    batch, one_pass, test = split_events(events, spec)
    offset = len(batch)
    try:
        runner.batch_train(batch)
    except Exception as exc:
        raise PrequentialError(0, "batch training", exc) from exc

    validation = EvalState(n, window_t) if record_validation else None
    for j, event in enumerate(one_pass):
        index = offset + j
        try:
            runner.prepare(event)
            if validation is not None:
                hit, pr = _evaluate(runner, event, n)
                validation.record(index, event.timestamp, hit, pr)
            if runner.online:
                runner.update(event)
            runner.observe(event)
        except Exception as exc:
            raise PrequentialError(index, "one-pass update", exc) from exc

    state = EvalState(n, window_t, validation=validation)
    offset += len(one_pass)
    clock = time.perf_counter
    for j, event in enumerate(test):
        index = offset + j
        try:
            t0 = clock()
            runner.prepare(event)
            hit, pr = _evaluate(runner, event, n)
            t1 = clock()
            state.recommend_seconds += t1 - t0
            state.record(index, event.timestamp, hit, pr)
            if runner.online:
                t1 = clock()
                runner.update(event)
                state.update_seconds += clock() - t1
                state.updates += 1
            runner.observe(event)
        except Exception as exc:
            raise PrequentialError(index, "test", exc) from exc
    return state

"""Rule-based ad-click stream with one abrupt drift.

Each impression draws a user (age, sex, state) and an ad.  The ad's rule
clicks when the user's attribute falls in the rule's segment and a Bernoulli
draw with the rule's base probability succeeds.  Halfway through, the most
exposed ad's segment is replaced by its complement.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from ..fm import SparseVector
from .registry import FeatureRegistry

AGE_RANGE = (18, 65)
N_STATES = 50
ATTRIBUTE_DOMAINS = {
    "age": frozenset(range(AGE_RANGE[0], AGE_RANGE[1] + 1)),
    "sex": frozenset((0, 1)),
    "state": frozenset(range(N_STATES)),
}
CSV_HEADER = ("impression_index", "age", "sex", "state", "ad_id", "category")


@dataclass(frozen=True)
class ClickEvent:
    impression: int
    age: int
    sex: int  # 1 = male
    state: int
    ad: int
    category: int

    @property
    def user(self):
        # demographics stand in for identity: every click is its own user
        return self.impression

    @property
    def item(self):
        return self.ad

    @property
    def timestamp(self):
        return self.impression


@dataclass(frozen=True)
class AdRule:
    ad: int
    category: int
    exposure: float
    attribute: str
    segment: frozenset
    click_prob: float

    def segment_fraction(self):
        return len(self.segment) / len(ATTRIBUTE_DOMAINS[self.attribute])

    def complemented(self):
        return replace(self, segment=ATTRIBUTE_DOMAINS[self.attribute] - self.segment)


@dataclass(frozen=True)
class SyntheticRuleSet:
    ads: tuple
    drift_index: int = 500_000
    n_impressions: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        if len(self.ads) != 5:
            raise ValueError("exactly 5 ads are required")
        total = sum(a.exposure for a in self.ads)
        if not np.isclose(total, 1.0):
            raise ValueError(f"ad exposures must sum to 1, got {total}")
        if not 0 <= self.drift_index <= self.n_impressions:
            raise ValueError("drift_index outside the impression range")

    @property
    def popular_ad(self):
        return max(self.ads, key=lambda a: a.exposure).ad

    def drifted(self):
        """The rule set in force after the drift point."""
        pop = self.popular_ad
        ads = tuple(a.complemented() if a.ad == pop else a for a in self.ads)
        return replace(self, ads=ads)

    def expected_clicks(self):
        def per_impression(rules):
            return sum(a.exposure * a.segment_fraction() * a.click_prob for a in rules.ads)
        before = self.drift_index * per_impression(self)
        after = (self.n_impressions - self.drift_index) * per_impression(self.drifted())
        return before + after


def default_rules(seed=0, target_clicks=3570):
    """The shipped calibration.

    Ad 0 gets 40% of impressions and clicks for users aged 22+, which the
    drift flips to the 18-21 segment, so its click share collapses after the
    drift.  The other ads key on a single attribute each.
    One shared base probability is scaled so the expected click count over
    all impressions equals ``target_clicks``.
    """
    age = lambda lo, hi: frozenset(range(lo, hi + 1))  # noqa: E731
    ads = (
        AdRule(0, 0, 0.40, "age", age(22, 65), 1.0),
        AdRule(1, 1, 0.15, "sex", frozenset({0}), 1.0),
        AdRule(2, 2, 0.15, "sex", frozenset({1}), 1.0),
        AdRule(3, 0, 0.15, "state", frozenset(range(25)), 1.0),
        AdRule(4, 1, 0.15, "age", age(18, 40), 1.0),
    )
    unit = SyntheticRuleSet(ads, seed=seed)
    p = target_clicks / unit.expected_clicks()
    return replace(unit, ads=tuple(replace(a, click_prob=p) for a in ads))


def generate_synthetic(rules):
    """Simulate every impression and return the clicks in impression order."""
    rng = np.random.default_rng(rules.seed)
    n = rules.n_impressions
    attrs = {
        "age": rng.integers(AGE_RANGE[0], AGE_RANGE[1] + 1, size=n),
        "sex": rng.integers(0, 2, size=n),
        "state": rng.integers(0, N_STATES, size=n),
    }
    exposure = np.array([a.exposure for a in rules.ads])
    ad_idx = rng.choice(len(rules.ads), size=n, p=exposure / exposure.sum())
    coin = rng.random(size=n)

    clicked = np.zeros(n, dtype=bool)
    phases = ((rules, slice(0, rules.drift_index)),
              (rules.drifted(), slice(rules.drift_index, n)))
    for phase_rules, sl in phases:
        for j, rule in enumerate(phase_rules.ads):
            mask = ad_idx[sl] == j
            if not mask.any() or rule.click_prob <= 0:
                continue
            values = attrs[rule.attribute][sl]
            segment = np.fromiter(rule.segment, dtype=np.int64)
            hit = mask & np.isin(values, segment) & (coin[sl] < rule.click_prob)
            clicked[sl] |= hit

    ads = rules.ads
    return [
        ClickEvent(int(t), int(attrs["age"][t]), int(attrs["sex"][t]), int(attrs["state"][t]),
                   ads[ad_idx[t]].ad, ads[ad_idx[t]].category)
        for t in np.flatnonzero(clicked)
    ]


def write_csv(events, path):
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for e in events:
            writer.writerow((e.impression, e.age, e.sex, e.state, e.ad, e.category))


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if tuple(header or ()) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        return [ClickEvent(*(int(v) for v in row)) for row in reader]


def click_shares(events, n_ads=5):
    counts = np.bincount([e.ad for e in events], minlength=n_ads)
    return counts / max(len(events), 1)


def encode_synthetic(event, candidate, registry, ad_categories):
    """Vector for a click event scored against ad ``candidate``."""
    entries = SyntheticEncoder.context_entries(event, registry)
    entries.update(SyntheticEncoder.item_entries(candidate, registry, ad_categories))
    return SparseVector.from_dict(registry.dim, entries)


class SyntheticEncoder:
    """Context block (age, sex, state) plus ad block (ad ID, category)."""

    def __init__(self, ad_categories, registry=None):
        self.items = dict(ad_categories)
        self.registry = registry if registry is not None else FeatureRegistry()
        self.registry.reserve("state", range(N_STATES))

    @classmethod
    def from_events(cls, events):
        return cls({e.ad: e.category for e in events})

    @staticmethod
    def context_entries(event, registry):
        return {
            registry.get("age"): event.age / 100.0,
            registry.get("sex"): float(event.sex),
            registry.lookup("state", event.state): 1.0,
        }

    @staticmethod
    def item_entries(ad, registry, ad_categories):
        if ad not in ad_categories:
            raise KeyError(f"unregistered candidate ad {ad!r}")
        return {
            registry.get("ad", ad): 1.0,
            registry.get("category", ad_categories[ad]): 1.0,
        }

    def context(self, event):
        entries = self.context_entries(event, self.registry)
        return SparseVector.from_dict(self.registry.dim, entries)

    def item_block(self, ad):
        entries = self.item_entries(ad, self.registry, self.items)
        return SparseVector.from_dict(self.registry.dim, entries)

    def encode(self, event, candidate=None):
        candidate = event.ad if candidate is None else candidate
        return encode_synthetic(event, candidate, self.registry, self.items)

    def observe(self, event):
        pass

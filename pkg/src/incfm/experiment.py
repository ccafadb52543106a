"""Experiment configuration and multi-seed prequential runs.

Defaults reproduce the published hyperparameter rows for each dataset; any
field can be overridden from the command line or a ``key=value`` file.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .data.movielens import MovieLensEncoder, default_paths, load_movielens
from .data.synthetic import SyntheticEncoder, default_rules, generate_synthetic, read_csv
from .fm import fm_init
from .mf import MfModel
from .online import UpdatePolicy
from .prequential import PrequentialError, run_prequential
from .runners import FmRunner, MfRunner

log = logging.getLogger(__name__)

DATASETS = ("ml100k", "synthetic")
MODELS = ("mf-static", "mf-incremental", "fm-static", "fm-incremental")
FM_LAMBDAS = ("lambda0", "lambda_w", "lambda_v")

# Per dataset: (k, MF eta, MF lambda, FM eta, (lambda0, lambda_w, lambda_v), N, T)
PUBLISHED_DEFAULTS = {
    "ml100k": dict(k=40, mf_eta=0.002, lam=0.01, fm_eta=0.004,
                   fm_lambdas=(2.0, 8.0, 16.0), n=10, window=3000),
    "synthetic": dict(k=2, mf_eta=0.0003, lam=0.01, fm_eta=0.00006,
                      fm_lambdas=(0.01, 0.01, 0.01), n=1, window=500),
}
# Batch-phase epochs per model family, chosen on the validation segment
# (scripts/select_epochs.py).
DEFAULT_EPOCHS = {
    "ml100k": {"mf": 30, "fm": 2},
    "synthetic": {"mf": 20, "fm": 10},
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    dataset: str
    model: str
    k: int
    eta: float
    n: int
    window: int
    max_epochs: int
    lam: float | None = None
    lambda0: float | None = None
    lambda_w: float | None = None
    lambda_v: float | None = None
    adaptive_reg: bool = True
    anticipate_step: bool = True
    init_sigma: float = 0.01
    seeds: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    exclude_consumed: bool = False
    record_validation: bool = True
    out_dir: str = "results"
    ml100k_dir: str = "data/ml-100k"
    synthetic_file: str | None = None
    synthetic_seed: int = 0

    def __post_init__(self):
        if self.dataset not in DATASETS:
            raise ConfigError(f"unknown dataset {self.dataset!r}")
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}")
        if self.is_fm:
            if self.lam is not None:
                raise ConfigError("FM models take lambda0/lambda_w/lambda_v, not lambda")
            if any(getattr(self, f) is None for f in FM_LAMBDAS):
                raise ConfigError("FM models need lambda0, lambda_w and lambda_v")
        else:
            if any(getattr(self, f) is not None for f in FM_LAMBDAS):
                raise ConfigError("MF models take a single lambda")
            if self.lam is None:
                raise ConfigError("MF models need lambda")
        if self.k < 1 or self.eta <= 0 or self.n < 1 or self.window < 1 or self.max_epochs < 0:
            raise ConfigError("k, eta, n, window must be positive and max_epochs >= 0")
        if not self.seeds:
            raise ConfigError("at least one seed is required")

    @property
    def is_fm(self):
        return self.model.startswith("fm")

    @property
    def online(self):
        return self.model.endswith("incremental")

    @classmethod
    def for_dataset(cls, dataset, model, **overrides):
        """Published defaults for ``(dataset, model)`` with ``overrides`` applied."""
        if dataset not in PUBLISHED_DEFAULTS:
            raise ConfigError(f"unknown dataset {dataset!r}")
        if model not in MODELS:
            raise ConfigError(f"unknown model {model!r}")
        row = PUBLISHED_DEFAULTS[dataset]
        base = dict(dataset=dataset, model=model, k=row["k"], n=row["n"],
                    window=row["window"], max_epochs=DEFAULT_EPOCHS[dataset][model[:2]])
        if model.startswith("fm"):
            base["eta"] = row["fm_eta"]
            base.update(zip(FM_LAMBDAS, row["fm_lambdas"]))
        else:
            base["eta"] = row["mf_eta"]
            base["lam"] = row["lam"]
        base.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**base)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class Dataset:
    name: str
    events: list
    users: dict | None = None
    items: dict | None = None

    def encoder(self):
        if self.name == "ml100k":
            return MovieLensEncoder(self.users, self.items)
        return SyntheticEncoder(self.items)


def load_dataset(config):
    if config.dataset == "ml100k":
        events, users, items = load_movielens(*default_paths(config.ml100k_dir))
        return Dataset("ml100k", events, users, items)
    if config.synthetic_file:
        events = read_csv(config.synthetic_file)
    else:
        events = generate_synthetic(default_rules(config.synthetic_seed))
    return Dataset("synthetic", events, items={e.ad: e.category for e in events})


def build_runner(config, dataset, seed):
    if config.is_fm:
        model = fm_init(0, config.k, config.eta,
                        (config.lambda0, config.lambda_w, config.lambda_v),
                        config.init_sigma, seed)
        policy = UpdatePolicy(config.adaptive_reg, config.anticipate_step, config.max_epochs, seed)
        return FmRunner(model, dataset.encoder(), policy, online=config.online,
                        exclude_consumed=config.exclude_consumed)
    model = MfModel(config.k, config.eta, config.lam, config.init_sigma, seed)
    return MfRunner(model, online=config.online, epochs=config.max_epochs,
                    shuffle_seed=seed, exclude_consumed=config.exclude_consumed)


def write_event_log(state, path):
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(("event_index", "timestamp", "hit", "windowed_recall", "percentile_rank"))
        for e in state.log:
            writer.writerow((e.event_index, e.timestamp, e.hit,
                             repr(e.windowed_recall), repr(e.percentile_rank)))


def run_seed(config, dataset, seed):
    """One prequential run; returns ``(state or None, per-seed summary)``."""
    runner = build_runner(config, dataset, seed)
    try:
        state = run_prequential(runner, dataset.events, n=config.n, window_t=config.window,
                                record_validation=config.record_validation)
    except PrequentialError as exc:
        log.error("seed %d: %s", seed, exc)
        return None, {"seed": seed, "status": "failed", "failed_event_index": exc.event_index,
                      "error": str(exc)}
    summary = {
        "seed": seed,
        "status": "ok",
        "events": state.event_count,
        "mean_windowed_recall": state.mean_windowed_recall,
        "recall": state.recall,
        "mpr": state.mpr,
        "recommend_seconds_per_event": (state.recommend_seconds / state.event_count
                                        if state.event_count else None),
        "update_seconds_per_event": (state.update_seconds / state.updates
                                     if state.updates else None),
    }
    if state.validation is not None and state.validation.event_count:
        summary["validation"] = {"recall": state.validation.recall, "mpr": state.validation.mpr}
    return state, summary


def _mean_std(values):
    if not values:
        return None, None
    arr = np.asarray(values, dtype=float)
    return float(arr.mean()), float(arr.std())


def cmd_run(config, dataset=None, on_seed=None):
    """Run every seed, write per-event CSVs and the summary JSON.

    Returns the summary dict; ``summary["ok"]`` is true iff all seeds finished.
    """
    dataset = dataset if dataset is not None else load_dataset(config)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    per_seed = []
    states = {}
    for seed in config.seeds:
        state, summary = run_seed(config, dataset, seed)
        per_seed.append(summary)
        if state is not None:
            write_event_log(state, out / f"events_{config.model}_{seed}.csv")
            states[seed] = state
            log.info("%s seed %d: MPR %.2f, recall@%d/%d %.4f", config.model, seed,
                     summary["mpr"], config.n, config.window, summary["mean_windowed_recall"])
        if on_seed is not None:
            on_seed(seed, state, summary)
    ok = [s for s in per_seed if s["status"] == "ok"]
    timing_rec = _mean_std([s["recommend_seconds_per_event"] for s in ok
                            if s["recommend_seconds_per_event"] is not None])[0]
    upd = [s["update_seconds_per_event"] for s in ok if s["update_seconds_per_event"] is not None]
    recall_mean, recall_std = _mean_std([s["mean_windowed_recall"] for s in ok])
    mpr_mean, mpr_std = _mean_std([s["mpr"] for s in ok])
    summary = {
        "config": config.to_dict(),
        "ok": len(ok) == len(per_seed),
        "seeds": per_seed,
        "windowed_recall": {"mean": recall_mean, "std": recall_std},
        "mpr": {"mean": mpr_mean, "std": mpr_std},
        "timing_seconds_per_event": {
            "recommend": timing_rec,
            "update": _mean_std(upd)[0] if upd else None,
        },
    }
    with open(out / f"summary_{config.model}.json", "w", encoding="utf-8", newline="\n") as f:
        json.dump(summary, f, indent=2, allow_nan=True)
        f.write("\n")
    summary["states"] = states
    return summary


def parse_config_file(path):
    """``key=value`` lines; ``#`` starts a comment.  Values stay strings."""
    out = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def coerce(name, value):
    """Convert a textual override to the type of RunConfig field ``name``."""
    if name in ("k", "n", "window", "max_epochs", "synthetic_seed"):
        return int(value)
    if name in ("eta", "lam", "lambda0", "lambda_w", "lambda_v", "init_sigma"):
        return float(value)
    if name in ("adaptive_reg", "anticipate_step", "exclude_consumed", "record_validation"):
        if isinstance(value, bool):
            return value
        v = value.lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: not a boolean: {value!r}")
    if name == "seeds":
        return [int(s) for s in value.split(",")] if isinstance(value, str) else list(value)
    return value

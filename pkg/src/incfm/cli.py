"""Command line entry point: ``incfm generate | run | selftest``."""

from __future__ import annotations

import argparse
import logging
import sys

from .data.synthetic import click_shares, default_rules, generate_synthetic, write_csv
from .experiment import DATASETS, MODELS, ConfigError, RunConfig, cmd_run, coerce, parse_config_file
from .selftest import COMPONENTS, format_report, run_selftest

# flag dest -> RunConfig field
RUN_FLAGS = {
    "k": "k", "eta": "eta", "lambda0": "lambda0", "lambda_w": "lambda_w",
    "lambda_v": "lambda_v", "lam": "lam", "adaptive_reg": "adaptive_reg", "n": "n",
    "window": "window", "seeds": "seeds", "max_epochs": "max_epochs", "out": "out_dir",
    "ml100k_dir": "ml100k_dir", "synthetic_file": "synthetic_file",
    "init_sigma": "init_sigma", "exclude_consumed": "exclude_consumed",
}


def build_parser():
    p = argparse.ArgumentParser(prog="incfm", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write the synthetic click stream as CSV")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output CSV path")

    r = sub.add_parser("run", help="prequential evaluation over several seeds")
    r.add_argument("--config", help="key=value file; explicit flags take precedence")
    r.add_argument("--dataset", choices=DATASETS)
    r.add_argument("--model", choices=MODELS)
    r.add_argument("--k", type=int)
    r.add_argument("--eta", type=float)
    r.add_argument("--lambda0", type=float)
    r.add_argument("--lambda-w", type=float)
    r.add_argument("--lambda-v", type=float)
    r.add_argument("--lambda", dest="lam", type=float, help="MF regularization")
    r.add_argument("--adaptive-reg", action=argparse.BooleanOptionalAction, default=None)
    r.add_argument("--n", type=int, help="recommendation list length")
    r.add_argument("--window", type=int, help="windowed recall length T")
    r.add_argument("--seeds", type=lambda s: coerce("seeds", s), help="comma separated")
    r.add_argument("--max-epochs", type=int)
    r.add_argument("--init-sigma", type=float)
    r.add_argument("--exclude-consumed", action=argparse.BooleanOptionalAction, default=None)
    r.add_argument("--out", help="output directory")
    r.add_argument("--ml100k-dir")
    r.add_argument("--synthetic-file")

    s = sub.add_parser("selftest", help="run the randomized oracle suites")
    s.add_argument("--seed", type=int)
    s.add_argument("--perturb", choices=COMPONENTS,
                   help="negative control: corrupt one analytic component")
    return p


def resolve_config(args):
    """Defaults, then the ``--config`` file, then explicit flags."""
    values = {}
    if args.config:
        values = {k: coerce(k, v) for k, v in parse_config_file(args.config).items()}
    for dest, name in RUN_FLAGS.items():
        flag = getattr(args, dest)
        if flag is not None:
            values[name] = flag
    dataset = args.dataset or values.pop("dataset", None)
    model = args.model or values.pop("model", None)
    values.pop("dataset", None)
    values.pop("model", None)
    if dataset is None or model is None:
        raise ConfigError("--dataset and --model are required (flag or config file)")
    return RunConfig.for_dataset(dataset, model, **values)


def cmd_generate(args):
    rules = default_rules(args.seed)
    events = generate_synthetic(rules)
    write_csv(events, args.out)
    before = [e for e in events if e.impression < rules.drift_index]
    after = [e for e in events if e.impression >= rules.drift_index]
    print(f"wrote {len(events)} clicks from {rules.n_impressions} impressions to {args.out}")
    print(f"drift index {rules.drift_index} (rule of ad {rules.popular_ad} rewritten)")
    for label, part in (("before drift", before), ("after drift", after)):
        shares = " ".join(f"ad{j}={s:.3f}" for j, s in enumerate(click_shares(part)))
        print(f"{label}: {len(part)} clicks, shares {shares}")
    return 0


def cmd_run_cli(args):
    config = resolve_config(args)

    def report(seed, state, summary):
        if state is None:
            print(f"seed {seed}: FAILED at event {summary['failed_event_index']}: {summary['error']}")
        else:
            print(f"seed {seed}: MPR {summary['mpr']:.2f}  recall@{config.n}/{config.window} "
                  f"{summary['mean_windowed_recall']:.4f}", flush=True)

    summary = cmd_run(config, on_seed=report)
    if summary["mpr"]["mean"] is not None:
        print(f"{config.model} on {config.dataset}: MPR {summary['mpr']['mean']:.2f} "
              f"(+- {summary['mpr']['std']:.2f}), recall@{config.n}/{config.window} "
              f"{summary['windowed_recall']['mean']:.4f} (+- {summary['windowed_recall']['std']:.4f})")
    print(f"results in {config.out_dir}")
    return 0 if summary["ok"] else 1


def cmd_selftest(args):
    seed, results = run_selftest(args.seed, args.perturb)
    print(format_report(seed, results))
    return 0 if all(r.ok for r in results) else 1


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"generate": cmd_generate, "run": cmd_run_cli, "selftest": cmd_selftest}
    try:
        return handlers[args.command](args)
    except (ConfigError, FileNotFoundError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

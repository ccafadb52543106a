"""Pick the batch-phase epoch count per model family on the validation segment.

Only the first 30% of the stream is touched: the static model of each family
(MF, FM) is batch-trained on the first 20% and scored on the following 10%;
the epoch count with the lowest validation MPR is shared by the static and
incremental variants.  When several counts give exactly the same validation
MPR (identical rankings), the one closest to the default of 30 is kept.  The
grid tops out at 30 epochs.  The test segment is never read.

    python scripts/select_epochs.py --dataset ml100k --ml100k-dir data/ml-100k
"""

import argparse

from incfm.experiment import RunConfig, build_runner, load_dataset
from incfm.prequential import EvalState, SplitSpec, _evaluate, split_events

DEFAULT_EPOCHS = 30


def validation_metrics(config, dataset, seed):
    runner = build_runner(config, dataset, seed)
    batch, one_pass, _ = split_events(dataset.events, SplitSpec())
    runner.batch_train(batch)
    state = EvalState(config.n, config.window)
    for j, event in enumerate(one_pass):
        runner.prepare(event)
        hit, pr = _evaluate(runner, event, config.n)
        state.record(len(batch) + j, event.timestamp, hit, pr)
        if runner.online:
            runner.update(event)
        runner.observe(event)
    return state.mpr, state.recall


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--dataset", choices=("ml100k", "synthetic"), required=True)
    p.add_argument("--ml100k-dir", default="data/ml-100k")
    p.add_argument("--synthetic-file")
    p.add_argument("--epochs", default="1,2,3,5,10,20,30")
    p.add_argument("--seeds", default="0")
    args = p.parse_args()
    grid = [int(e) for e in args.epochs.split(",")]
    seeds = [int(s) for s in args.seeds.split(",")]
    for model in ("mf-static", "fm-static"):
        best = None
        for epochs in grid:
            config = RunConfig.for_dataset(
                args.dataset, model, max_epochs=epochs,
                ml100k_dir=args.ml100k_dir, synthetic_file=args.synthetic_file,
            )
            dataset = load_dataset(config)
            runs = [validation_metrics(config, dataset, s) for s in seeds]
            mpr = sum(r[0] for r in runs) / len(runs)
            recall = sum(r[1] for r in runs) / len(runs)
            print(f"{model:10s} epochs={epochs:3d} val MPR={mpr:6.2f} recall={recall:.4f}", flush=True)
            closer = best is not None and abs(epochs - DEFAULT_EPOCHS) < abs(best[0] - DEFAULT_EPOCHS)
            if best is None or mpr < best[1] or (mpr == best[1] and closer):
                best = (epochs, mpr)
        print(f"{model.split('-')[0]} family -> {best[0]} epochs", flush=True)


if __name__ == "__main__":
    main()

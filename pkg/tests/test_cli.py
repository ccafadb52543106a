import json
from dataclasses import replace

import pytest

from incfm.cli import build_parser, main, resolve_config
from incfm.data.synthetic import default_rules, generate_synthetic, write_csv
from incfm.experiment import ConfigError, RunConfig


@pytest.fixture(scope="module")
def small_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "clicks.csv"
    write_csv(generate_synthetic(replace(default_rules(0), n_impressions=200_000,
                                         drift_index=100_000)), path)
    return path


@pytest.mark.parametrize("dataset, model, expected", [
    ("ml100k", "mf-static", dict(k=40, eta=0.002, lam=0.01, n=10, window=3000)),
    ("ml100k", "fm-incremental",
     dict(k=40, eta=0.004, lambda0=2.0, lambda_w=8.0, lambda_v=16.0, n=10, window=3000)),
    ("synthetic", "mf-incremental", dict(k=2, eta=0.0003, lam=0.01, n=1, window=500)),
    ("synthetic", "fm-static",
     dict(k=2, eta=0.00006, lambda0=0.01, lambda_w=0.01, lambda_v=0.01, n=1, window=500)),
])
def test_defaults_are_the_published_hyperparameters(dataset, model, expected):
    config = RunConfig.for_dataset(dataset, model)
    for key, value in expected.items():
        assert getattr(config, key) == value
    assert config.seeds == [0, 1, 2, 3, 4]


@pytest.mark.parametrize("model, bad", [
    ("mf-static", dict(lambda0=1.0)),
    ("fm-static", dict(lam=0.1)),
])
def test_lambda_fields_must_match_the_model(model, bad):
    with pytest.raises(ConfigError):
        RunConfig.for_dataset("synthetic", model, **bad)


def test_flags_override_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\ndataset = synthetic\nmodel = fm-incremental\n"
                   "eta = 0.5\nk = 3\nseeds = 1,2\nadaptive-reg = false\n")
    args = build_parser().parse_args(["run", "--config", str(cfg), "--k", "7", "--out", "x"])
    config = resolve_config(args)
    assert (config.eta, config.k, config.seeds, config.adaptive_reg) == (0.5, 7, [1, 2], False)
    assert config.out_dir == "x" and config.window == 500


def test_malformed_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("dataset synthetic\n")
    assert main(["run", "--config", str(cfg)]) == 2


def test_missing_dataset_or_model_is_an_error(capsys):
    assert main(["run", "--model", "fm-static"]) == 2
    assert "required" in capsys.readouterr().err


def test_incompatible_flags_exit_with_an_error(capsys):
    assert main(["run", "--dataset", "synthetic", "--model", "mf-static", "--lambda0", "1"]) == 2
    assert "single lambda" in capsys.readouterr().err


def _run(out, csv_path, model, *extra):
    return main(["run", "--dataset", "synthetic", "--model", model, "--synthetic-file",
                 str(csv_path), "--seeds", "0", "--max-epochs", "2", "--out", str(out), *extra])


def test_runs_are_byte_identical(tmp_path, small_csv):
    for name in ("a", "b"):
        assert _run(tmp_path / name, small_csv, "fm-incremental") == 0
    a = (tmp_path / "a" / "events_fm-incremental_0.csv").read_bytes()
    assert a == (tmp_path / "b" / "events_fm-incremental_0.csv").read_bytes()
    assert a.startswith(b"event_index,timestamp,hit,windowed_recall,percentile_rank\n")
    assert b"\r" not in a


def test_summary_round_trips_and_reports_timing(tmp_path, small_csv):
    assert _run(tmp_path, small_csv, "mf-static") == 0
    summary = json.loads((tmp_path / "summary_mf-static.json").read_text())
    config = RunConfig.from_dict(summary["config"])
    assert config == RunConfig.for_dataset(
        "synthetic", "mf-static", synthetic_file=str(small_csv), seeds=[0],
        max_epochs=2, out_dir=str(tmp_path))
    assert summary["ok"] is True
    assert summary["timing_seconds_per_event"]["update"] is None
    assert summary["timing_seconds_per_event"]["recommend"] > 0
    seed = summary["seeds"][0]
    assert summary["mpr"]["mean"] == seed["mpr"] and summary["mpr"]["std"] == 0.0


def test_online_summary_has_update_timing(tmp_path, small_csv):
    assert _run(tmp_path, small_csv, "mf-incremental") == 0
    summary = json.loads((tmp_path / "summary_mf-incremental.json").read_text())
    assert summary["timing_seconds_per_event"]["update"] > 0


def test_failed_seed_gives_nonzero_exit(tmp_path, small_csv, monkeypatch):
    from incfm.runners import FmRunner

    original = FmRunner.update

    def flaky(self, event):
        if self.model.seed == 1 and event.timestamp > 150_000:
            raise FloatingPointError("diverged")
        return original(self, event)

    monkeypatch.setattr(FmRunner, "update", flaky)
    code = main(["run", "--dataset", "synthetic", "--model", "fm-incremental", "--synthetic-file",
                 str(small_csv), "--seeds", "0,1", "--max-epochs", "1", "--out", str(tmp_path)])
    assert code == 1
    summary = json.loads((tmp_path / "summary_fm-incremental.json").read_text())
    assert summary["ok"] is False
    good, bad = summary["seeds"]
    assert good["status"] == "ok" and bad["status"] == "failed"
    assert "diverged" in bad["error"]
    # the failing event is the first test event past the cutoff
    events = [int(line.split(",")[0]) for line in small_csv.read_text().splitlines()[1:]]
    assert bad["failed_event_index"] == next(j for j, t in enumerate(events) if t > 150_000)
    assert summary["mpr"]["mean"] == good["mpr"]
    assert not (tmp_path / "events_fm-incremental_1.csv").exists()


def test_generate_is_deterministic_and_reports_the_drift(tmp_path, capsys):
    assert main(["generate", "--seed", "0", "--out", str(tmp_path / "a.csv")]) == 0
    out = capsys.readouterr().out
    assert "drift index 500000" in out
    assert "before drift" in out and "after drift" in out
    assert main(["generate", "--seed", "0", "--out", str(tmp_path / "b.csv")]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    clicks = (tmp_path / "a.csv").read_text().count("\n") - 1
    assert abs(clicks - 3570) <= 150


def test_selftest_passes(capsys):
    assert main(["selftest", "--seed", "3"]) == 0
    out = capsys.readouterr().out
    assert "selftest seed 3" in out
    assert "1000 cases" in out and "FAIL" not in out


def test_selftest_negative_control_names_the_component(capsys):
    assert main(["selftest", "--seed", "3", "--perturb", "lambda_w"]) == 1
    out = capsys.readouterr().out
    assert "component lambda_w failed" in out
    assert out.count("FAIL") == 1

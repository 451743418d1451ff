import csv
import io
import json

import numpy as np
import pytest

from n2e.graph import star
from n2e.harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    ExperimentError,
    UndefinedMetricError,
    l1_histogram,
    rank_error,
    read_config,
    relative_error,
    run_experiment,
    summary_csv,
    trimmed_mean,
)


def test_relative_error():
    assert relative_error(5, 5) == 0
    assert relative_error(110, 100) == pytest.approx(10.0)
    with pytest.raises(UndefinedMetricError):
        relative_error(1, 0)


def test_rank_error():
    assert rank_error(5, [7, 5, 5, 3]) == 1
    assert rank_error(7, [7, 5, 5, 3]) == 0
    assert rank_error(8, [7, 5, 5, 3]) == 1
    assert rank_error(0, [7, 5, 5, 3]) == 4
    with pytest.raises(ValueError):
        rank_error(1, [])


def test_l1_histogram():
    assert l1_histogram([1, 2, 3], [1, 2, 3]) == 0
    assert l1_histogram([4, 2, 0], [1, 2, 3]) == 6
    assert l1_histogram([4, 2, 0], [1, 2, 3], relative=True) == pytest.approx(100.0)
    with pytest.raises(ValueError):
        l1_histogram([1, 2], [1, 2, 3])


def test_trimmed_mean():
    assert trimmed_mean(list(range(1, 11))) == 5.5
    assert trimmed_mean([10, 1, 9, 2, 8, 3, 7, 4, 6, 5]) == 5.5
    with pytest.raises(ValueError):
        trimmed_mean([1, 2, 3, 4])


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(task="ec")
    with pytest.raises(ValueError):
        ExperimentConfig(generator="star:k=3", rounds=4)
    with pytest.raises(ValueError):
        ExperimentConfig(generator="star:k=3", task="md", method="baseline")
    cfg = ExperimentConfig(generator="star:k=3", task="dd")
    assert cfg.eps == 3.2 and cfg.privacy.delta == 0.0
    cfg = ExperimentConfig(generator="star:k=3")
    assert (cfg.eps, cfg.delta, cfg.beta, cfg.rounds, cfg.split) == (0.8, 2.0 ** -30, 0.1, 10, "empirical")


def test_config_file(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text("# experiment\ntask = tp\ngenerator = gnp:n=50,p=0.1\neps = 1.6  # budget\n"
                    "rounds = 6\ntrim = false\n")
    values = read_config(path)
    cfg = ExperimentConfig.from_mapping(values)
    assert (cfg.task, cfg.eps, cfg.rounds, cfg.trim) == ("tp", 1.6, 6, False)
    with pytest.raises(ValueError):
        ExperimentConfig.from_mapping({**values, "colour": "red"})
    (tmp_path / "bad.cfg").write_text("task tp\n")
    with pytest.raises(ValueError):
        read_config(tmp_path / "bad.cfg")


def test_zero_noise_has_zero_spread():
    out = run_experiment(ExperimentConfig(generator="gnp:n=60,p=0.1", noise="zero", rounds=5))
    assert float(out["summary"]["std"]) == 0.0


def test_rounds_use_distinct_seeds_and_outputs_reproduce(tmp_path):
    cfg = ExperimentConfig(generator="gnp:n=80,p=0.1", task="ec", rounds=10, out_dir=str(tmp_path / "a"),
                           workers=3)
    out = run_experiment(cfg)
    seeds = {tuple(r["seed"]) for r in out["rounds"]}
    assert len(seeds) == 10
    assert len({r["result"]["value"] for r in out["rounds"]}) == 10
    again = run_experiment(ExperimentConfig(**{**cfg.__dict__, "out_dir": str(tmp_path / "b"), "workers": 1}))

    def stable(path):
        row = next(csv.DictReader(open(path)))
        return {k: v for k, v in row.items() if not k.endswith("_s")}

    assert stable(out["files"]["summary"]) == stable(again["files"]["summary"])
    lines = open(out["files"]["rounds"]).read().splitlines()
    assert len(lines) == 10 and json.loads(lines[0])["round"] == 0
    header = open(out["files"]["summary"]).readline().strip().split(",")
    assert header == CSV_COLUMNS


def test_all_tasks_produce_metrics():
    for task in ("ec", "tp", "md", "dd"):
        out = run_experiment(ExperimentConfig(generator="gnp:n=60,p=0.1", task=task, rounds=5))
        assert float(out["summary"]["mean"]) >= 0
    out = run_experiment(ExperimentConfig(generator="gnp:n=60,p=0.1", task="ec", rounds=5, method="baseline"))
    assert out["summary"]["split"] == "baseline"


def test_failed_round_is_reported(tmp_path):
    cfg = ExperimentConfig(generator="empty:n=5", task="ec", rounds=5, out_dir=str(tmp_path))
    with pytest.raises(ExperimentError):
        run_experiment(cfg)
    lines = [json.loads(x) for x in open(next(tmp_path.glob("*.jsonl")))]
    assert not any(r["ok"] for r in lines) and "UndefinedMetricError" in lines[0]["error"]


def test_summary_csv_format():
    row = dict.fromkeys(CSV_COLUMNS, "x")
    text = summary_csv(row)
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)


def test_dataset_input(tmp_path):
    from n2e.graph import write_edge_list
    p = tmp_path / "tiny.txt"
    with open(p, "w") as fh:
        write_edge_list(star(30), fh)
    out = run_experiment(ExperimentConfig(dataset=str(p), rounds=5))
    assert out["summary"]["dataset"] == "tiny"
    assert np.isfinite(float(out["summary"]["mean"]))

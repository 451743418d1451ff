"""Experiment runner: metrics, the repetition protocol and config handling.

Config files are flat ``key = value`` text (``#`` starts a comment).  Keys
match the fields of :class:`ExperimentConfig`; command-line flags override
file values.

Each run writes two files:

``<out_dir>/<name>.rounds.jsonl``
    one JSON object per round (seed path, estimate, truth, metric, timings,
    and the full mechanism output).
``<out_dir>/<name>.summary.csv``
    one row with columns ``dataset, task, eps, delta, beta, split, rounds,
    metric, mean, std, time_s, approx_s, clip_s, mechanism_s``.  ``mean`` is
    the trimmed mean (two highest and two lowest rounds dropped) when
    ``trim`` is on and there are at least five rounds; ``std`` is the
    population standard deviation of the same values.  The last four columns
    are wall times; everything before them is reproducible byte for byte.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dp import SPLITS, NoiseSource, PrivacyParams, ZeroNoise
from .graph import Graph, generate, load_edge_list, parse_generator_spec
from .mechanisms import (
    MECHANISMS,
    HistogramSpec,
    TaskResult,
    group_privacy_baseline,
    n2e_degree_distribution,
    n2e_run,
    smallest_power_of_two_at_least,
)

CSV_COLUMNS = ["dataset", "task", "eps", "delta", "beta", "split", "rounds", "metric", "mean", "std",
               "time_s", "approx_s", "clip_s", "mechanism_s"]
TASKS = ("ec", "tp", "md", "dd")
TASK_METRIC = {"ec": "relative_error", "tp": "relative_error", "md": "rank_error", "dd": "l1_histogram"}
DEFAULT_EPS = {"ec": 0.8, "tp": 0.8, "md": 0.8, "dd": 3.2}


class UndefinedMetricError(ValueError):
    pass


class ExperimentError(RuntimeError):
    pass


# ---------------------------------------------------------------- metrics ---

@dataclass(frozen=True)
class MetricValue:
    kind: str
    value: float
    normalizer: float


def relative_error(est: float, truth: float) -> float:
    if truth == 0:
        raise UndefinedMetricError("relative error is undefined for a zero true value")
    return 100.0 * abs(est - truth) / abs(truth)


def rank_error(est: float, degrees) -> float:
    d = np.asarray(degrees)
    if d.size == 0:
        raise ValueError("rank error needs at least one degree")
    top = d.max()
    if est <= top:
        return float(np.count_nonzero(d > est))
    return float(est - top)


def l1_histogram(est, truth, relative: bool = False) -> float:
    e, t = np.asarray(est, float), np.asarray(truth, float)
    if e.shape != t.shape:
        raise ValueError(f"histogram layouts differ: {e.shape} vs {t.shape}")
    l1 = float(np.abs(e - t).sum())
    if relative:
        total = t.sum()
        if total == 0:
            raise UndefinedMetricError("relative L1 is undefined for an empty histogram")
        return 100.0 * l1 / total
    return l1


def trimmed_values(values, drop: int = 2) -> list[float]:
    v = sorted(values)
    if len(v) < 2 * drop + 1:
        raise ValueError(f"need at least {2 * drop + 1} values to drop {drop} from each end")
    return v[drop:len(v) - drop]


def trimmed_mean(values, drop: int = 2) -> float:
    return math.fsum(trimmed_values(values, drop)) / (len(values) - 2 * drop)


def task_metric(task: str, graph: Graph, res: TaskResult) -> MetricValue:
    """Percentage error of one round against the exact answer on ``graph``."""
    if task in ("ec", "tp"):
        truth = MECHANISMS[task]().true_value(graph)
        return MetricValue("relative_error", relative_error(float(res.value), truth), truth)
    if task == "md":
        top = graph.max_degree
        if top == 0:
            raise UndefinedMetricError("relative rank error is undefined for an edgeless graph")
        return MetricValue("rank_error", 100.0 * rank_error(float(res.value), graph.degrees) / top, top)
    if task == "dd":
        est = np.asarray(res.value, float)
        spec = HistogramSpec(max(graph.max_degree, 1))
        truth = spec.counts(graph.degrees)
        width = max(len(est), len(truth))
        est, truth = np.pad(est, (0, width - len(est))), np.pad(truth, (0, width - len(truth)))
        return MetricValue("l1_histogram", l1_histogram(est, truth, relative=True), float(truth.sum()))
    raise ValueError(f"unknown task {task!r}")


# ----------------------------------------------------------------- config ---

@dataclass
class ExperimentConfig:
    task: str = "ec"
    dataset: str | None = None
    generator: str | None = None
    graph_seed: int = 0
    eps: float | None = None
    delta: float = 2.0 ** -30
    beta: float = 0.1
    split: str = "empirical"
    method: str = "n2e"
    seed: int = 0
    rounds: int = 10
    workers: int = 1
    lp_workers: int = 1
    trim: bool = True
    noise: str = "laplace"
    out_dir: str | None = None
    name: str | None = None

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}")
        if (self.dataset is None) == (self.generator is None):
            raise ValueError("give exactly one of dataset or generator")
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {sorted(SPLITS)}")
        if self.method not in ("n2e", "baseline"):
            raise ValueError("method must be 'n2e' or 'baseline'")
        if self.method == "baseline" and self.task in ("md", "dd"):
            raise ValueError("the group-privacy baseline supports ec and tp only")
        if self.noise not in ("laplace", "zero"):
            raise ValueError("noise must be 'laplace' or 'zero'")
        if self.rounds < 1 or self.workers < 1 or self.lp_workers < 1:
            raise ValueError("rounds and worker counts must be positive")
        if self.trim and self.rounds < 5:
            raise ValueError("the trimmed-mean protocol needs at least 5 rounds")
        if self.eps is None:
            self.eps = DEFAULT_EPS[self.task]
        self.privacy  # validates eps/delta/beta

    @property
    def privacy(self) -> PrivacyParams:
        return PrivacyParams(float(self.eps), 0.0 if self.task == "dd" else float(self.delta), float(self.beta))

    @property
    def dataset_label(self) -> str:
        return Path(self.dataset).stem if self.dataset else str(self.generator)

    @classmethod
    def from_mapping(cls, values: dict) -> "ExperimentConfig":
        fields = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if raw is None:
                continue
            if key not in fields:
                raise ValueError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(fields[key].type, raw)
        return cls(**kwargs)


def _coerce(type_name, raw):
    if not isinstance(raw, str):
        return raw
    t = str(type_name)
    if t.startswith("bool"):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if t.startswith("int"):
        return int(raw)
    if t.startswith("float"):
        return float(raw)
    return raw


def read_config(path: str | os.PathLike) -> dict[str, str]:
    """Parse a flat ``key = value`` file."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, eq, value = line.partition("=")
            if not eq:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            out[key.strip()] = value.strip()
    return out


def load_graph(cfg: ExperimentConfig) -> Graph:
    if cfg.dataset:
        return load_edge_list(cfg.dataset).graph
    model, params = parse_generator_spec(cfg.generator)
    return generate(model, np.random.default_rng(cfg.graph_seed), **params)


# ----------------------------------------------------------------- runner ---

def run_round(cfg: ExperimentConfig, graph: Graph, index: int, cache: dict | None = None) -> TaskResult:
    root = ZeroNoise(cfg.seed) if cfg.noise == "zero" else NoiseSource(cfg.seed)
    src = root.spawn(index)
    p = cfg.privacy
    if cfg.method == "baseline":
        return group_privacy_baseline(graph, MECHANISMS[cfg.task](), p,
                                      smallest_power_of_two_at_least(graph.n), src)
    if cfg.task == "dd":
        return n2e_degree_distribution(graph, p, SPLITS[cfg.split], src, cfg.lp_workers, cache)
    return n2e_run(graph, MECHANISMS[cfg.task](), p, SPLITS[cfg.split], src, cfg.lp_workers, cache)


def _summary_row(cfg: ExperimentConfig, metric: str, values: list[float], timings: list[dict],
                 wall: float) -> dict:
    kept = trimmed_values(values) if cfg.trim and len(values) >= 5 else list(values)
    mean = math.fsum(kept) / len(kept)
    std = float(np.std(kept))
    step = {k: math.fsum(t.get(k, 0.0) for t in timings) / len(timings)
            for k in ("approx_s", "clip_s", "mechanism_s")}
    p = cfg.privacy
    return {"dataset": cfg.dataset_label, "task": cfg.task, "eps": repr(p.eps), "delta": repr(p.delta),
            "beta": repr(p.beta), "split": cfg.split if cfg.method == "n2e" else "baseline",
            "rounds": cfg.rounds, "metric": metric, "mean": repr(mean), "std": repr(std),
            "time_s": f"{wall:.6f}", **{k: f"{v:.6f}" for k, v in step.items()}}


def run_experiment(cfg: ExperimentConfig, graph: Graph | None = None) -> dict:
    """Run ``cfg.rounds`` independent rounds and summarize them.

    Round ``i`` draws its noise from ``NoiseSource(cfg.seed).spawn(i)``.
    Rounds run on up to ``cfg.workers`` threads and share the cache of exact
    LP values (deterministic per graph, so sharing never changes results).
    A failed round is recorded in the JSON lines and makes the run raise
    :class:`ExperimentError` after the files are written.
    """
    graph = load_graph(cfg) if graph is None else graph
    cache: dict = {}
    started = time.perf_counter()

    def one(i: int) -> dict:
        t0 = time.perf_counter()
        try:
            res = run_round(cfg, graph, i, cache)
            m = task_metric(cfg.task, graph, res)
        except Exception as exc:  # a round failure is data, not a crash
            return {"round": i, "ok": False, "error": f"{type(exc).__name__}: {exc}"}
        return {"round": i, "ok": True, "seed": [cfg.seed, i], "metric": m.kind, "value": m.value,
                "normalizer": m.normalizer, "wall_s": time.perf_counter() - t0, "result": res.as_dict()}

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(one, range(cfg.rounds)))
    else:
        records = [one(i) for i in range(cfg.rounds)]
    wall = time.perf_counter() - started

    failed = [r for r in records if not r["ok"]]
    ok = [r for r in records if r["ok"]]
    summary = None
    if not failed:
        summary = _summary_row(cfg, TASK_METRIC[cfg.task], [r["value"] for r in ok],
                               [r["result"]["timings"] for r in ok], wall)
    out = {"config": dataclasses.asdict(cfg), "summary": summary, "rounds": records, "failed": len(failed)}
    if cfg.out_dir:
        out["files"] = write_outputs(cfg, records, summary)
    if failed:
        raise ExperimentError(f"{len(failed)} of {cfg.rounds} rounds failed; first: {failed[0]['error']}")
    return out


def summary_csv(summary: dict) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerow(summary)
    return buf.getvalue()


def write_outputs(cfg: ExperimentConfig, records: list[dict], summary: dict | None) -> dict:
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = cfg.name or f"{cfg.dataset_label.replace(':', '_').replace(',', '_').replace('=', '')}-{cfg.task}"
    rounds_path = out_dir / f"{name}.rounds.jsonl"
    with open(rounds_path, "w") as fh:
        for r in records:
            fh.write(json.dumps(r, sort_keys=True, default=_json_default) + "\n")
    files = {"rounds": str(rounds_path)}
    if summary is not None:
        csv_path = out_dir / f"{name}.summary.csv"
        csv_path.write_text(summary_csv(summary))
        files["summary"] = str(csv_path)
    return files


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")

"""Experiment harness: run the three miners, repeat the stochastic ones, report metrics."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .autoencoder import TrainConfig
from .dataset import BinaryMatrix, load_dataset
from .fpgrowth import fpgrowth_rules
from .miner import ArmAeConfig, full_pipeline
from .nsgaii import NsgaConfig, evolve
from .rules import RuleSet, coverage, read_rules, summarize, write_rules

log = logging.getLogger(__name__)

ALGORITHMS = ("armae", "fpgrowth", "nsgaii")
OUTPUT_DIR_ENV = "ARMAE_OUTPUT_DIR"

# (min_support, min_confidence, archive capacity) used for the UCI datasets
PRESETS = {
    "chess": {"min_support": 0.005, "min_confidence": 0.01, "archive_capacity": 300},
    "nursery": {"min_support": 0.01, "min_confidence": 0.01, "archive_capacity": 150},
    "plants": {"min_support": 0.005, "min_confidence": 0.015, "archive_capacity": 300},
}


@dataclass
class FpConfig:
    min_support: float = 0.01
    min_confidence: float = 0.01
    max_antecedent: int = 2


@dataclass
class ExperimentConfig:
    dataset: str
    dataset_format: str = "auto"
    has_header: bool = False
    algorithms: tuple[str, ...] = ALGORITHMS
    repetitions: int = 10
    base_seed: int = 0
    output_dir: str | None = None
    cache_dir: str | None = None
    train: TrainConfig = field(default_factory=TrainConfig)
    armae: ArmAeConfig = field(default_factory=ArmAeConfig)
    fpgrowth: FpConfig = field(default_factory=FpConfig)
    nsgaii: NsgaConfig = field(default_factory=NsgaConfig)

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms: {sorted(unknown)}")

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Path | None = None) -> "ExperimentConfig":
        """Build a config from the JSON layout documented in the README.

        A ``preset`` key (chess, nursery, plants) fills in the FP-Growth
        thresholds and the NSGA-II archive size unless they are given.
        """
        raw = dict(raw)
        preset = PRESETS.get(str(raw.pop("preset", "")).lower(), {})
        dataset = raw.pop("dataset")
        if isinstance(dataset, dict):
            path = dataset["path"]
            fmt = dataset.get("format", "auto")
            has_header = bool(dataset.get("has_header", False))
        else:
            path, fmt, has_header = dataset, "auto", False
        if base_dir is not None and not Path(path).is_absolute():
            path = str(base_dir / path)

        algorithms = raw.pop("algorithms", "all")
        if algorithms == "all":
            algorithms = ALGORITHMS
        elif isinstance(algorithms, str):
            algorithms = (algorithms,)

        fp = {k: preset[k] for k in ("min_support", "min_confidence") if k in preset}
        fp.update(raw.pop("fpgrowth", {}))
        ns = {"archive_capacity": preset["archive_capacity"]} if preset else {}
        ns.update(raw.pop("nsgaii", {}))
        train = raw.pop("train", {})
        armae = raw.pop("armae", {})
        allowed = {f.name for f in fields(cls)}
        extra = set(raw) - allowed
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(
            dataset=path,
            dataset_format=fmt,
            has_header=has_header,
            algorithms=tuple(algorithms),
            train=TrainConfig(**train),
            armae=ArmAeConfig(**armae),
            fpgrowth=FpConfig(**fp),
            nsgaii=NsgaConfig(**ns),
            **raw,
        )

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text()), base_dir=path.parent)


def dataset_digest(data: BinaryMatrix) -> str:
    h = hashlib.sha256()
    h.update("\x1f".join(data.items).encode())
    h.update(str(data.cells.shape).encode())
    h.update(data.cells.tobytes())
    return h.hexdigest()


def _fp_cache_paths(cache_dir: Path, digest: str, fp: FpConfig) -> tuple[Path, Path]:
    key = f"{digest[:16]}_s{fp.min_support!r}_c{fp.min_confidence!r}_a{fp.max_antecedent}"
    return cache_dir / f"fpgrowth_{key}.jsonl", cache_dir / f"fpgrowth_{key}.json"


def reference_rules(data: BinaryMatrix, fp: FpConfig, cache_dir: Path | None):
    """FP-Growth rules plus their mining time, cached on disk when possible."""
    if cache_dir is not None:
        rules_path, meta_path = _fp_cache_paths(cache_dir, dataset_digest(data), fp)
        if rules_path.exists() and meta_path.exists():
            log.info("using cached FP-Growth rules %s", rules_path)
            meta = json.loads(meta_path.read_text())
            return read_rules(rules_path, data.items), meta["time_s"]
    start = time.perf_counter()
    rules = fpgrowth_rules(data, fp.min_support, fp.min_confidence, fp.max_antecedent)
    seconds = time.perf_counter() - start
    if cache_dir is not None:
        cache_dir.mkdir(parents=True, exist_ok=True)
        write_rules(rules, data.items, rules_path)
        meta_path.write_text(json.dumps({"time_s": seconds, "rules": len(rules)}))
    return rules, seconds


def _run_record(algorithm, run, seed, seconds, rules: RuleSet, reference, path, **extra):
    s = summarize(rules)
    record = {
        "algorithm": algorithm,
        "run": run,
        "seed": seed,
        "time_s": seconds,
        "rules": s.count,
        "avg_support": s.avg_support,
        "avg_confidence": s.avg_confidence,
        "support_positive_fraction": s.fraction_support_positive,
        "file": path,
    }
    if reference is not None and algorithm != "fpgrowth":
        record["coverage"] = coverage(rules, reference)
    record.update(extra)
    return record


METRICS = ("time_s", "rules", "avg_support", "avg_confidence",
           "support_positive_fraction", "coverage")


def aggregate(runs: list[dict]) -> dict:
    """Average every metric per algorithm over its successful runs."""
    report: dict[str, dict] = {}
    for algorithm in ALGORITHMS:
        ok = [r for r in runs if r["algorithm"] == algorithm and "error" not in r]
        failed = sum(1 for r in runs if r["algorithm"] == algorithm and "error" in r)
        if not ok and not failed:
            continue
        entry: dict = {}
        for metric in METRICS:
            values = [r[metric] for r in ok if metric in r]
            if values:
                entry[metric] = sum(values) / len(values)
        entry["runs"] = len(ok)
        if failed:
            entry["failed_runs"] = failed
        report[algorithm] = entry
    return report


def format_table(report: dict) -> str:
    header = ["algorithm", "time_s", "rules", "avg_support", "avg_confidence",
              "supp>0", "coverage", "runs"]
    rows = [header]
    for algorithm, m in report.items():
        def cell(key, fmt):
            return fmt.format(m[key]) if key in m else "-"
        rows.append([
            algorithm,
            cell("time_s", "{:.3f}"),
            cell("rules", "{:.1f}"),
            cell("avg_support", "{:.4f}"),
            cell("avg_confidence", "{:.4f}"),
            cell("support_positive_fraction", "{:.3f}"),
            cell("coverage", "{:.3f}"),
            str(m["runs"]),
        ])
    widths = [max(len(r[k]) for r in rows) for k in range(len(header))]
    lines = ["  ".join(c.ljust(w) if k == 0 else c.rjust(w)
                       for k, (c, w) in enumerate(zip(r, widths))) for r in rows]
    return "\n".join(lines) + "\n"


@dataclass
class Report:
    metrics: dict
    runs: list[dict]

    def to_json(self) -> str:
        return json.dumps(self.metrics, indent=2, sort_keys=True) + "\n"


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "results"))


def run_experiment(cfg: ExperimentConfig, data: BinaryMatrix | None = None) -> Report:
    """Run every selected algorithm and write report.json, report.txt and runs/.

    FP-Growth runs once; ARM-AE and NSGA-II run ``cfg.repetitions`` times
    with seeds ``base_seed + k``. Timings cover the algorithms only.
    """
    out = Path(cfg.output_dir) if cfg.output_dir else default_output_dir()
    runs_dir = out / "runs"
    runs_dir.mkdir(parents=True, exist_ok=True)
    if data is None:
        data = load_dataset(cfg.dataset, cfg.dataset_format, cfg.has_header)
    names = data.items
    cache_dir = Path(cfg.cache_dir) if cfg.cache_dir else out / "cache"

    runs: list[dict] = []
    reference = None
    if "fpgrowth" in cfg.algorithms:
        try:
            reference, seconds = reference_rules(data, cfg.fpgrowth, cache_dir)
            path = runs_dir / "fpgrowth.jsonl"
            write_rules(reference, names, path)
            runs.append(_run_record("fpgrowth", 0, None, seconds, reference, None,
                                    path.name))
        except Exception as exc:  # reported, remaining algorithms still run
            log.exception("fpgrowth failed")
            runs.append({"algorithm": "fpgrowth", "run": 0, "error": repr(exc)})

    for k in range(cfg.repetitions):
        seed = cfg.base_seed + k
        if "armae" in cfg.algorithms:
            try:
                train = TrainConfig(**{**asdict(cfg.train), "seed": seed})
                result = full_pipeline(data, train, cfg.armae)
                path = runs_dir / f"armae_{k:03d}.jsonl"
                write_rules(result.rules, names, path)
                runs.append(_run_record("armae", k, seed, result.seconds, result.rules,
                                        reference, path.name, epochs=result.epochs_run))
            except Exception as exc:
                log.exception("armae run %d failed", k)
                runs.append({"algorithm": "armae", "run": k, "seed": seed,
                             "error": repr(exc)})
        if "nsgaii" in cfg.algorithms:
            try:
                ns = NsgaConfig(**{**asdict(cfg.nsgaii), "seed": seed})
                start = time.perf_counter()
                result = evolve(data, ns)
                seconds = time.perf_counter() - start
                rules = result.archive.to_ruleset()
                path = runs_dir / f"nsgaii_{k:03d}.jsonl"
                write_rules(rules, names, path)
                runs.append(_run_record("nsgaii", k, seed, seconds, rules, reference,
                                        path.name, generations=result.generations_run))
            except Exception as exc:
                log.exception("nsgaii run %d failed", k)
                runs.append({"algorithm": "nsgaii", "run": k, "seed": seed,
                             "error": repr(exc)})

    report = Report(aggregate(runs), runs)
    (out / "report.json").write_text(report.to_json())
    (out / "report.txt").write_text(format_table(report.metrics))
    (runs_dir / "runs.json").write_text(json.dumps(runs, indent=2, sort_keys=True) + "\n")
    return report


def sweep_goal_loss(
    data: BinaryMatrix,
    thresholds,
    runs: int = 10,
    train: TrainConfig | None = None,
    mine_cfg: ArmAeConfig | None = None,
    base_seed: int = 0,
) -> list[dict]:
    """Average ARM-AE support per loss-delta threshold, for plotting."""
    train = train or TrainConfig()
    mine_cfg = mine_cfg or ArmAeConfig()
    rows = []
    for threshold in thresholds:
        for k in range(runs):
            cfg = TrainConfig(**{**asdict(train), "seed": base_seed + k,
                                 "loss_delta_threshold": threshold})
            result = full_pipeline(data, cfg, mine_cfg)
            s = summarize(result.rules)
            rows.append({"threshold": threshold, "run": k, "epochs": result.epochs_run,
                         "avg_support": s.avg_support, "avg_confidence": s.avg_confidence})
    return rows


def write_sweep_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]) if rows else ["threshold"],
                                lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)

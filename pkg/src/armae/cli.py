"""Command line entry point: ``armae {mine,bench,synth,score,sweep}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .autoencoder import TrainConfig, train_until_plateau
from .bench import ExperimentConfig, run_experiment, sweep_goal_loss, write_sweep_csv
from .dataset import SyntheticSpec, generate_synthetic, load_dataset, write_binary_csv
from .fpgrowth import fpgrowth_rules
from .miner import ArmAeConfig, mine
from .nsgaii import NsgaConfig, evolve, write_log
from .rules import dumps_csv, dumps_jsonl, read_rules, score_rules, summarize

log = logging.getLogger("armae")


def _planted(text: str) -> tuple[int, int, float]:
    try:
        a, c, p = text.split(":")
        return int(a), int(c), float(p)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected ANTE:CONS:PROB, got {text!r}") from None


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="dataset file")
    p.add_argument("--format", default="auto",
                   choices=["auto", "binary", "categorical", "transactions"])
    p.add_argument("--header", action="store_true",
                   help="categorical file has a header row")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="armae", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine", help="mine rules with one algorithm")
    p.add_argument("--algo", required=True, choices=["armae", "fpgrowth", "nsgaii"])
    _add_data_args(p)
    p.add_argument("--out", help="rule file (.jsonl or .csv); stdout if omitted")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-antecedent", type=int, default=2)
    p.add_argument("--min-support", type=float, default=0.01)
    p.add_argument("--min-confidence", type=float, default=0.01)
    p.add_argument("--rules-per-consequent", type=int, default=2)
    p.add_argument("--similarity", type=float, default=0.5)
    p.add_argument("--loss-threshold", type=float, default=0.1)
    p.add_argument("--max-epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--population", type=int, default=100)
    p.add_argument("--archive-capacity", type=int, default=300)
    p.add_argument("--save-model", help="write the trained autoencoder as JSON")
    p.add_argument("--trace", help="write the ARM-AE mining trace as JSON")
    p.add_argument("--evolution-log", help="write per-generation NSGA-II averages as CSV")

    p = sub.add_parser("bench", help="run a full experiment from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory (default: $ARMAE_OUTPUT_DIR or ./results)")

    p = sub.add_parser("synth", help="write a synthetic binary dataset")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--items", type=int, required=True)
    p.add_argument("--plant", type=_planted, action="append", default=[],
                   metavar="ANTE:CONS:PROB")
    p.add_argument("--density", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("score", help="re-score a rule file against a dataset")
    p.add_argument("--rules", required=True)
    _add_data_args(p)
    p.add_argument("--out", help="rescored rule file; stdout if omitted")

    p = sub.add_parser("sweep", help="average ARM-AE support per loss-delta threshold")
    _add_data_args(p)
    p.add_argument("--thresholds", default="1,0.5,0.1,0.05,0.01,0.005,0.001")
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--max-epochs", type=int, default=100)
    p.add_argument("--out", required=True, help="CSV output")
    return parser


def _emit(rules, names, out: str | None) -> None:
    text = dumps_csv(rules, names) if out and out.endswith(".csv") else dumps_jsonl(rules, names)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _cmd_mine(args) -> int:
    data = load_dataset(args.data, args.format, args.header)
    start = time.perf_counter()
    if args.algo == "fpgrowth":
        rules = fpgrowth_rules(data, args.min_support, args.min_confidence,
                               args.max_antecedent)
    elif args.algo == "armae":
        train = TrainConfig(learning_rate=args.learning_rate, batch_size=args.batch_size,
                            max_epochs=args.max_epochs,
                            loss_delta_threshold=args.loss_threshold, seed=args.seed)
        trained = train_until_plateau(data, train)
        cfg = ArmAeConfig(args.rules_per_consequent, args.max_antecedent, args.similarity)
        mined, trace = mine(trained.model, data.n_items, cfg)
        rules = score_rules(data, mined)
        if args.save_model:
            trained.model.save(args.save_model)
        if args.trace:
            Path(args.trace).write_text(json.dumps(trace.to_json()))
    else:
        cfg = NsgaConfig(population=args.population, archive_capacity=args.archive_capacity,
                         seed=args.seed)
        result = evolve(data, cfg)
        rules = result.archive.to_ruleset()
        if args.evolution_log:
            write_log(result.log, args.evolution_log)
    seconds = time.perf_counter() - start
    s = summarize(rules)
    log.info("%s: %d rules in %.3fs, avg support %.4f, avg confidence %.4f",
             args.algo, s.count, seconds, s.avg_support, s.avg_confidence)
    _emit(rules, data.items, args.out)
    return 0


def _cmd_bench(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    if args.out:
        cfg.output_dir = args.out
    report = run_experiment(cfg)
    failed = sum(1 for r in report.runs if "error" in r)
    if failed:
        log.error("%d run(s) failed; see runs/runs.json", failed)
        return 1
    return 0


def _cmd_synth(args) -> int:
    spec = SyntheticSpec(args.rows, args.items, tuple(args.plant), args.density, args.seed)
    write_binary_csv(generate_synthetic(spec), args.out)
    return 0


def _cmd_score(args) -> int:
    data = load_dataset(args.data, args.format, args.header)
    rules = score_rules(data, read_rules(args.rules, data.items))
    _emit(rules, data.items, args.out)
    return 0


def _cmd_sweep(args) -> int:
    data = load_dataset(args.data, args.format, args.header)
    thresholds = [float(t) for t in args.thresholds.split(",")]
    rows = sweep_goal_loss(data, thresholds, args.runs,
                           TrainConfig(max_epochs=args.max_epochs))
    write_sweep_csv(rows, args.out)
    return 0


COMMANDS = {
    "mine": _cmd_mine,
    "bench": _cmd_bench,
    "synth": _cmd_synth,
    "score": _cmd_score,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"armae {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

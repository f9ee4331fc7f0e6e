"""Exit criteria for the package, one test per criterion.

Run ``pytest tests/test_acceptance.py -v``; a PASS/FAIL/SKIP line per
criterion is printed in the terminal summary. Criterion 8 needs the UCI
files and is skipped unless ``ARMAE_UCI_DIR`` points at them.
"""

import json
import os
import time
from pathlib import Path

import numpy as np
import pytest

from armae.autoencoder import (
    TrainConfig,
    init_model,
    loss_and_gradients,
    train_until_plateau,
)
from armae.bench import ExperimentConfig, reference_rules, FpConfig
from armae.cli import main
from armae.dataset import BinaryMatrix, SyntheticSpec, generate_synthetic, load_dataset
from armae.fpgrowth import fpgrowth_rules
from armae.miner import ArmAeConfig, full_pipeline, mine
from armae.nsgaii import NsgaConfig, dominates, evolve, fast_non_dominated_sort
from armae.rules import Rule, brute_force_mine, coverage, score_rule, summarize

from conftest import count_rows
from test_autoencoder import numeric_gradients


# -- 1 ---------------------------------------------------------------------

def test_c1_fpgrowth_equals_brute_force():
    """FP-Growth == brute force on 20 synthetic datasets x 6 threshold pairs."""
    start = time.perf_counter()
    compared = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        items = int(rng.integers(4, 13))
        rows = int(rng.integers(50, 201))
        planted = [(0, 1, 0.8), (2, 3, 0.6)]
        data = generate_synthetic(SyntheticSpec(rows, items, planted,
                                                float(rng.uniform(0.15, 0.5)), seed))
        for min_s in (0.05, 0.1, 0.25):
            for min_c in (0.1, 0.5):
                fp = fpgrowth_rules(data, min_s, min_c, 2)
                bf = brute_force_mine(data, min_s, min_c, 2)
                assert fp.keys() == bf.keys()
                for r in fp:
                    ref = bf[r.rule]
                    assert abs(r.support - ref.support) <= 1e-12
                    assert abs(r.confidence - ref.confidence) <= 1e-12
                compared += 1
    assert compared == 120
    assert time.perf_counter() - start < 10


# -- 2 ---------------------------------------------------------------------

def test_c2_score_rule_matches_row_counting():
    """score_rule on 1,000 random rules equals direct row counting exactly."""
    rng = np.random.default_rng(2024)
    matrices = []
    for k in range(20):
        rows, items = int(rng.integers(1, 120)), int(rng.integers(2, 15))
        cells = rng.random((rows, items)) < rng.uniform(0.05, 0.9)
        matrices.append(BinaryMatrix(tuple(f"i{j}" for j in range(items)), cells))
    for _ in range(1000):
        data = matrices[int(rng.integers(len(matrices)))]
        perm = rng.permutation(data.n_items)
        size = int(rng.integers(1, min(4, data.n_items)))
        rule = Rule(tuple(perm[:size].tolist()), int(perm[size]))
        scored = score_rule(data, rule)
        a = count_rows(data, rule.antecedent)
        u = count_rows(data, rule.antecedent + (rule.consequent,))
        assert scored.support == u / data.n_rows
        assert scored.confidence == (u / a if a else 0.0)


# -- 3 ---------------------------------------------------------------------

def test_c3_gradient_check():
    """Backprop vs central differences (h=1e-5) on 5 random 8-item models."""
    start = time.perf_counter()
    for seed in range(5):
        rng = np.random.default_rng(100 + seed)
        model = init_model(8, 100 + seed)
        x = rng.integers(0, 2, size=(16, 8)).astype(float)
        _, analytic = loss_and_gradients(model, x, x)
        numeric = numeric_gradients(model, x, x, h=1e-5)
        for a, n in zip(analytic, numeric):
            rel = np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-300)
            assert rel.max() < 1e-3
    assert time.perf_counter() - start < 5


# -- 4 ---------------------------------------------------------------------

def test_c4_plateau_stopping_semantics():
    """Threshold above the first delta returns init; threshold 0 runs max_epochs."""
    data = generate_synthetic(SyntheticSpec(500, 10, [(0, 1, 0.9)], 0.3, seed=4))
    probe = train_until_plateau(data, TrainConfig(loss_delta_threshold=0.0, max_epochs=1, seed=8))
    first_delta = abs(probe.losses[0] - probe.losses[1])
    for threshold in (first_delta * 1.01, 1.0, np.inf):
        result = train_until_plateau(data, TrainConfig(loss_delta_threshold=threshold, seed=8))
        assert result.epochs_run == 1
        assert result.model.equals(init_model(10, 8))
    result = train_until_plateau(data, TrainConfig(loss_delta_threshold=0.0, max_epochs=12))
    assert result.epochs_run == 12


# -- 5 ---------------------------------------------------------------------

def _check_structure(rules, n_items, cfg):
    assert len(rules) <= n_items * cfg.rules_per_consequent * cfg.max_antecedent
    pairs = {}
    for r in rules:
        assert r.consequent not in r.antecedent
        assert 1 <= len(r.antecedent) <= cfg.max_antecedent
        if len(r.antecedent) == 2:
            pairs.setdefault(r.consequent, []).append(set(r.antecedent))
    if cfg.similarity_threshold == 0.5:
        for group in pairs.values():
            for i, a in enumerate(group):
                for b in group[i + 1:]:
                    assert len(a & b) <= 1


def test_c5_armae_structural_bounds():
    """Rule count <= items*N*M (<= 300 at 75 items), disjointness, overlap <= 1."""
    # Chess-like: 75 items, defaults
    data = generate_synthetic(SyntheticSpec(3196, 75, [(0, 1, 0.9), (2, 3, 0.8)], 0.48, 5))
    result = full_pipeline(data, TrainConfig(seed=5), ArmAeConfig())
    assert len(result.rules) <= 300
    _check_structure(result.rules, 75, ArmAeConfig())
    for seed, width, n, m in [(0, 5, 3, 3), (1, 20, 2, 2), (2, 32, 2, 2), (3, 12, 4, 2)]:
        cfg = ArmAeConfig(n, m, 0.5)
        rules, _ = mine(init_model(width, seed), width, cfg)
        _check_structure(rules, width, cfg)


# -- 6 ---------------------------------------------------------------------

PLANTED = [(0, 1, 0.9), (2, 3, 0.9), (4, 5, 0.9)]
# at 10% density the initial loss is ~0.13, so the default 0.1 threshold stops
# before any update; 0.01 gives the intended few epochs of training here
PLANTED_TRAIN_THRESHOLD = 0.01


def test_c6_planted_rule_recovery():
    """>=2 of 3 planted pairs in >=8/10 runs; supp>0 fraction >=0.98 in every run."""
    start = time.perf_counter()
    recovered_runs = 0
    fractions = []
    for seed in range(10):
        data = generate_synthetic(SyntheticSpec(2000, 20, PLANTED, 0.1, seed))
        cfg = TrainConfig(loss_delta_threshold=PLANTED_TRAIN_THRESHOLD, seed=seed)
        result = full_pipeline(data, cfg, ArmAeConfig())
        keys = result.rules.keys()
        found = sum(Rule((a,), c) in keys or Rule((c,), a) in keys for a, c, _ in PLANTED)
        recovered_runs += found >= 2
        fractions.append(summarize(result.rules).fraction_support_positive)
    assert recovered_runs >= 8
    assert min(fractions) >= 0.98, fractions
    assert time.perf_counter() - start < 60


# -- 7 ---------------------------------------------------------------------

def _peel(objs):
    remaining = list(range(len(objs)))
    fronts = []
    while remaining:
        front = [i for i in remaining
                 if not any(dominates(objs[j], objs[i]) for j in remaining if j != i)]
        fronts.append(set(front))
        remaining = [i for i in remaining if i not in front]
    return fronts


def test_c7_nsgaii_sort_and_archive():
    """Sort == brute force on 100 populations of 100; archive valid and re-scorable."""
    rng = np.random.default_rng(7)
    for k in range(100):
        objs = [tuple(p) for p in np.round(rng.random((100, 2)), 2 if k % 2 else 1)]
        assert [set(f) for f in fast_non_dominated_sort(objs)] == _peel(objs)
    data = generate_synthetic(SyntheticSpec(1500, 15, PLANTED, 0.15, seed=7))
    for seed in range(3):
        archive = evolve(data, NsgaConfig(seed=seed, archive_capacity=150)).archive
        assert 0 < len(archive) <= 150
        assert len({r.rule for r in archive.rules}) == len(archive)
        for r in archive.rules:
            assert r.consequent not in r.antecedent and 1 <= len(r.antecedent) <= 2
            again = score_rule(data, r.rule)
            assert (again.support, again.confidence) == (r.support, r.confidence)


# -- 8 ---------------------------------------------------------------------

UCI_DIR = os.environ.get("ARMAE_UCI_DIR")
UCI = {
    # file, format, expected FP-Growth rule count, ARM-AE coverage, ARM-AE support
    "chess": ("kr-vs-kp.data", "categorical", 278_823, 0.20, 0.48),
    "nursery": ("nursery.data", "categorical", 18_140, 0.40, 0.10),
    "plants": ("plants.data", "transactions", 269_586, 0.44, 0.08),
}


@pytest.mark.skipif(not UCI_DIR, reason="set ARMAE_UCI_DIR to the UCI chess/nursery/plants files")
@pytest.mark.parametrize("name", list(UCI))
def test_c8_uci_reproduction(name):
    """FP-Growth counts within 5%, ARM-AE coverage +-0.15 and support +-0.05."""
    filename, fmt, fp_rules, cov_target, supp_target = UCI[name]
    path = Path(UCI_DIR) / filename
    if not path.exists():
        pytest.skip(f"{path} not found")
    data = load_dataset(path, fmt)
    cfg = ExperimentConfig.from_dict({"dataset": str(path), "preset": name})
    reference, fp_seconds = reference_rules(data, cfg.fpgrowth, None)
    assert abs(len(reference) - fp_rules) <= 0.05 * fp_rules
    covs, supports, times = [], [], []
    for seed in range(10):
        result = full_pipeline(data, TrainConfig(seed=seed), ArmAeConfig())
        covs.append(coverage(result.rules, reference))
        supports.append(summarize(result.rules).avg_support)
        times.append(result.seconds)
    assert abs(np.mean(covs) - cov_target) <= 0.15
    assert abs(np.mean(supports) - supp_target) <= 0.05
    if name in ("chess", "plants"):
        assert np.mean(times) < fp_seconds


# -- 9 ---------------------------------------------------------------------

def _mask_timing(obj):
    if isinstance(obj, dict):
        return {k: ("<time>" if k == "time_s" else _mask_timing(v)) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_mask_timing(v) for v in obj]
    return obj


def test_c9_cli_determinism(tmp_path):
    """Repeated CLI runs with a fixed seed give byte-identical outputs."""
    def run_all(tag):
        d = tmp_path / tag
        d.mkdir()
        data = d / "toy.csv"
        assert main(["synth", "--rows", "1000", "--items", "10", "--plant", "0:1:0.9",
                     "--plant", "2:3:0.8", "--seed", "7", "--out", str(data)]) == 0
        for algo in ("armae", "fpgrowth", "nsgaii"):
            assert main(["mine", "--algo", algo, "--data", str(data), "--seed", "3",
                         "--archive-capacity", "50", "--out", str(d / f"{algo}.jsonl")]) == 0
        assert main(["score", "--rules", str(d / "armae.jsonl"), "--data", str(data),
                     "--out", str(d / "rescored.jsonl")]) == 0
        config = d / "exp.json"
        config.write_text(json.dumps({"dataset": "toy.csv", "repetitions": 2, "base_seed": 5,
                                      "nsgaii": {"archive_capacity": 40}}))
        assert main(["bench", "--config", str(config), "--out", str(d / "bench")]) == 0
        return d

    a, b = run_all("a"), run_all("b")
    byte_identical = ["toy.csv", "armae.jsonl", "fpgrowth.jsonl", "nsgaii.jsonl",
                      "rescored.jsonl"]
    byte_identical += [str(p.relative_to(a)) for p in (a / "bench" / "runs").glob("*.jsonl")]
    for name in byte_identical:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    # wall-clock seconds are the only field allowed to differ between reports
    for name in ("bench/report.json", "bench/runs/runs.json"):
        ja = json.loads((a / name).read_text())
        jb = json.loads((b / name).read_text())
        assert _mask_timing(ja) == _mask_timing(jb), name

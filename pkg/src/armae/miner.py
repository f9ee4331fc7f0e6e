"""Rule extraction from a trained autoencoder.

For every consequent the network is queried with the indicator vector of
the consequent plus the antecedent grown so far; the best-scoring eligible
item is appended and each grown antecedent is emitted as a rule.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .autoencoder import AEModel, TrainConfig, forward, train_until_plateau
from .dataset import BinaryMatrix
from .rules import Itemset, Rule, RuleSet, score_rules


@dataclass
class ArmAeConfig:
    rules_per_consequent: int = 2
    max_antecedent: int = 2
    similarity_threshold: float = 0.5
    consequents: Sequence[int] | None = None  # None means every item

    def __post_init__(self):
        if self.rules_per_consequent < 1 or self.max_antecedent < 1:
            raise ValueError("rules_per_consequent and max_antecedent must be >= 1")
        if not 0.0 <= self.similarity_threshold <= 1.0:
            raise ValueError("similarity_threshold must lie in [0, 1]")


@dataclass
class StepRecord:
    consequent: int
    rule_index: int
    step: int
    ranking: list[int]
    chosen: int | None
    rejected: dict[int, str] = field(default_factory=dict)


@dataclass
class MiningTrace:
    steps: list[StepRecord] = field(default_factory=list)

    def to_json(self) -> list[dict]:
        return [
            {
                "consequent": s.consequent,
                "rule_index": s.rule_index,
                "step": s.step,
                "ranking": s.ranking,
                "chosen": s.chosen,
                "rejected": {str(k): v for k, v in s.rejected.items()},
            }
            for s in self.steps
        ]


def compute_similarity(previous: Sequence[Itemset], candidate: Itemset) -> float:
    """Largest overlap of ``candidate`` with an earlier antecedent.

    Overlap is measured as a fraction of the earlier antecedent's size, and
    earlier antecedents shorter than the candidate are ignored.
    """
    cand = set(candidate)
    best = 0.0
    for prev in previous:
        if len(prev) < len(cand):
            continue
        shared = sum(1 for item in prev if item in cand)
        best = max(best, shared / len(prev))
    return best


SimilarityFn = Callable[[Sequence[Itemset], Itemset], float]


def mine(
    model: AEModel,
    item_count: int,
    cfg: ArmAeConfig,
    similarity: SimilarityFn = compute_similarity,
) -> tuple[RuleSet, MiningTrace]:
    """Extract unscored rules from ``model``; ties in the ranking go to the lower item id."""
    if model.width != item_count:
        raise ValueError(f"model width {model.width} != item count {item_count}")
    consequents = range(item_count) if cfg.consequents is None else cfg.consequents
    rules = RuleSet()
    trace = MiningTrace()
    for c in consequents:
        found: list[Itemset] = []
        for i in range(cfg.rules_per_consequent):
            antecedent: list[int] = []
            for j in range(cfg.max_antecedent):
                x = np.zeros(item_count)
                x[antecedent] = 1.0
                x[c] = 1.0
                scores = forward(model, x)
                # stable sort on negated scores: descending, ties by ascending id
                ranking = np.argsort(-scores, kind="stable").tolist()
                record = StepRecord(c, i, j, ranking, None)
                for item in ranking:
                    if item == c:
                        record.rejected[item] = "consequent"
                        continue
                    if item in antecedent:
                        record.rejected[item] = "in antecedent"
                        continue
                    candidate = tuple(sorted(antecedent + [item]))
                    if similarity(found, candidate) > cfg.similarity_threshold:
                        record.rejected[item] = "similar"
                        continue
                    antecedent = list(candidate)
                    found.append(candidate)
                    rules.add(Rule(candidate, c))
                    record.chosen = item
                    break
                trace.steps.append(record)
                if record.chosen is None:
                    break
    return rules, trace


@dataclass
class PipelineResult:
    rules: RuleSet
    seconds: float
    epochs_run: int
    trace: MiningTrace


def full_pipeline(
    data: BinaryMatrix, train_cfg: TrainConfig, mine_cfg: ArmAeConfig
) -> PipelineResult:
    """Train, mine and score; ``seconds`` covers all three stages."""
    start = time.perf_counter()
    trained = train_until_plateau(data, train_cfg)
    mined, trace = mine(trained.model, data.n_items, mine_cfg)
    scored = score_rules(data, mined)
    seconds = time.perf_counter() - start
    return PipelineResult(scored, seconds, trained.epochs_run, trace)

"""NSGA-II over rules with up to two antecedent items and one consequent.

Both objectives (support, confidence) are maximised. An individual is three
genes: two optional antecedent slots (``EMPTY`` when unused) and the
consequent.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import BinaryMatrix
from .rules import Rule, RuleSet, ScoredRule, score_rule

EMPTY = -1
MAX_GENERATIONS = 500


@dataclass(frozen=True)
class Individual:
    slots: tuple[int, int]
    consequent: int
    support: float = 0.0
    confidence: float = 0.0

    @property
    def antecedent(self) -> tuple[int, ...]:
        return tuple(sorted(s for s in self.slots if s != EMPTY))

    @property
    def objectives(self) -> tuple[float, float]:
        return (self.support, self.confidence)

    @property
    def genes(self) -> tuple[int, int, int]:
        return (self.slots[0], self.slots[1], self.consequent)

    def rule(self) -> Rule:
        return Rule(self.antecedent, self.consequent)

    def is_valid(self) -> bool:
        filled = [s for s in self.slots if s != EMPTY]
        return (
            len(filled) >= 1
            and len(set(filled)) == len(filled)
            and self.consequent not in filled
        )


@dataclass
class NsgaConfig:
    population: int = 100
    crossover_rate: float = 0.9
    mutation_rate: float = 0.01
    archive_capacity: int = 300
    improvement_threshold: float = 0.01
    seed: int = 0
    max_generations: int = MAX_GENERATIONS

    def __post_init__(self):
        if not (0 <= self.crossover_rate <= 1 and 0 <= self.mutation_rate <= 1):
            raise ValueError("rates must lie in [0, 1]")
        if self.population < 4 or self.population % 2:
            raise ValueError("population must be even and at least 4")
        if self.archive_capacity < 1:
            raise ValueError("archive_capacity must be positive")


def _as_objectives(population) -> np.ndarray:
    objs = [p.objectives if isinstance(p, Individual) else p for p in population]
    return np.asarray(objs, dtype=np.float64).reshape(len(objs), -1)


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    return all(x >= y for x, y in zip(a, b)) and any(x > y for x, y in zip(a, b))


def fast_non_dominated_sort(population) -> list[list[int]]:
    """Split ``population`` (Individuals or objective tuples) into fronts of indices."""
    f = _as_objectives(population)
    n = len(f)
    if n == 0:
        return []
    ge = np.all(f[:, None, :] >= f[None, :, :], axis=2)
    gt = np.any(f[:, None, :] > f[None, :, :], axis=2)
    dom = ge & gt  # dom[i, j]: i dominates j
    remaining = dom.sum(axis=0)
    fronts = []
    current = np.flatnonzero(remaining == 0)
    while current.size:
        fronts.append(current.tolist())
        remaining = remaining - dom[current].sum(axis=0)
        remaining[current] = -1
        current = np.flatnonzero(remaining == 0)
    return fronts


def crowding_distance(front) -> np.ndarray:
    """Per-member crowding distance; extremes of each objective get infinity."""
    f = _as_objectives(front)
    n, m = f.shape
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for k in range(m):
        order = np.argsort(f[:, k], kind="stable")
        lo, hi = f[order[0], k], f[order[-1], k]
        dist[order[0]] = dist[order[-1]] = np.inf
        if hi == lo:
            continue
        gaps = (f[order[2:], k] - f[order[:-2], k]) / (hi - lo)
        dist[order[1:-1]] += gaps
    return dist


def rank_and_crowding(population) -> tuple[np.ndarray, np.ndarray]:
    n = len(population)
    rank = np.zeros(n, dtype=int)
    crowd = np.zeros(n)
    f = _as_objectives(population)
    for r, front in enumerate(fast_non_dominated_sort(f)):
        rank[front] = r
        crowd[front] = crowding_distance(f[front])
    return rank, crowd


def best_order(population) -> list[int]:
    """Indices sorted by front rank, then decreasing crowding; stable otherwise."""
    rank, crowd = rank_and_crowding(population)
    return sorted(range(len(population)), key=lambda i: (rank[i], -crowd[i]))


class Archive:
    """Best distinct rules seen so far, at most ``capacity`` of them."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.rules: list[ScoredRule] = []

    def update(self, population: Sequence[Individual]) -> None:
        merged = {r.rule: r for r in self.rules}
        for ind in population:
            rule = ind.rule()
            if rule not in merged:
                merged[rule] = ScoredRule(rule, ind.support, ind.confidence)
        pool = list(merged.values())
        keep = best_order([(r.support, r.confidence) for r in pool])[: self.capacity]
        self.rules = [pool[i] for i in keep]

    def averages(self) -> tuple[float, float]:
        if not self.rules:
            return 0.0, 0.0
        n = len(self.rules)
        return (
            sum(r.support for r in self.rules) / n,
            sum(r.confidence for r in self.rules) / n,
        )

    def to_ruleset(self) -> RuleSet:
        return RuleSet(self.rules)

    def __len__(self):
        return len(self.rules)


class _Evaluator:
    def __init__(self, data: BinaryMatrix):
        self.data = data
        self.cache: dict[Rule, tuple[float, float]] = {}

    def __call__(self, slots, consequent) -> Individual:
        ind = Individual(tuple(slots), consequent)
        rule = ind.rule()
        if rule not in self.cache:
            scored = score_rule(self.data, rule)
            self.cache[rule] = (scored.support, scored.confidence)
        s, c = self.cache[rule]
        return Individual(ind.slots, consequent, s, c)


def _pick_other(rng, n_items: int, exclude) -> int:
    choices = [i for i in range(n_items) if i not in exclude]
    return int(choices[rng.integers(len(choices))])


def repair(genes: list[int], n_items: int, rng: np.random.Generator) -> list[int]:
    """Resample offending genes until the rule shape is valid."""
    s0, s1, c = genes
    if s0 != EMPTY and s0 == c:
        s0 = _pick_other(rng, n_items, {c, s1})
    if s1 != EMPTY and (s1 == c or s1 == s0):
        s1 = _pick_other(rng, n_items, {c, s0})
    if s0 == EMPTY and s1 == EMPTY:
        s0 = _pick_other(rng, n_items, {c})
    return [s0, s1, c]


def random_individual_genes(n_items: int, rng: np.random.Generator) -> list[int]:
    size = int(rng.integers(1, 3))
    picked = rng.choice(n_items, size=size + 1, replace=False).tolist()
    slots = picked[:size] + [EMPTY] * (2 - size)
    return slots + [picked[-1]]


def crossover(p1, p2, rng: np.random.Generator):
    """One-point crossover over the three genes."""
    cut = int(rng.integers(1, 3))
    return p1[:cut] + p2[cut:], p2[:cut] + p1[cut:]


def mutate(genes: list[int], n_items: int, rate: float, rng: np.random.Generator) -> list[int]:
    out = list(genes)
    for k in range(3):
        if rng.random() < rate:
            if k < 2:
                # antecedent slots may also become empty
                out[k] = int(rng.integers(-1, n_items))
            else:
                out[k] = int(rng.integers(n_items))
    return out


def _tournament(rng, rank, crowd) -> int:
    i, j = rng.integers(len(rank), size=2)
    if rank[i] != rank[j]:
        return int(i if rank[i] < rank[j] else j)
    if crowd[i] != crowd[j]:
        return int(i if crowd[i] > crowd[j] else j)
    return int(min(i, j))


@dataclass
class EvolveResult:
    archive: Archive
    generations_run: int
    log: list[tuple[int, float, float]] = field(default_factory=list)


def evolve(data: BinaryMatrix, cfg: NsgaConfig) -> EvolveResult:
    """Run NSGA-II until the archive averages stop improving.

    Generation 0 (the random initial population) seeds the archive. After
    each later generation the run stops if neither the average support nor
    the average confidence of the archive rose by at least
    ``cfg.improvement_threshold``.
    """
    if data.n_items < 2:
        raise ValueError("need at least 2 items")
    rng = np.random.default_rng(cfg.seed)
    n_items = data.n_items
    evaluate = _Evaluator(data)

    population = [
        evaluate(g[:2], g[2])
        for g in (random_individual_genes(n_items, rng) for _ in range(cfg.population))
    ]
    archive = Archive(cfg.archive_capacity)
    archive.update(population)
    log = [(0, *archive.averages())]

    generation = 0
    while generation < cfg.max_generations:
        generation += 1
        rank, crowd = rank_and_crowding(population)
        offspring: list[Individual] = []
        while len(offspring) < cfg.population:
            p1 = list(population[_tournament(rng, rank, crowd)].genes)
            p2 = list(population[_tournament(rng, rank, crowd)].genes)
            if rng.random() < cfg.crossover_rate:
                p1, p2 = crossover(p1, p2, rng)
            for child in (p1, p2):
                child = repair(mutate(child, n_items, cfg.mutation_rate, rng), n_items, rng)
                offspring.append(evaluate(child[:2], child[2]))

        combined = population + offspring
        population = [combined[i] for i in best_order(combined)[: cfg.population]]

        prev_support, prev_conf = archive.averages()
        archive.update(population)
        support, conf = archive.averages()
        log.append((generation, support, conf))
        if (support - prev_support < cfg.improvement_threshold
                and conf - prev_conf < cfg.improvement_threshold):
            break
    return EvolveResult(archive, generation, log)


def write_log(log, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["generation", "avg_support", "avg_confidence"])
        writer.writerows(log)

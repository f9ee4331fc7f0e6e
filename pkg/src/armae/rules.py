"""Rule model, support/confidence scoring and rule-set metrics."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator, NamedTuple, Sequence

from .dataset import BinaryMatrix

Itemset = tuple[int, ...]

BRUTE_FORCE_MAX_ITEMS = 20


def make_itemset(items: Iterable[int]) -> Itemset:
    return tuple(sorted(set(int(i) for i in items)))


@dataclass(frozen=True, order=True)
class Rule:
    """``antecedent => consequent`` with a single-item consequent."""

    antecedent: Itemset
    consequent: int

    def __post_init__(self):
        antecedent = make_itemset(self.antecedent)
        if not antecedent:
            raise ValueError("antecedent must not be empty")
        if self.consequent in antecedent:
            raise ValueError("consequent must not appear in the antecedent")
        object.__setattr__(self, "antecedent", antecedent)
        object.__setattr__(self, "consequent", int(self.consequent))

    @property
    def items(self) -> Itemset:
        return make_itemset(self.antecedent + (self.consequent,))


@dataclass(frozen=True)
class ScoredRule:
    rule: Rule
    support: float
    confidence: float

    @property
    def antecedent(self) -> Itemset:
        return self.rule.antecedent

    @property
    def consequent(self) -> int:
        return self.rule.consequent


class RuleSet:
    """Insertion-ordered, duplicate-free collection of rules.

    Entries are ScoredRule instances; unscored rules carry NaN scores until
    they are passed through :func:`score_rules`.
    """

    def __init__(self, rules: Iterable[ScoredRule | Rule] = ()):
        self._rules: dict[Rule, ScoredRule] = {}
        for r in rules:
            self.add(r)

    def add(self, entry: ScoredRule | Rule) -> bool:
        """Insert ``entry``; return False if the rule was already present."""
        if isinstance(entry, Rule):
            entry = ScoredRule(entry, float("nan"), float("nan"))
        if entry.rule in self._rules:
            return False
        self._rules[entry.rule] = entry
        return True

    def __len__(self):
        return len(self._rules)

    def __iter__(self) -> Iterator[ScoredRule]:
        return iter(self._rules.values())

    def __contains__(self, rule: Rule):
        return rule in self._rules

    def __getitem__(self, rule: Rule) -> ScoredRule:
        return self._rules[rule]

    def __repr__(self):
        return f"RuleSet({len(self)} rules)"

    def rules(self) -> list[Rule]:
        return list(self._rules)

    def keys(self) -> set[Rule]:
        return set(self._rules)


def _check_ids(data: BinaryMatrix, items: Iterable[int]) -> None:
    for i in items:
        if not 0 <= i < data.n_items:
            raise IndexError(f"item id {i} out of range for {data.n_items} items")


def itemset_count(data: BinaryMatrix, itemset: Iterable[int]) -> int:
    """Number of rows that contain every item of ``itemset``."""
    items = list(itemset)
    _check_ids(data, items)
    bits = data.all_rows_bits
    cols = data.column_bits
    for i in items:
        bits &= cols[i]
    return bits.bit_count()


def itemset_support(data: BinaryMatrix, itemset: Iterable[int]) -> float:
    return itemset_count(data, itemset) / data.n_rows


def confidence_from_counts(union_count: int, antecedent_count: int) -> float:
    # zero-support antecedents get confidence 0 rather than NaN
    if antecedent_count == 0:
        return 0.0
    return union_count / antecedent_count


def score_rule(data: BinaryMatrix, rule: Rule) -> ScoredRule:
    ante = itemset_count(data, rule.antecedent)
    union = itemset_count(data, rule.antecedent + (rule.consequent,))
    return ScoredRule(rule, union / data.n_rows, confidence_from_counts(union, ante))


def score_rules(data: BinaryMatrix, rules: Iterable[ScoredRule | Rule]) -> RuleSet:
    out = RuleSet()
    for r in rules:
        out.add(score_rule(data, r.rule if isinstance(r, ScoredRule) else r))
    return out


def coverage(candidate: RuleSet | Iterable, reference: RuleSet | Iterable) -> float:
    """Fraction of ``reference`` rules present in ``candidate``; scores are ignored."""
    ref = _rule_keys(reference)
    if not ref:
        return 0.0
    return len(ref & _rule_keys(candidate)) / len(ref)


def _rule_keys(rs) -> set[Rule]:
    if isinstance(rs, RuleSet):
        return rs.keys()
    return {r.rule if isinstance(r, ScoredRule) else r for r in rs}


class Summary(NamedTuple):
    avg_support: float
    avg_confidence: float
    count: int
    fraction_support_positive: float


def summarize(rs: Iterable[ScoredRule]) -> Summary:
    rules = list(rs)
    if not rules:
        return Summary(0.0, 0.0, 0, 0.0)
    n = len(rules)
    return Summary(
        sum(r.support for r in rules) / n,
        sum(r.confidence for r in rules) / n,
        n,
        sum(1 for r in rules if r.support > 0) / n,
    )


def brute_force_mine(
    data: BinaryMatrix,
    min_support: float,
    min_confidence: float,
    max_antecedent: int,
) -> RuleSet:
    """Enumerate every rule with 1..max_antecedent antecedent items.

    Meant as a reference for small tables only.
    """
    if data.n_items > BRUTE_FORCE_MAX_ITEMS:
        raise ValueError(
            f"brute force limited to {BRUTE_FORCE_MAX_ITEMS} items, got {data.n_items}"
        )
    out = RuleSet()
    items = range(data.n_items)
    for size in range(1, max_antecedent + 1):
        for antecedent in combinations(items, size):
            ante_count = itemset_count(data, antecedent)
            if ante_count == 0:
                continue
            for c in items:
                if c in antecedent:
                    continue
                union = itemset_count(data, antecedent + (c,))
                support = union / data.n_rows
                conf = confidence_from_counts(union, ante_count)
                if support >= min_support and conf >= min_confidence:
                    out.add(ScoredRule(Rule(antecedent, c), support, conf))
    return out


# -- serialization -------------------------------------------------------

CSV_FIELDS = ("antecedent", "consequent", "support", "confidence")


def _score_or_none(x: float):
    return None if math.isnan(x) else x


def _record(r: ScoredRule, names: Sequence[str]) -> dict:
    return {
        "antecedent": [names[i] for i in r.antecedent],
        "consequent": names[r.consequent],
        "support": _score_or_none(r.support),
        "confidence": _score_or_none(r.confidence),
    }


def dumps_jsonl(rs: Iterable[ScoredRule], names: Sequence[str]) -> str:
    return "".join(json.dumps(_record(r, names)) + "\n" for r in rs)


def dumps_csv(rs: Iterable[ScoredRule], names: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for r in rs:
        rec = _record(r, names)
        # antecedent items joined by "|" inside a single field
        writer.writerow(["|".join(rec["antecedent"]), rec["consequent"],
                         "" if rec["support"] is None else repr(r.support),
                         "" if rec["confidence"] is None else repr(r.confidence)])
    return buf.getvalue()


def write_rules(rs: Iterable[ScoredRule], names: Sequence[str], path) -> None:
    text = dumps_csv(rs, names) if str(path).endswith(".csv") else dumps_jsonl(rs, names)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _parse_score(value) -> float:
    return float("nan") if value is None or value == "" else float(value)


def loads_jsonl(text: str, names: Sequence[str]) -> RuleSet:
    index = {n: i for i, n in enumerate(names)}
    out = RuleSet()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        rec = json.loads(line)
        try:
            rule = Rule(tuple(index[n] for n in rec["antecedent"]), index[rec["consequent"]])
        except KeyError as exc:
            raise ValueError(f"line {lineno}: unknown item {exc.args[0]!r}") from None
        out.add(ScoredRule(rule, _parse_score(rec.get("support")),
                           _parse_score(rec.get("confidence"))))
    return out


def loads_csv(text: str, names: Sequence[str]) -> RuleSet:
    index = {n: i for i, n in enumerate(names)}
    out = RuleSet()
    for rec in csv.DictReader(io.StringIO(text)):
        try:
            ante = tuple(index[n] for n in rec["antecedent"].split("|"))
            rule = Rule(ante, index[rec["consequent"]])
        except KeyError as exc:
            raise ValueError(f"unknown item {exc.args[0]!r}") from None
        out.add(ScoredRule(rule, _parse_score(rec.get("support")),
                           _parse_score(rec.get("confidence"))))
    return out


def read_rules(path, names: Sequence[str]) -> RuleSet:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return loads_csv(text, names) if str(path).endswith(".csv") else loads_jsonl(text, names)

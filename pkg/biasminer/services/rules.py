"""
Association Rules
Rule generation, causal post-filter, ranked queries and the rule dump
"""

from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union
import json
import logging

from biasminer.core.config import settings
from biasminer.core.exceptions import (
    IncompleteLattice,
    MalformedRules,
    OracleTooLarge,
    StorageError,
    UnknownItem,
)
from biasminer.models.items import Item, Modality, parse_item, render_item
from biasminer.models.mining import AssociationRule, Itemset, RuleConfig
from biasminer.models.records import TokenizerConfig
from biasminer.services.miner import BitmapIndex, supports_by_items
from biasminer.services.vocab_db import TransactionDB, Vocabulary, tokenize_question
from biasminer.utils.helpers import dict_to_json

logger = logging.getLogger(__name__)

RULES_FORMAT_VERSION = 1


@dataclass(frozen=True)
class RuleSet:
    """Rules in canonical order plus how they were produced"""
    rules: Tuple[AssociationRule, ...] = ()
    provenance: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        keys = [rule.key for rule in self.rules]
        if len(keys) != len(set(keys)):
            raise ValueError("RuleSet contains duplicate (antecedent, consequent) pairs")

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)


def _canonical(rules: Iterable[AssociationRule]) -> Tuple[AssociationRule, ...]:
    return tuple(sorted(rules, key=lambda rule: (rule.antecedent, rule.consequent)))


def _provenance(config: RuleConfig, transaction_count: int, fingerprint: Optional[str], source: str) -> Dict[str, Any]:
    return {
        "format_version": RULES_FORMAT_VERSION,
        "source": source,
        "min_support": config.min_support.resolve(transaction_count) if transaction_count else None,
        "min_support_spec": config.min_support.describe(),
        "min_confidence": config.min_confidence,
        "max_consequent_size": config.max_consequent_size,
        "transactions": transaction_count,
        "db_fingerprint": fingerprint,
        "causal_filter": False,
    }


# ============================================
# GENERATION
# ============================================

def generate_rules(
    frequent: Sequence[Itemset],
    index: BitmapIndex,
    config: Optional[RuleConfig] = None,
    fingerprint: Optional[str] = None,
) -> RuleSet:
    """
    Form every rule F\\C -> C from the frequent itemsets

    A rule is kept when support(F) >= s and support(F)/support(F\\C) >= c,
    both inclusive and compared on exact counts.

    Args:
        frequent: Complete frequent itemsets with supports
        index: Bitmap index the itemsets were mined from
        config: Rule thresholds
        fingerprint: Database fingerprint recorded in provenance

    Returns:
        RuleSet in canonical order
    """
    config = config or RuleConfig()
    if index.transaction_count == 0:
        return RuleSet((), _provenance(config, 0, fingerprint, "apriori"))

    minimum = config.min_support.resolve(index.transaction_count)
    threshold = config.confidence_fraction
    supports = supports_by_items(frequent)

    rules = []
    for itemset in frequent:
        if itemset.size < 2 or itemset.support < minimum:
            continue
        items = itemset.items
        for size in range(1, min(config.max_consequent_size, itemset.size - 1) + 1):
            for consequent in combinations(items, size):
                antecedent = tuple(i for i in items if i not in consequent)
                antecedent_support = supports.get(antecedent)
                if antecedent_support is None:
                    raise IncompleteLattice(f"Support of {antecedent} missing for itemset {items}")
                # exact: support / antecedent_support >= num / den
                if itemset.support * threshold.denominator >= threshold.numerator * antecedent_support:
                    rules.append(AssociationRule(antecedent, consequent, itemset.support, antecedent_support))

    rule_set = RuleSet(_canonical(rules), _provenance(config, index.transaction_count, fingerprint, "apriori"))
    logger.info(f"📐 Generated {len(rule_set)} rules (s={minimum}, c={config.min_confidence})")
    return rule_set


def brute_force_rules(
    db: TransactionDB,
    config: Optional[RuleConfig] = None,
    max_items: Optional[int] = None,
) -> RuleSet:
    """
    Enumerate disjoint (A, C) pairs over occurring items, counting directly

    Verification oracle with the same contract as generate_rules after mine_frequent.
    """
    config = config or RuleConfig()
    cap = max_items if max_items is not None else settings.ORACLE_MAX_ITEMS
    universe = db.occurring_items()
    if len(universe) > cap:
        raise OracleTooLarge(f"{len(universe)} distinct items exceed the oracle cap of {cap}")
    if not db.transactions:
        return RuleSet((), _provenance(config, 0, None, "brute_force"))

    transactions = db.item_sets()
    minimum = config.min_support.resolve(len(transactions))
    threshold = config.confidence_fraction

    counted: Dict[frozenset, int] = {}

    def count(items: Iterable[int]) -> int:
        needed = frozenset(items)
        if needed not in counted:
            counted[needed] = sum(1 for t in transactions if needed <= t)
        return counted[needed]

    rules = []
    for consequent_size in range(1, min(config.max_consequent_size, len(universe) - 1) + 1):
        for consequent in combinations(universe, consequent_size):
            rest = [i for i in universe if i not in consequent]
            for antecedent_size in range(1, len(rest) + 1):
                for antecedent in combinations(rest, antecedent_size):
                    joint = count(antecedent + consequent)
                    if joint < minimum:
                        continue
                    antecedent_support = count(antecedent)
                    if joint * threshold.denominator >= threshold.numerator * antecedent_support:
                        rules.append(AssociationRule(antecedent, consequent, joint, antecedent_support))

    return RuleSet(_canonical(rules), _provenance(config, len(transactions), None, "brute_force"))


# ============================================
# CAUSAL FILTER & QUERIES
# ============================================

def is_causal(rule: AssociationRule, vocab: Vocabulary) -> bool:
    """Question/visual words -> answer words only"""
    return (
        all(vocab.modality_of(i) is Modality.ANSWER_WORD for i in rule.consequent)
        and all(vocab.modality_of(i) is not Modality.ANSWER_WORD for i in rule.antecedent)
    )


def causal_filter(rules: RuleSet, vocab: Vocabulary) -> RuleSet:
    """Keep rules of the form Image/Question -> Answer, preserving order"""
    kept = tuple(rule for rule in rules.rules if is_causal(rule, vocab))
    provenance = dict(rules.provenance)
    provenance["causal_filter"] = True
    logger.info(f"🧹 Causal filter kept {len(kept)} of {len(rules)} rules")
    return RuleSet(kept, provenance)


def _rank_key(rule: AssociationRule):
    return (-rule.confidence_exact, -rule.support, rule.antecedent, rule.consequent)


def rank_rules(rules: Iterable[AssociationRule]) -> List[AssociationRule]:
    """Confidence desc, support desc, then canonical antecedent order"""
    return sorted(rules, key=_rank_key)


def query_rules(
    rules: RuleSet,
    vocab: Vocabulary,
    terms: Union[str, Sequence[str]],
    tokenizer: Optional[TokenizerConfig] = None,
) -> List[AssociationRule]:
    """
    Rules whose antecedent contains every query term as a question word

    Args:
        rules: Rule set to search
        vocab: Vocabulary the rules refer to
        terms: Query text or pre-split tokens (tokenized like questions)
        tokenizer: Tokenizer settings

    Returns:
        Ranked matching rules; unknown terms give an empty list
    """
    text = terms if isinstance(terms, str) else " ".join(terms)
    tokens = tokenize_question(text, tokenizer)

    wanted = set()
    for token in tokens:
        item_id = vocab.get_id(Item.question(token))
        if item_id is None:
            return []
        wanted.add(item_id)

    matches = [rule for rule in rules.rules if wanted.issubset(rule.antecedent)]
    return rank_rules(matches)


def consequent_diversity(
    rules: RuleSet,
    vocab: Vocabulary,
    terms: Union[str, Sequence[str]],
) -> Dict[str, int]:
    """
    Distinct consequents (with rule counts) among rules matching a query

    Comparing two queries, e.g. "what is he doing" vs "what is she doing",
    shows whether one group gets a narrower set of answers.
    """
    diversity: Dict[str, int] = {}
    for rule in query_rules(rules, vocab, terms):
        label = " ".join(render_item(vocab.from_id(i)) for i in rule.consequent)
        diversity[label] = diversity.get(label, 0) + 1
    return dict(sorted(diversity.items(), key=lambda kv: (-kv[1], kv[0])))


def split_by_visual(rules: RuleSet, vocab: Vocabulary) -> Tuple[List[AssociationRule], List[AssociationRule]]:
    """(rules with a visual antecedent, rules without one)"""
    with_visual, without_visual = [], []
    for rule in rules.rules:
        if any(vocab.modality_of(i) is Modality.VISUAL_WORD for i in rule.antecedent):
            with_visual.append(rule)
        else:
            without_visual.append(rule)
    return with_visual, without_visual


# Query groups shaped after the usual VQA question types
QUESTION_TYPE_GROUPS: Dict[str, str] = {
    "what sport": "what sport",
    "how many": "how many",
    "why": "why",
    "what brand": "what brand",
    "where": "where",
    "what is he doing": "what he doing",
    "what is she doing": "what she doing",
    "what time": "what time",
    "what color": "what color",
}


def question_type_groups(rules: RuleSet, vocab: Vocabulary) -> Dict[str, List[AssociationRule]]:
    """Ranked rules per question type; types with no rules are omitted"""
    groups = {}
    for name, terms in QUESTION_TYPE_GROUPS.items():
        matches = query_rules(rules, vocab, terms)
        if matches:
            groups[name] = matches
    return groups


# ============================================
# STRUCTURED DUMP
# ============================================

def rule_to_record(rule: AssociationRule, vocab: Vocabulary) -> Dict[str, Any]:
    return {
        "antecedent": [render_item(vocab.from_id(i)) for i in rule.antecedent],
        "consequent": [render_item(vocab.from_id(i)) for i in rule.consequent],
        "support": rule.support,
        "confidence_num": rule.support,
        "confidence_den": rule.antecedent_support,
        "confidence": rule.confidence,
    }


def rule_from_record(record: Mapping[str, Any], vocab: Vocabulary) -> AssociationRule:
    try:
        antecedent = tuple(sorted(vocab.to_id(parse_item(token)) for token in record["antecedent"]))
        consequent = tuple(sorted(vocab.to_id(parse_item(token)) for token in record["consequent"]))
        support = int(record["confidence_num"])
        denominator = int(record["confidence_den"])
        if int(record["support"]) != support:
            raise MalformedRules("support and confidence_num disagree")
        return AssociationRule(antecedent, consequent, support, denominator)
    except UnknownItem as e:
        raise MalformedRules(f"Rule refers to an item outside the vocabulary: {e.message}")
    except (KeyError, TypeError, ValueError) as e:
        raise MalformedRules(f"Malformed rule record: {e}")


def dump_rules(rules: RuleSet, vocab: Vocabulary) -> str:
    """
    JSON lines: a provenance header, then one rule per line

    The output is lossless and byte-stable for a given RuleSet.
    """
    lines = [dict_to_json({"provenance": dict(rules.provenance)})]
    lines.extend(dict_to_json(rule_to_record(rule, vocab)) for rule in rules.rules)
    return "".join(line + "\n" for line in lines)


def parse_rules(text: str, vocab: Vocabulary) -> RuleSet:
    """Inverse of dump_rules"""
    lines = [line for line in text.split("\n") if line.strip()]
    if not lines:
        raise MalformedRules("Rule dump is empty (missing provenance header)")
    try:
        header = json.loads(lines[0])
        provenance = header["provenance"]
        rules = [rule_from_record(json.loads(line), vocab) for line in lines[1:]]
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise MalformedRules(f"Malformed rule dump: {e}")
    try:
        return RuleSet(tuple(rules), provenance)
    except ValueError as e:
        raise MalformedRules(str(e))


def save_rules(rules: RuleSet, vocab: Vocabulary, path: Union[str, Path]):
    try:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(dump_rules(rules, vocab), encoding="utf-8")
    except OSError as e:
        raise StorageError(f"Cannot write rules {path}: {e}")
    logger.info(f"💾 Saved {len(rules)} rules -> {path}")


def load_rules(path: Union[str, Path], vocab: Vocabulary) -> RuleSet:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise StorageError(f"Cannot read rules {path}: {e}")
    except UnicodeDecodeError as e:
        raise MalformedRules(f"Rules file {path} is not UTF-8: {e}")
    return parse_rules(text, vocab)

"""
Rule Reports
Ranked text tables and the lossless dump
"""

from typing import Iterable, List, Optional
import logging

from biasminer.core.exceptions import InvalidFormat
from biasminer.models.items import Modality
from biasminer.models.mining import AssociationRule
from biasminer.services.rules import RuleSet, dump_rules, question_type_groups, rank_rules
from biasminer.services.vocab_db import Vocabulary

logger = logging.getLogger(__name__)

REPORT_FORMATS = ("table", "structured")
TABLE_HEADER = "antecedent | visual word | consequent | support | confidence"


def format_row(rule: AssociationRule, vocab: Vocabulary) -> str:
    """
    One table row

    Example:
        "what sport playing | v:12 | tennis* | 40 | 0.62"
    """
    words: List[str] = []
    visual: List[str] = []
    for item_id in rule.antecedent:
        item = vocab.from_id(item_id)
        (visual if item.modality is Modality.VISUAL_WORD else words).append(item.render())
    consequent = " ".join(vocab.from_id(i).render() for i in rule.consequent)
    return f"{' '.join(words)} | {' '.join(visual)} | {consequent} | {rule.support} | {rule.confidence:.2f}"


def format_table(rules: Iterable[AssociationRule], vocab: Vocabulary) -> str:
    lines = [TABLE_HEADER]
    lines.extend(format_row(rule, vocab) for rule in rules)
    return "\n".join(lines) + "\n"


def emit_report(
    rules: RuleSet,
    vocab: Vocabulary,
    format: str = "table",
    by_type: bool = False,
    limit: Optional[int] = None,
) -> str:
    """
    Render a rule set

    Args:
        rules: Rules to render (table rows are ranked by confidence)
        vocab: Vocabulary the rules refer to
        format: "table" (human readable) or "structured" (lossless JSON lines)
        by_type: Table only: one ranked section per question type
        limit: Table only: maximum rows per table

    Returns:
        Report text
    """
    if format not in REPORT_FORMATS:
        raise InvalidFormat(f"Unknown report format {format!r}, expected one of {', '.join(REPORT_FORMATS)}")

    if format == "structured":
        return dump_rules(rules, vocab)

    if not by_type:
        return format_table(rank_rules(rules.rules)[:limit], vocab)

    sections = []
    for name, matches in question_type_groups(rules, vocab).items():
        sections.append(f"## {name} ({len(matches)} rules)\n{format_table(matches[:limit], vocab)}")
    return "\n".join(sections) if sections else format_table([], vocab)


def format_diversity(label: str, diversity: dict) -> str:
    """Two-column listing of consequents and how many rules lead to them"""
    lines = [f"## {label}: {len(diversity)} distinct answers", "consequent | rules"]
    lines.extend(f"{consequent} | {count}" for consequent, count in diversity.items())
    return "\n".join(lines) + "\n"

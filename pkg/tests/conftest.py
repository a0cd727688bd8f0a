"""
Shared fixtures: tiny hand-made databases, random database factories and a small synth spec
"""

from typing import Iterable, List, Sequence

import numpy as np
import pytest

from biasminer.models.items import Transaction, parse_item
from biasminer.models.synth import PlantedBias, SynthSpec
from biasminer.services.vocab_db import TransactionDB


def make_db(rows: Iterable[Sequence[str]]) -> TransactionDB:
    """
    Database from rendered tokens: "green*" is an answer, "v:3" a visual word,
    anything else a question word. Ids follow first appearance.
    """
    db = TransactionDB()
    for index, tokens in enumerate(rows):
        ids = set()
        for token in tokens:
            item = parse_item(token)
            ids.add(db.vocabulary.intern(item.token, item.modality))
        db.add(Transaction(items=tuple(sorted(ids)), source_id=f"t{index + 1}"))
    return db


def random_db(rng: np.random.Generator, max_transactions: int = 25, max_items: int = 12) -> TransactionDB:
    """Random database with mixed modalities, at most max_items distinct items"""
    n_items = int(rng.integers(1, max_items + 1))
    n_transactions = int(rng.integers(0, max_transactions + 1))
    kinds = ("q{}", "v:{}", "a{}*")
    universe = [kinds[int(rng.integers(0, 3))].format(i) for i in range(n_items)]

    rows: List[List[str]] = []
    for _ in range(n_transactions):
        size = int(rng.integers(1, n_items + 1))
        picked = rng.choice(n_items, size=size, replace=False)
        rows.append([universe[i] for i in sorted(picked)])
    return make_db(rows)


@pytest.fixture
def five_db() -> TransactionDB:
    """T1={a,b,c}, T2={a,b}, T3={a,c}, T4={b,c}, T5={a,b,c}"""
    return make_db([["a", "b", "c"], ["a", "b"], ["a", "c"], ["b", "c"], ["a", "b", "c"]])


@pytest.fixture
def ids(five_db):
    """Token -> id lookup for five_db"""
    return {item.token: item_id for item_id, item in enumerate(five_db.vocabulary.items())}


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def small_spec() -> SynthSpec:
    return SynthSpec(
        biases=[
            PlantedBias(question_template=["what", "color", "is", "the", "grass"], visual_word=0,
                        answer="green", fire_rate=1.0, weight=1.0),
            PlantedBias(question_template=["what", "sport", "is", "he", "playing"], visual_word=1,
                        answer="tennis", fire_rate=0.8, weight=1.0),
        ],
        noise_vocab=["dog", "cat", "table", "window", "car", "street", "bus", "sky"],
        noise_answers=["yes", "no", "2"],
        record_count=400,
        seed=11,
        noise_weight=1.0,
    )

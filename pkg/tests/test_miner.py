"""
Tests for the bitmap index, support counting and levelwise mining
"""

from itertools import combinations
import time

import numpy as np
import pytest

from biasminer.core.exceptions import InvalidThreshold, OracleTooLarge, UnknownItem
from biasminer.models.items import Modality, Transaction
from biasminer.models.mining import Itemset, SupportThreshold
from biasminer.services.miner import (
    brute_force_frequent,
    build_bitmap_index,
    format_itemsets,
    mine_frequent,
    support,
    write_itemsets,
)
from biasminer.services.vocab_db import TransactionDB
from tests.conftest import make_db, random_db


def _as_dict(itemsets):
    return {itemset.items: itemset.support for itemset in itemsets}


# ============================================
# THRESHOLDS
# ============================================

@pytest.mark.parametrize("text, transactions, expected", [
    ("30", 1000, 30),
    ("2.5%", 1000, 25),
    ("0.05", 1000, 50),
    ("0.1", 15, 2),
    ("1", 0, 1),
])
def test_support_threshold_parse_and_resolve(text, transactions, expected):
    assert SupportThreshold.parse(text).resolve(transactions) == expected


@pytest.mark.parametrize("text", ["0", "-3", "abc", "150%", "0%"])
def test_invalid_support_thresholds(text):
    with pytest.raises(InvalidThreshold):
        SupportThreshold.parse(text)


def test_relative_threshold_resolving_to_zero():
    with pytest.raises(InvalidThreshold):
        SupportThreshold.relative(0.1).resolve(0)


# ============================================
# BITMAP INDEX
# ============================================

def test_single_transaction_bitvectors():
    db = make_db([["a", "b"]])
    index = build_bitmap_index(db)
    assert index.bits(0) == [1]
    assert index.bits(1) == [1]


def test_absent_item_has_zero_bitmap():
    db = make_db([["a"], ["a"]])
    db.vocabulary.intern("ghost", Modality.QUESTION_WORD)
    index = build_bitmap_index(db)
    assert index.bits(1) == [0, 0]
    assert index.item_support(1) == 0


def test_popcounts_match_membership(rng):
    db = random_db(rng, max_transactions=50)
    while len(db) < 50:
        db.add(Transaction(items=(0,), source_id="pad"))
    index = build_bitmap_index(db)
    for item_id in range(len(db.vocabulary)):
        assert index.item_support(item_id) == sum(1 for t in db.transactions if item_id in t)


def test_unknown_item_in_index(five_db):
    with pytest.raises(UnknownItem):
        build_bitmap_index(five_db).bitmap(99)


def test_support_examples(five_db, ids):
    index = build_bitmap_index(five_db)
    assert support(index, [ids["a"], ids["b"]]) == 3
    assert support(index, [ids["a"], ids["b"], ids["c"]]) == 2
    assert support(index, []) == 5


def test_incidence_matches_bitmaps(five_db):
    index = build_bitmap_index(five_db)
    dense = index.incidence().toarray()
    for item_id in range(index.item_count):
        assert dense[:, item_id].tolist() == index.bits(item_id)


# ============================================
# MINING
# ============================================

def test_five_db_at_three(five_db, ids):
    mined = _as_dict(mine_frequent(build_bitmap_index(five_db), SupportThreshold.absolute(3)))
    a, b, c = ids["a"], ids["b"], ids["c"]
    assert mined == {(a,): 4, (b,): 4, (c,): 4, (a, b): 3, (a, c): 3, (b, c): 3}


def test_threshold_above_transaction_count(five_db):
    assert mine_frequent(build_bitmap_index(five_db), SupportThreshold.absolute(6)) == []


def test_single_transaction_pair():
    mined = _as_dict(mine_frequent(build_bitmap_index(make_db([["a", "b"]])), SupportThreshold.absolute(1)))
    assert mined == {(0,): 1, (1,): 1, (0, 1): 1}


def test_output_order(five_db):
    mined = mine_frequent(build_bitmap_index(five_db), SupportThreshold.absolute(1))
    assert [m.items for m in mined] == sorted((m.items for m in mined), key=lambda items: (len(items), items))


def test_max_size(five_db):
    mined = mine_frequent(build_bitmap_index(five_db), SupportThreshold.absolute(1), max_size=2)
    assert max(m.size for m in mined) == 2


@pytest.mark.parametrize("s", [1, 2, 3, 4, 5])
def test_oracle_on_five_db(five_db, s):
    threshold = SupportThreshold.absolute(s)
    assert mine_frequent(build_bitmap_index(five_db), threshold) == brute_force_frequent(five_db, threshold)


def test_oracle_edge_cases():
    assert brute_force_frequent(TransactionDB(), SupportThreshold.absolute(1)) == []
    assert brute_force_frequent(make_db([["a"]]), SupportThreshold.absolute(1)) == [Itemset((0,), 1)]
    assert mine_frequent(build_bitmap_index(TransactionDB()), SupportThreshold.absolute(1)) == []


def test_oracle_refuses_large_universe():
    db = make_db([[f"w{i}" for i in range(25)]])
    with pytest.raises(OracleTooLarge):
        brute_force_frequent(db, SupportThreshold.absolute(1))


def test_matches_oracle_on_random_databases(rng):
    for _ in range(120):
        db = random_db(rng)
        count = max(len(db), 1)
        if rng.random() < 0.5:
            threshold = SupportThreshold.absolute(int(rng.integers(1, count + 2)))
        else:
            threshold = SupportThreshold.relative(float(rng.choice([0.05, 0.1, 0.2, 0.35, 0.5])))
        if len(db) == 0:
            continue
        mined = mine_frequent(build_bitmap_index(db), threshold)
        assert mined == brute_force_frequent(db, threshold)


def test_downward_closure(rng):
    violations = 0
    for _ in range(100):
        db = random_db(rng)
        if not len(db):
            continue
        mined = _as_dict(mine_frequent(build_bitmap_index(db), SupportThreshold.absolute(int(rng.integers(1, 4)))))
        for items, count in mined.items():
            for size in range(1, len(items)):
                for subset in combinations(items, size):
                    if subset not in mined or mined[subset] < count:
                        violations += 1
    assert violations == 0


def test_parallel_counting_matches_serial(rng):
    rows = [[f"w{j}" for j in sorted(rng.choice(40, size=12, replace=False))] for _ in range(300)]
    index = build_bitmap_index(make_db(rows))
    threshold = SupportThreshold.absolute(12)
    assert mine_frequent(index, threshold, workers=2) == mine_frequent(index, threshold, workers=1)


def test_itemset_dump(tmp_path, five_db):
    mined = mine_frequent(build_bitmap_index(five_db), SupportThreshold.absolute(3))
    text = format_itemsets(mined, five_db.vocabulary)
    assert text.splitlines()[0] == "4\ta"
    assert "3\ta b" in text.splitlines()
    path = tmp_path / "itemsets.tsv"
    write_itemsets(path, mined, five_db.vocabulary)
    assert path.read_text(encoding="utf-8") == text


@pytest.mark.slow
def test_throughput_200k_transactions():
    rng = np.random.default_rng(7)
    n_transactions, n_items = 200_000, 5000
    patterns = rng.integers(0, n_items, size=(200, 4))

    db = TransactionDB()
    for i in range(n_items):
        db.vocabulary.intern(f"w{i}", Modality.QUESTION_WORD)
    for t in range(n_transactions):
        items = rng.integers(0, n_items, size=6)
        if rng.random() < 0.2:
            # recurring 4-item patterns give frequent itemsets beyond level 2
            items = np.concatenate([items, patterns[rng.integers(0, len(patterns))]])
        db.add(Transaction(items=tuple(int(i) for i in np.unique(items)), source_id=f"t{t}"))

    start = time.perf_counter()
    mined = mine_frequent(build_bitmap_index(db), SupportThreshold.absolute(50))
    elapsed = time.perf_counter() - start
    assert max(itemset.size for itemset in mined) >= 3
    assert elapsed < 120

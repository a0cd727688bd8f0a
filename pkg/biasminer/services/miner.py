"""
Frequent Itemset Miner
Levelwise (Apriori) mining over a vertical bitmap index
"""

from concurrent.futures import ProcessPoolExecutor
from itertools import combinations
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union
import logging

import numpy as np
from scipy import sparse

from biasminer.core.config import settings
from biasminer.core.exceptions import OracleTooLarge, StorageError, UnknownItem
from biasminer.models.items import render_item
from biasminer.models.mining import Itemset, SupportThreshold
from biasminer.services.vocab_db import TransactionDB, Vocabulary
from biasminer.utils.helpers import chunks, resolve_workers

logger = logging.getLogger(__name__)

_PARALLEL_MIN_CANDIDATES = 2048


# ============================================
# BITMAP INDEX
# ============================================

class BitmapIndex:
    """
    One bit vector per item over transaction positions

    Bit vectors are Python ints: bit t of bitmap(i) is set iff transaction t
    contains item i, and support is int.bit_count() of the AND.
    """

    def __init__(self, bitmaps: List[int], transaction_count: int, columns: Optional[sparse.csc_matrix] = None):
        self.bitmaps = bitmaps
        self.transaction_count = transaction_count
        self._columns = columns

    @property
    def item_count(self) -> int:
        return len(self.bitmaps)

    def bitmap(self, item_id: int) -> int:
        if not 0 <= item_id < len(self.bitmaps):
            raise UnknownItem(f"Item id {item_id} is not in the index")
        return self.bitmaps[item_id]

    def item_support(self, item_id: int) -> int:
        return self.bitmap(item_id).bit_count()

    def bits(self, item_id: int) -> List[int]:
        """Bit vector of one item as a 0/1 list over transactions"""
        value = self.bitmap(item_id)
        return [(value >> t) & 1 for t in range(self.transaction_count)]

    def incidence(self) -> sparse.csc_matrix:
        """Transactions x items 0/1 matrix (built lazily)"""
        if self._columns is None:
            rows, cols = [], []
            for item_id, value in enumerate(self.bitmaps):
                positions = _bit_positions(value)
                rows.extend(positions)
                cols.extend([item_id] * len(positions))
            data = np.ones(len(rows), dtype=np.int32)
            self._columns = sparse.csc_matrix(
                (data, (rows, cols)), shape=(self.transaction_count, self.item_count)
            )
        return self._columns


def _bit_positions(value: int) -> List[int]:
    positions = []
    while value:
        low = value & -value
        positions.append(low.bit_length() - 1)
        value ^= low
    return positions


def _bitmap_from_positions(positions: np.ndarray, length: int) -> int:
    flags = np.zeros(length, dtype=np.uint8)
    flags[positions] = 1
    return int.from_bytes(np.packbits(flags, bitorder="little").tobytes(), "little")


def build_bitmap_index(db: TransactionDB) -> BitmapIndex:
    """
    Build the vertical index for every vocabulary item

    Items that occur in no transaction get an all-zero bitmap.
    """
    item_count = len(db.vocabulary)
    transaction_count = len(db.transactions)

    lengths = np.fromiter((len(t.items) for t in db.transactions), dtype=np.int64, count=transaction_count)
    rows = np.repeat(np.arange(transaction_count, dtype=np.int64), lengths)
    cols = np.fromiter(
        (item_id for t in db.transactions for item_id in t.items),
        dtype=np.int64,
        count=int(lengths.sum()),
    )
    data = np.ones(cols.shape[0], dtype=np.int32)
    columns = sparse.csc_matrix((data, (rows, cols)), shape=(transaction_count, item_count))

    bitmaps = [0] * item_count
    for item_id in range(item_count):
        positions = columns.indices[columns.indptr[item_id]:columns.indptr[item_id + 1]]
        if positions.size:
            bitmaps[item_id] = _bitmap_from_positions(positions, transaction_count)

    logger.info(f"📇 Bitmap index: {item_count} items x {transaction_count} transactions")
    return BitmapIndex(bitmaps, transaction_count, columns)


def support(index: BitmapIndex, items: Sequence[int]) -> int:
    """
    Number of transactions containing every item

    support([]) is the transaction count.
    """
    if not items:
        return index.transaction_count
    value = index.bitmap(items[0])
    for item_id in items[1:]:
        value &= index.bitmap(item_id)
        if not value:
            return 0
    return value.bit_count()


# ============================================
# LEVELWISE MINING
# ============================================

def _generate_candidates(level: Sequence[Tuple[int, ...]]) -> List[Tuple[int, ...]]:
    """
    Prefix-join of sorted k-itemsets, pruned by downward closure
    """
    frequent = set(level)
    candidates = []
    # level is sorted, so itemsets sharing a (k-1)-prefix are contiguous
    start = 0
    while start < len(level):
        prefix = level[start][:-1]
        end = start
        while end < len(level) and level[end][:-1] == prefix:
            end += 1
        block = level[start:end]
        for i in range(len(block)):
            for j in range(i + 1, len(block)):
                candidate = block[i] + (block[j][-1],)
                if all(candidate[:x] + candidate[x + 1:] in frequent for x in range(len(candidate) - 2)):
                    candidates.append(candidate)
        start = end
    return candidates


def _count_with(bitmaps: List[int], candidates: Iterable[Tuple[int, ...]], minimum: int) -> List[Tuple[Tuple[int, ...], int]]:
    result = []
    for candidate in candidates:
        value = bitmaps[candidate[0]]
        for item_id in candidate[1:]:
            value &= bitmaps[item_id]
        count = value.bit_count()
        if count >= minimum:
            result.append((candidate, count))
    return result


_worker_bitmaps: List[int] = []


def _init_worker(bitmaps: List[int]):
    global _worker_bitmaps
    _worker_bitmaps = bitmaps


def _count_chunk(args: Tuple[List[Tuple[int, ...]], int]) -> List[Tuple[Tuple[int, ...], int]]:
    candidates, minimum = args
    return _count_with(_worker_bitmaps, candidates, minimum)


def _count_candidates(
    index: BitmapIndex,
    candidates: List[Tuple[int, ...]],
    minimum: int,
    workers: int,
) -> List[Tuple[Tuple[int, ...], int]]:
    """Support-count candidates, in a process pool when there are many"""
    if workers <= 1 or len(candidates) < _PARALLEL_MIN_CANDIDATES:
        return _count_with(index.bitmaps, candidates, minimum)

    size = max(1, len(candidates) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(index.bitmaps,)) as pool:
        parts = pool.map(_count_chunk, [(chunk, minimum) for chunk in chunks(candidates, size)])
        return [entry for part in parts for entry in part]


def _frequent_pairs(index: BitmapIndex, singles: List[int], minimum: int) -> List[Tuple[Tuple[int, ...], int]]:
    """Level 2 from one sparse co-occurrence product instead of pairwise ANDs"""
    matrix = index.incidence()[:, singles]
    cooccurrence = sparse.triu(matrix.T @ matrix, k=1).tocoo()
    keep = cooccurrence.data >= minimum
    pairs = [
        ((singles[i], singles[j]), int(count))
        for i, j, count in zip(cooccurrence.row[keep], cooccurrence.col[keep], cooccurrence.data[keep])
    ]
    pairs.sort()
    return pairs


def mine_frequent(
    index: BitmapIndex,
    threshold: SupportThreshold,
    workers: Optional[int] = None,
    max_size: Optional[int] = None,
) -> List[Itemset]:
    """
    All non-empty itemsets with support >= s, with exact supports

    Args:
        index: Bitmap index of the database
        threshold: Support threshold s
        workers: Processes for candidate counting (results do not change)
        max_size: Stop after itemsets of this size (None = no limit)

    Returns:
        Itemsets ordered by size, then by ids
    """
    minimum = threshold.resolve(index.transaction_count)
    workers = resolve_workers(workers if workers is not None else settings.WORKERS)

    singles = [
        item_id for item_id, value in enumerate(index.bitmaps)
        if value and value.bit_count() >= minimum
    ]
    result = [Itemset((item_id,), index.bitmaps[item_id].bit_count()) for item_id in singles]
    logger.debug(f"Level 1: {len(result)} frequent items (s={minimum})")

    if max_size == 1 or len(singles) < 2:
        return result

    level = _frequent_pairs(index, singles, minimum)
    size = 2
    while level:
        result.extend(Itemset(items, count) for items, count in level)
        logger.debug(f"Level {size}: {len(level)} frequent itemsets")
        if max_size is not None and size >= max_size:
            break
        candidates = _generate_candidates([items for items, _ in level])
        if not candidates:
            break
        level = sorted(_count_candidates(index, candidates, minimum, workers))
        size += 1

    logger.info(f"⛏️  Mined {len(result)} frequent itemsets (s={minimum}, transactions={index.transaction_count})")
    return result


# ============================================
# BRUTE-FORCE ORACLE
# ============================================

def brute_force_frequent(
    db: TransactionDB,
    threshold: SupportThreshold,
    max_items: Optional[int] = None,
) -> List[Itemset]:
    """
    Enumerate every subset of occurring items and count by direct scan

    Same output contract as mine_frequent; meant for small databases.
    """
    cap = max_items if max_items is not None else settings.ORACLE_MAX_ITEMS
    universe = db.occurring_items()
    if len(universe) > cap:
        raise OracleTooLarge(f"{len(universe)} distinct items exceed the oracle cap of {cap}")
    if not db.transactions:
        return []

    minimum = threshold.resolve(len(db.transactions))
    transactions = db.item_sets()
    result = []
    for size in range(1, len(universe) + 1):
        for items in combinations(universe, size):
            needed = set(items)
            count = sum(1 for t in transactions if needed <= t)
            if count >= minimum:
                result.append(Itemset(items, count))
    return result


def supports_by_items(itemsets: Iterable[Itemset]) -> Dict[Tuple[int, ...], int]:
    return {itemset.items: itemset.support for itemset in itemsets}


# ============================================
# DUMP
# ============================================

def format_itemsets(itemsets: Sequence[Itemset], vocab: Vocabulary) -> str:
    """One line per itemset: support<TAB>space separated rendered tokens"""
    lines = [
        f"{itemset.support}\t{' '.join(render_item(vocab.from_id(i)) for i in itemset.items)}"
        for itemset in sorted(itemsets, key=Itemset.sort_key)
    ]
    return "".join(line + "\n" for line in lines)


def write_itemsets(path: Union[str, Path], itemsets: Sequence[Itemset], vocab: Vocabulary):
    try:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(format_itemsets(itemsets, vocab), encoding="utf-8")
    except OSError as e:
        raise StorageError(f"Cannot write itemsets {path}: {e}")
    logger.info(f"💾 Saved {len(itemsets)} itemsets -> {path}")

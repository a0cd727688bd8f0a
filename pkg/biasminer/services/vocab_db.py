"""
Vocabulary & Transaction Database
Interns tri-modal items, builds transactions and persists the database
"""

from typing import Dict, Iterable, Iterator, List, Optional, Tuple, Union
from pathlib import Path
import json
import logging

from pydantic import ValidationError

from biasminer.core.exceptions import (
    FrozenVocabulary,
    InvalidRecord,
    MalformedDatabase,
    StorageError,
    UnknownItem,
)
from biasminer.models.items import Item, Modality, Transaction
from biasminer.models.records import IngestRecord, RecordFailure, TokenizerConfig
from biasminer.utils.helpers import hash_bytes
from biasminer.utils.text_processing import normalize_answer, tokenize

logger = logging.getLogger(__name__)

DB_FORMAT_VERSION = 1
DB_MAGIC = "#biasminer-db"


# ============================================
# VOCABULARY
# ============================================

class Vocabulary:
    """
    Bidirectional Item <-> id map with dense ids 0..count-1
    Single writer until freeze(); read-only afterwards
    """

    def __init__(self):
        self._ids: Dict[Item, int] = {}
        self._items: List[Item] = []
        self._frozen = False

    @property
    def frozen(self) -> bool:
        return self._frozen

    def freeze(self) -> "Vocabulary":
        self._frozen = True
        return self

    def intern(self, token: str, modality: Modality) -> int:
        """Return the id of (token, modality), assigning the next id if new"""
        item = Item(token, modality)
        existing = self._ids.get(item)
        if existing is not None:
            return existing
        if self._frozen:
            raise FrozenVocabulary(f"Cannot intern {item.render()!r} ({modality.value}) into a frozen vocabulary")

        item_id = len(self._items)
        self._ids[item] = item_id
        self._items.append(item)
        return item_id

    def to_id(self, item: Item) -> int:
        try:
            return self._ids[item]
        except KeyError:
            raise UnknownItem(f"Item not in vocabulary: {item.render()!r}")

    def get_id(self, item: Item) -> Optional[int]:
        return self._ids.get(item)

    def from_id(self, item_id: int) -> Item:
        if not 0 <= item_id < len(self._items):
            raise UnknownItem(f"Item id out of range: {item_id}")
        return self._items[item_id]

    def modality_of(self, item_id: int) -> Modality:
        return self.from_id(item_id).modality

    def items(self) -> List[Item]:
        return list(self._items)

    def counts(self) -> Dict[str, int]:
        """Vocabulary size per modality"""
        counts = {modality.value: 0 for modality in Modality}
        for item in self._items:
            counts[item.modality.value] += 1
        return counts

    def __len__(self) -> int:
        return len(self._items)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocabulary) and self._items == other._items

    def __repr__(self) -> str:
        return f"Vocabulary(size={len(self)}, frozen={self._frozen})"


def intern_item(vocab: Vocabulary, token: str, modality: Modality) -> int:
    """
    Intern an item into the vocabulary

    Args:
        vocab: Target vocabulary
        token: Item token (already normalized)
        modality: Item namespace

    Returns:
        Dense item id
    """
    return vocab.intern(token, modality)


# ============================================
# TRANSACTIONS
# ============================================

def tokenize_question(text: str, config: Optional[TokenizerConfig] = None) -> List[str]:
    """
    Tokenize a question: lowercase, strip punctuation, split on whitespace

    Args:
        text: Question text
        config: Tokenizer settings

    Returns:
        Tokens in order, duplicates preserved
    """
    config = config or TokenizerConfig()
    return tokenize(text, stopwords=config.stopwords, min_length=config.min_length)


def build_transaction(
    record: IngestRecord,
    visual_word: Optional[int],
    vocab: Vocabulary,
    tokenizer: Optional[TokenizerConfig] = None,
    codebook_size: Optional[int] = None,
) -> Transaction:
    """
    Build the transaction {question words} + {visual word} + {answer}

    Args:
        record: Ingest record
        visual_word: Codeword index of the attended region, None for language-only
        vocab: Vocabulary to intern into
        tokenizer: Tokenizer settings
        codebook_size: When given, visual_word must be below it

    Returns:
        Transaction with sorted ids
    """
    answer = normalize_answer(record.answer)
    if not answer:
        raise InvalidRecord(f"Record {record.record_id} has an empty answer")
    if visual_word is not None and (visual_word < 0 or (codebook_size is not None and visual_word >= codebook_size)):
        raise InvalidRecord(f"Record {record.record_id} has visual word {visual_word} outside the codebook")

    ids = {vocab.intern(token, Modality.QUESTION_WORD) for token in tokenize_question(record.question, tokenizer)}
    if visual_word is not None:
        ids.add(vocab.intern(Item.visual(visual_word).token, Modality.VISUAL_WORD))
    ids.add(vocab.intern(answer, Modality.ANSWER_WORD))

    return Transaction(items=tuple(sorted(ids)), source_id=record.record_id)


class TransactionDB:
    """Vocabulary plus ordered transactions"""

    def __init__(self, vocabulary: Optional[Vocabulary] = None, transactions: Optional[List[Transaction]] = None):
        self.vocabulary = vocabulary or Vocabulary()
        self.transactions: List[Transaction] = list(transactions or [])

    def add(self, transaction: Transaction):
        if self.vocabulary.frozen:
            for item_id in transaction.items:
                self.vocabulary.from_id(item_id)
        self.transactions.append(transaction)

    def item_sets(self) -> List[frozenset]:
        return [frozenset(t.items) for t in self.transactions]

    def occurring_items(self) -> List[int]:
        """Ids that appear in at least one transaction, ascending"""
        return sorted({item_id for t in self.transactions for item_id in t.items})

    def fingerprint(self) -> str:
        return hash_bytes(serialize_db(self).encode("utf-8"))

    def item_counts(self) -> Dict[str, int]:
        """Vocabulary size per modality"""
        return self.vocabulary.counts()

    def __len__(self) -> int:
        return len(self.transactions)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, TransactionDB)
            and self.vocabulary == other.vocabulary
            and self.transactions == other.transactions
        )

    def __repr__(self) -> str:
        return f"TransactionDB(transactions={len(self)}, vocabulary={len(self.vocabulary)})"


# ============================================
# PERSISTENCE
# ============================================

def serialize_db(db: TransactionDB) -> str:
    """
    Render the database file

    Layout:
        #biasminer-db<TAB>1
        #vocabulary<TAB><count>
        <id><TAB><modality><TAB><token>       (count lines)
        #transactions<TAB><count>
        <source_id><TAB><space separated ids>  (count lines)
    """
    lines = [f"{DB_MAGIC}\t{DB_FORMAT_VERSION}", f"#vocabulary\t{len(db.vocabulary)}"]
    for item_id, item in enumerate(db.vocabulary.items()):
        lines.append(f"{item_id}\t{item.modality.value}\t{item.token}")
    lines.append(f"#transactions\t{len(db.transactions)}")
    for transaction in db.transactions:
        lines.append(f"{transaction.source_id}\t{' '.join(map(str, transaction.items))}")
    return "\n".join(lines) + "\n"


def parse_db(text: str) -> TransactionDB:
    """Parse the database file, raising MalformedDatabase on any defect"""
    if not text.endswith("\n"):
        raise MalformedDatabase("Database file is truncated (missing final newline)")
    lines = text[:-1].split("\n")
    cursor = 0

    def header(name: str) -> str:
        nonlocal cursor
        if cursor >= len(lines):
            raise MalformedDatabase(f"Missing {name} header")
        parts = lines[cursor].split("\t")
        if len(parts) != 2 or parts[0] != name:
            raise MalformedDatabase(f"Expected {name} header at line {cursor + 1}")
        cursor += 1
        return parts[1]

    if header(DB_MAGIC) != str(DB_FORMAT_VERSION):
        raise MalformedDatabase("Unsupported database format version")

    try:
        vocab_count = int(header("#vocabulary"))
    except ValueError:
        raise MalformedDatabase("Vocabulary count is not an integer")

    vocab = Vocabulary()
    for expected_id in range(vocab_count):
        if cursor >= len(lines):
            raise MalformedDatabase("Database file is truncated inside the vocabulary block")
        parts = lines[cursor].split("\t")
        if len(parts) != 3:
            raise MalformedDatabase(f"Malformed vocabulary entry at line {cursor + 1}")
        try:
            item_id = int(parts[0])
            modality = Modality(parts[1])
            assigned = vocab.intern(parts[2], modality)
        except (ValueError, InvalidRecord) as e:
            raise MalformedDatabase(f"Malformed vocabulary entry at line {cursor + 1}: {e}")
        if item_id != expected_id or assigned != expected_id:
            raise MalformedDatabase(f"Vocabulary ids must be dense and unique (line {cursor + 1})")
        cursor += 1
    vocab.freeze()

    try:
        transaction_count = int(header("#transactions"))
    except ValueError:
        raise MalformedDatabase("Transaction count is not an integer")

    if len(lines) - cursor != transaction_count:
        raise MalformedDatabase(
            f"Expected {transaction_count} transactions, found {len(lines) - cursor}"
        )

    transactions = []
    for line in lines[cursor:]:
        source_id, sep, id_text = line.partition("\t")
        if not sep:
            raise MalformedDatabase(f"Malformed transaction line: {line[:60]!r}")
        try:
            ids = tuple(int(x) for x in id_text.split())
            transaction = Transaction(items=ids, source_id=source_id)
        except (ValueError, InvalidRecord) as e:
            raise MalformedDatabase(f"Malformed transaction {source_id!r}: {e}")
        if ids and (ids[0] < 0 or ids[-1] >= vocab_count):
            raise MalformedDatabase(f"Transaction {source_id!r} references an unknown item id")
        transactions.append(transaction)

    return TransactionDB(vocab, transactions)


def save_db(db: TransactionDB, path: Union[str, Path]):
    """Persist the database to path"""
    try:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(serialize_db(db), encoding="utf-8")
    except OSError as e:
        raise StorageError(f"Cannot write database {path}: {e}")
    logger.info(f"💾 Saved database: {len(db)} transactions, {len(db.vocabulary)} items -> {path}")


def load_db(path: Union[str, Path]) -> TransactionDB:
    """Load a database written by save_db"""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise StorageError(f"Cannot read database {path}: {e}")
    except UnicodeDecodeError as e:
        raise MalformedDatabase(f"Database {path} is not UTF-8: {e}")
    return parse_db(text)


# ============================================
# INGEST FILES
# ============================================

def read_records(path: Union[str, Path]) -> Iterator[Tuple[int, Union[IngestRecord, RecordFailure]]]:
    """
    Stream a JSON-lines ingest file

    Yields:
        (line number, record or failure); blank lines are ignored
    """
    try:
        handle = open(path, "rb")
    except OSError as e:
        raise StorageError(f"Cannot read ingest file {path}: {e}")

    with handle:
        for line_no, raw in enumerate(handle, 1):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError:
                yield line_no, RecordFailure(line=line_no, reason="invalid UTF-8")
                continue
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
            except json.JSONDecodeError as e:
                yield line_no, RecordFailure(line=line_no, reason=f"invalid JSON: {e.msg}")
                continue
            try:
                yield line_no, IngestRecord.model_validate(payload)
            except ValidationError as e:
                record_id = payload.get("record_id") if isinstance(payload, dict) else None
                reason = "; ".join(err["msg"] for err in e.errors())
                yield line_no, RecordFailure(line=line_no, record_id=record_id, reason=reason)


def write_records(path: Union[str, Path], records: Iterable[IngestRecord]) -> int:
    """Write records as JSON lines, returning the count written"""
    count = 0
    try:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", encoding="utf-8") as handle:
            for record in records:
                handle.write(record.model_dump_json(exclude_none=True))
                handle.write("\n")
                count += 1
    except OSError as e:
        raise StorageError(f"Cannot write ingest file {path}: {e}")
    return count

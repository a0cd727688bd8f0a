"""
Pipeline Service
tokenize -> crop attention -> assign codeword -> build transaction -> mine -> rules -> causal filter
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union
import logging

import numpy as np

from biasminer.core.exceptions import ConfigError, DataError, InsufficientData, InvalidRecord
from biasminer.models.crop import CropConfig
from biasminer.models.mining import Itemset, RuleConfig
from biasminer.models.pipeline import PipelineConfig, PipelineSummary
from biasminer.models.records import IngestRecord, RecordFailure, TokenizerConfig
from biasminer.services.attention_crop import min_enclosing_box, region_feature
from biasminer.services.codebook import (
    Codebook,
    CodebookConfig,
    assign_codeword,
    assign_codewords,
    load_codebook,
    save_codebook,
    train_codebook,
)
from biasminer.services.miner import build_bitmap_index, mine_frequent
from biasminer.services.rules import RuleSet, causal_filter, generate_rules, save_rules, split_by_visual
from biasminer.services.vocab_db import TransactionDB, build_transaction, read_records, save_db
from biasminer.utils.helpers import dict_to_json, stage_timer, write_text
from biasminer.utils.logger import log_skip, log_stage

logger = logging.getLogger(__name__)

RecordOrFailure = Union[IngestRecord, RecordFailure]


@dataclass
class PipelineResult:
    """Everything a run produces"""
    db: TransactionDB
    frequent: List[Itemset]
    rules: RuleSet
    summary: PipelineSummary
    codebook: Optional[Codebook] = None


# ============================================
# VISUAL WORDS
# ============================================

def region_vector(record: IngestRecord, crop: CropConfig) -> Optional[np.ndarray]:
    """
    Feature vector of the attended region, or None without a feature pathway

    Per-cell features are pooled over the cropped box; a flat feature is
    taken as already extracted from the crop.
    """
    if record.cell_features is not None:
        box = min_enclosing_box(record.attention, crop)
        vector = region_feature(record.cell_features, box)
    elif record.feature is not None:
        if record.attention is not None:
            # still validates that the attention map has mass
            min_enclosing_box(record.attention, crop)
        vector = np.asarray(record.feature, dtype=np.float64)
    else:
        return None

    if not np.all(np.isfinite(vector)):
        raise InvalidRecord(f"Record {record.record_id} has a non-finite region feature")
    return vector


def derive_visual_word(record: IngestRecord, codebook: Optional[Codebook], crop: Optional[CropConfig] = None) -> Optional[int]:
    """Visual word of one record: explicit codeword, or crop + 1-NN assignment"""
    crop = crop or CropConfig()
    if record.codeword is not None:
        if codebook is not None and record.codeword >= codebook.k:
            raise InvalidRecord(f"Codeword {record.codeword} is outside the codebook (k={codebook.k})")
        return record.codeword
    vector = region_vector(record, crop)
    if vector is None:
        return None
    if codebook is None:
        raise ConfigError("A codebook is required to assign visual words to features")
    return assign_codeword(codebook, vector)


# ============================================
# RUN
# ============================================

class PipelineService:
    """Runs the full bias-mining pipeline over ingest records"""

    def __init__(self, config: PipelineConfig, codebook: Optional[Codebook] = None):
        self.config = config
        self.codebook = codebook
        self.crop = CropConfig(tau=config.tau)
        self.tokenizer = TokenizerConfig(stopwords=config.stopwords)
        self.rule_config = RuleConfig(
            min_confidence=config.confidence,
            min_support=config.support_threshold,
            max_consequent_size=config.max_consequent,
        )
        self.summary = PipelineSummary(language_only=config.language_only)
        self.timings: Dict[str, float] = {}

    def _skip(self, record_id: Optional[str], reason: str, detail: str):
        self.summary.skipped_records += 1
        self.summary.skip_reasons[reason] = self.summary.skip_reasons.get(reason, 0) + 1
        log_skip(logger, record_id or "<unparsed>", detail)

    def _visual_inputs(self, records: Iterable[RecordOrFailure]) -> List[Tuple[IngestRecord, object]]:
        """Parse failures are skipped; surviving records carry a codeword, a vector or None"""
        prepared = []
        for entry in records:
            self.summary.input_records += 1
            if isinstance(entry, RecordFailure):
                self._skip(entry.record_id, "INVALID_RECORD", f"line {entry.line}: {entry.reason}")
                continue
            if self.config.language_only:
                prepared.append((entry, None))
                continue
            try:
                if entry.codeword is not None:
                    prepared.append((entry, int(entry.codeword)))
                else:
                    prepared.append((entry, region_vector(entry, self.crop)))
            except DataError as e:
                self._skip(entry.record_id, e.error_code, e.message)
        return prepared

    def _ensure_codebook(self, vectors: List[np.ndarray]) -> Optional[Codebook]:
        if self.codebook is not None:
            return self.codebook
        path = self.config.codebook
        if path and Path(path).exists():
            return load_codebook(path)
        if not vectors:
            return None

        dims = {vector.shape[0] for vector in vectors}
        if len(dims) != 1:
            raise ConfigError(f"Cannot train a codebook from features of mixed dimensions {sorted(dims)}")
        try:
            codebook = train_codebook(
                np.vstack(vectors),
                CodebookConfig(
                    k=self.config.k,
                    seed=self.config.seed,
                    normalize=self.config.normalize,
                    workers=self.config.workers,
                ),
            )
        except InsufficientData as e:
            raise ConfigError(f"Cannot train codebook: {e.message}")
        if path:
            save_codebook(codebook, path)
        return codebook

    def _assign(self, prepared: List[Tuple[IngestRecord, object]], codebook: Optional[Codebook]) -> List[Tuple[IngestRecord, Optional[int]]]:
        assigned: List[Optional[Tuple[IngestRecord, Optional[int]]]] = [None] * len(prepared)
        batch_rows, batch_vectors = [], []

        for row, (record, visual) in enumerate(prepared):
            if isinstance(visual, np.ndarray):
                if codebook is None or visual.shape[0] != codebook.d:
                    expected = codebook.d if codebook is not None else "a codebook"
                    self._skip(record.record_id, "DIMENSION_MISMATCH", f"feature dimension {visual.shape[0]}, expected {expected}")
                    continue
                batch_rows.append(row)
                batch_vectors.append(visual)
            elif visual is not None and codebook is not None and visual >= codebook.k:
                self._skip(record.record_id, "INVALID_RECORD", f"codeword {visual} outside codebook (k={codebook.k})")
            else:
                assigned[row] = (record, visual)

        if batch_vectors:
            labels = assign_codewords(codebook, np.vstack(batch_vectors), workers=self.config.workers)
            for row, label in zip(batch_rows, labels):
                assigned[row] = (prepared[row][0], int(label))

        return [entry for entry in assigned if entry is not None]

    def ingest(self, records: Iterable[RecordOrFailure]) -> TransactionDB:
        """Records -> frozen transaction database; failing records are skipped and counted"""
        with stage_timer(self.timings, "ingest"):
            prepared = self._visual_inputs(records)
        log_stage(logger, "ingest", self.timings["ingest"], records=self.summary.input_records, skipped=self.summary.skipped_records)

        if not self.config.language_only:
            with stage_timer(self.timings, "codebook"):
                vectors = [visual for _, visual in prepared if isinstance(visual, np.ndarray)]
                self.codebook = self._ensure_codebook(vectors)
                resolved = self._assign(prepared, self.codebook)
            log_stage(logger, "codebook", self.timings["codebook"], assigned=len(resolved))
        else:
            resolved = [(record, None) for record, _ in prepared]

        with stage_timer(self.timings, "transactions"):
            db = TransactionDB()
            for record, visual_word in resolved:
                try:
                    db.add(build_transaction(record, visual_word, db.vocabulary, self.tokenizer))
                except DataError as e:
                    self._skip(record.record_id, e.error_code, e.message)
            db.vocabulary.freeze()
        log_stage(logger, "transactions", self.timings["transactions"], transactions=len(db), items=len(db.vocabulary))

        self.summary.processed_records = len(db)
        self.summary.transactions = len(db)
        self.summary.vocabulary = db.item_counts()
        self.summary.db_fingerprint = db.fingerprint()
        return db

    def mine(self, db: TransactionDB) -> Tuple[List[Itemset], RuleSet, RuleSet]:
        """(frequent itemsets, generated rules, causal rules)"""
        frequent: List[Itemset] = []
        with stage_timer(self.timings, "mine"):
            index = build_bitmap_index(db)
            if len(db):
                self.summary.support_threshold = self.rule_config.min_support.resolve(len(db))
                frequent = mine_frequent(index, self.rule_config.min_support, workers=self.config.workers)
        self.summary.frequent_itemsets = len(frequent)
        log_stage(logger, "mine", self.timings["mine"], itemsets=len(frequent))

        with stage_timer(self.timings, "rules"):
            generated = generate_rules(frequent, index, self.rule_config, fingerprint=db.fingerprint())
            rules = causal_filter(generated, db.vocabulary)
        self.summary.rules_generated = len(generated)
        self.summary.rules_causal = len(rules)
        self.summary.rules_without_visual = len(split_by_visual(rules, db.vocabulary)[1])
        log_stage(logger, "rules", self.timings["rules"], generated=len(generated), kept=len(rules))
        return frequent, generated, rules

    def run(self, records: Iterable[RecordOrFailure]) -> PipelineResult:
        """Run every stage in memory"""
        db = self.ingest(records)
        frequent, _, rules = self.mine(db)
        self.summary.stage_seconds = dict(self.timings)
        return PipelineResult(db=db, frequent=frequent, rules=rules, summary=self.summary, codebook=self.codebook)


def run_pipeline(config: PipelineConfig, codebook: Optional[Codebook] = None) -> PipelineResult:
    """
    Read the ingest file, run every stage and persist db, rules and summary

    Per-record failures are skipped and counted; I/O and config errors abort.
    """
    if not config.input:
        raise ConfigError("The pipeline needs an ingest file (--input)")

    logger.info("=" * 70)
    logger.info(f"🚀 Pipeline: input={config.input} | tau={config.tau} | support={config.support} | "
                f"confidence={config.confidence} | language_only={config.language_only}")
    logger.info("=" * 70)

    service = PipelineService(config, codebook=codebook)
    result = service.run(record for _, record in read_records(config.input))

    if config.db:
        save_db(result.db, config.db)
    if config.out:
        save_rules(result.rules, result.db.vocabulary, config.out)
        write_text(f"{config.out}.summary.json", dict_to_json(result.summary.model_dump(), pretty=True) + "\n")

    summary = result.summary
    logger.info(
        f"✅ Pipeline done | processed: {summary.processed_records}/{summary.input_records} "
        f"| skipped: {summary.skipped_records} | itemsets: {summary.frequent_itemsets} "
        f"| rules: {summary.rules_causal} (of {summary.rules_generated})"
    )
    return result

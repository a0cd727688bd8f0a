"""
Synthetic Dataset Service
Generate ingest records with planted biases and exact ground truth
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union
import logging

import numpy as np

from biasminer.models.crop import CropConfig
from biasminer.models.items import Item
from biasminer.models.records import IngestRecord
from biasminer.models.synth import GroundTruthRule, PlantedBias, SynthSpec
from biasminer.services.codebook import Codebook, assign_codewords
from biasminer.services.pipeline import region_vector
from biasminer.services.vocab_db import tokenize_question
from biasminer.utils.helpers import write_text
from biasminer.utils.text_processing import normalize_answer

logger = logging.getLogger(__name__)

# Values are rounded so records survive a JSON round trip unchanged
_DECIMALS = 6


@dataclass
class SynthResult:
    """Generated records, their realised ground truth and the reference codebook"""
    records: List[IngestRecord]
    ground_truth: List[GroundTruthRule]
    codebook: Codebook


def reference_codebook(spec: SynthSpec) -> Codebook:
    """Centroids on separate axes, centroid_layout * sigma from the origin"""
    centroids = np.zeros((spec.codebook_size, spec.feature_dim), dtype=np.float64)
    diagonal = np.arange(spec.codebook_size)
    centroids[diagonal, diagonal] = spec.centroid_layout * spec.sigma
    return Codebook(centroids)


def _attention(spec: SynthSpec, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """(attention grid, mask of the attended patch)"""
    g = spec.grid_size
    attention = np.zeros((g, g), dtype=np.float64)

    if spec.attention_mode == "uniform":
        attention[:] = 1.0
    elif spec.attention_mode == "delta":
        row, col = rng.integers(0, g, size=2)
        attention[row, col] = 1.0
    else:
        # 3x3 Gaussian patch that fits inside the grid
        row, col = rng.integers(1, g - 1, size=2)
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                attention[row + dr, col + dc] = np.exp(-(dr * dr + dc * dc) / 2.0)

    attention *= rng.uniform(0.5, 2.0)
    attention = np.round(attention, _DECIMALS)
    return attention, attention > 0


def _cell_features(
    spec: SynthSpec,
    centroids: np.ndarray,
    mask: np.ndarray,
    intended: int,
    background: int,
    rng: np.random.Generator,
) -> np.ndarray:
    words = np.where(mask, intended, background)
    noise = rng.normal(0.0, spec.sigma, size=(spec.grid_size, spec.grid_size, spec.feature_dim))
    return np.round(centroids[words] + noise, _DECIMALS)


def _background_pool(spec: SynthSpec) -> List[int]:
    planted = {bias.visual_word for bias in spec.biases if bias.visual_word is not None}
    free = [w for w in range(spec.codebook_size) if w not in planted]
    return free or list(range(spec.codebook_size))


def _pick_background(pool: Sequence[int], intended: int, spec: SynthSpec, rng: np.random.Generator) -> int:
    choices = [w for w in pool if w != intended]
    if not choices:
        choices = [w for w in range(spec.codebook_size) if w != intended] or [intended]
    return int(choices[rng.integers(0, len(choices))])


def _question_text(tokens: Sequence[str]) -> str:
    text = " ".join(tokens)
    return f"{text[:1].upper()}{text[1:]}?"


def generate(spec: SynthSpec, crop: Optional[CropConfig] = None) -> SynthResult:
    """
    Generate a dataset deterministically from spec.seed

    Every record carries an attention grid and per-cell features; the
    attended patch holds features around the intended centroid and the
    remaining cells hold a background centroid.

    Args:
        spec: Planted biases, noise pools and layout
        crop: Crop settings used when recounting ground truth

    Returns:
        SynthResult with records, ground truth and reference codebook
    """
    rng = np.random.default_rng(spec.seed)
    codebook = reference_codebook(spec)
    centroids = codebook.centroids
    pool = _background_pool(spec)

    weights = np.array([bias.weight for bias in spec.biases] + [spec.noise_weight], dtype=np.float64)
    sources = rng.choice(len(weights), size=spec.record_count, p=weights / weights.sum())

    distractor_tokens = list(spec.noise_vocab)
    if spec.overlap:
        distractor_tokens += sorted({token for bias in spec.biases for token in bias.question_template})
    low, high = spec.question_length

    records = []
    for index, source in enumerate(sources):
        if source < len(spec.biases):
            bias = spec.biases[source]
            tokens = list(bias.question_template)
            fired = rng.random() < bias.fire_rate
            answer = bias.answer if fired else spec.noise_answers[rng.integers(0, len(spec.noise_answers))]
            if bias.visual_word is not None:
                intended = bias.visual_word
            else:
                intended = int(pool[rng.integers(0, len(pool))])
        else:
            length = int(rng.integers(low, high + 1))
            tokens = [distractor_tokens[i] for i in rng.integers(0, len(distractor_tokens), size=length)]
            answer = spec.noise_answers[rng.integers(0, len(spec.noise_answers))]
            intended = int(rng.integers(0, spec.codebook_size))

        attention, mask = _attention(spec, rng)
        background = _pick_background(pool, intended, spec, rng)
        features = _cell_features(spec, centroids, mask, intended, background, rng)

        records.append(IngestRecord(
            record_id=f"synth-{index:06d}",
            question=_question_text(tokens),
            answer=answer,
            attention=attention.tolist(),
            cell_features=features.tolist(),
        ))

    ground_truth = count_ground_truth(records, spec.biases, codebook, crop)
    logger.info(f"🧪 Generated {len(records)} records with {len(spec.biases)} planted biases (seed={spec.seed})")
    for rule in ground_truth:
        logger.debug(
            f"Planted {' '.join(rule.antecedent)} -> {rule.consequent}: "
            f"confidence {float(rule.confidence):.3f}, language only {float(rule.language_confidence):.3f}"
        )
    return SynthResult(records=records, ground_truth=ground_truth, codebook=codebook)


def count_ground_truth(
    records: Sequence[IngestRecord],
    biases: Sequence[PlantedBias],
    codebook: Codebook,
    crop: Optional[CropConfig] = None,
) -> List[GroundTruthRule]:
    """
    Recount each planted bias over the records

    Visual words come from the same crop and batch assignment the pipeline
    uses, so the counts are what a run over these records mines.
    """
    crop = crop or CropConfig()
    questions = [frozenset(tokenize_question(record.question)) for record in records]
    answers = [normalize_answer(record.answer) for record in records]

    vectors = [region_vector(record, crop) for record in records]
    if vectors:
        words = assign_codewords(codebook, np.vstack(vectors))
    else:
        words = np.zeros(0, dtype=np.int64)

    truth = []
    for bias in biases:
        template = frozenset(tokenize_question(" ".join(bias.question_template)))
        answer = normalize_answer(bias.answer)
        support = antecedent_count = language_support = language_count = 0

        for tokens, word, given in zip(questions, words, answers):
            if not template <= tokens:
                continue
            language_count += 1
            language_support += given == answer
            if bias.visual_word is None or int(word) == bias.visual_word:
                antecedent_count += 1
                support += given == answer

        antecedent = sorted(template)
        if bias.visual_word is not None:
            antecedent.append(Item.visual(bias.visual_word).token)
        truth.append(GroundTruthRule(
            antecedent=antecedent,
            consequent=answer,
            support=support,
            antecedent_count=antecedent_count,
            language_support=language_support,
            language_antecedent_count=language_count,
        ))
    return truth


def format_ground_truth(rules: Sequence[GroundTruthRule]) -> str:
    """
    Tab separated ground truth, one planted rule per line

    Example line:
        "color grass is the what v:0\tgreen\t1480\t1480\t1.000000"
    """
    lines = ["# antecedent\tconsequent\tsupport\tantecedent_count\tconfidence"]
    for rule in rules:
        lines.append(
            f"{' '.join(rule.antecedent)}\t{rule.consequent}\t{rule.support}\t"
            f"{rule.antecedent_count}\t{float(rule.confidence):.6f}"
        )
    return "\n".join(lines) + "\n"


def write_ground_truth(path: Union[str, Path], rules: Sequence[GroundTruthRule]):
    write_text(str(path), format_ground_truth(rules))


# ============================================
# DEMO SPEC
# ============================================

DEFAULT_NOISE_VOCAB = [
    "dog", "cat", "table", "window", "car", "street", "bus", "train", "sky", "cloud",
    "tree", "flower", "kitchen", "room", "bed", "chair", "picture", "man", "woman", "child",
    "plate", "pizza", "food", "water", "beach", "ocean", "wave", "boat", "road", "sign",
    "light", "clock", "wall", "door", "floor", "shirt", "hat", "umbrella", "bench", "fence",
]

DEFAULT_NOISE_ANSWERS = ["yes", "no", "2", "3", "red", "blue", "white", "black", "wood", "outside"]


def default_spec(record_count: int = 10000, seed: int = 0, attention_mode: str = "delta") -> SynthSpec:
    """Five planted biases shaped after typical VQA shortcuts"""
    biases = [
        PlantedBias(question_template=["what", "color", "is", "the", "grass"], visual_word=0,
                    answer="green", fire_rate=1.0, weight=0.15),
        PlantedBias(question_template=["what", "sport", "is", "he", "playing"], visual_word=1,
                    answer="tennis", fire_rate=0.8, weight=0.2),
        PlantedBias(question_template=["how", "many", "legs", "does", "the", "giraffe", "have"], visual_word=2,
                    answer="4", fire_rate=0.9, weight=0.1),
        PlantedBias(question_template=["why", "is", "the", "photo", "blurry"], visual_word=None,
                    answer="movement", fire_rate=0.7, weight=0.06),
        PlantedBias(question_template=["what", "is", "she", "doing"], visual_word=3,
                    answer="texting", fire_rate=0.6, weight=0.05),
    ]
    return SynthSpec(
        biases=biases,
        noise_vocab=DEFAULT_NOISE_VOCAB,
        noise_answers=DEFAULT_NOISE_ANSWERS,
        record_count=record_count,
        seed=seed,
        attention_mode=attention_mode,
        noise_weight=0.44,
    )

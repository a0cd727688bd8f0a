"""
Tests for synthetic datasets with planted biases
"""

from fractions import Fraction

import numpy as np
import pytest

from biasminer.core.exceptions import InvalidSpec
from biasminer.models.crop import CropConfig
from biasminer.models.records import IngestRecord
from biasminer.models.synth import PlantedBias, SynthSpec
from biasminer.services.pipeline import derive_visual_word
from biasminer.services.synth import (
    count_ground_truth,
    default_spec,
    format_ground_truth,
    generate,
    reference_codebook,
    write_ground_truth,
)
from biasminer.services.vocab_db import read_records, tokenize_question, write_records


def _single_bias_spec(**overrides) -> SynthSpec:
    values = dict(
        biases=[PlantedBias(question_template=["what", "color", "is", "the", "grass"], visual_word=0, answer="green")],
        record_count=100,
        seed=5,
    )
    values.update(overrides)
    return SynthSpec(**values)


# ============================================
# SPECS
# ============================================

@pytest.mark.parametrize("overrides", [
    {"biases": []},
    {"codebook_size": 9},
    {"biases": [PlantedBias(question_template=["what"], visual_word=8, answer="x")]},
    {"biases": [PlantedBias(question_template=["what"], answer="x", fire_rate=0.5)]},
    {"noise_weight": 1.0},
    {"question_length": (3, 2)},
    {"attention_mode": "blob", "grid_size": 2},
])
def test_infeasible_specs(overrides):
    with pytest.raises(InvalidSpec):
        _single_bias_spec(**overrides)


def test_default_spec_is_valid():
    spec = default_spec(record_count=50, seed=1)
    assert len(spec.biases) == 5
    assert sum(1 for bias in spec.biases if bias.visual_word is None) == 1
    assert spec.codebook_size <= spec.feature_dim


def test_reference_codebook_layout():
    codebook = reference_codebook(_single_bias_spec(centroid_layout=10.0, sigma=0.5))
    assert codebook.k == 8 and codebook.d == 8
    assert np.array_equal(codebook.centroids, np.eye(8) * 5.0)


# ============================================
# GENERATION
# ============================================

def test_generation_is_deterministic(small_spec):
    first, second = generate(small_spec), generate(small_spec)
    assert first.records == second.records
    assert first.ground_truth == second.ground_truth
    other = generate(small_spec.model_copy(update={"seed": 12}))
    assert other.records != first.records


def test_record_shape(small_spec):
    records = generate(small_spec).records
    assert len(records) == small_spec.record_count
    assert records[0].record_id == "synth-000000"
    for record in records[:20]:
        assert record.question.endswith("?")
        assert len(record.attention) == small_spec.grid_size
        assert len(record.cell_features[0][0]) == small_spec.feature_dim
        assert record.codeword is None and record.feature is None


def test_single_bias_has_full_confidence():
    result = generate(_single_bias_spec())
    (truth,) = result.ground_truth
    assert truth.antecedent == ["color", "grass", "is", "the", "what", "v:0"]
    assert truth.consequent == "green"
    assert (truth.support, truth.antecedent_count) == (100, 100)
    assert truth.confidence == 1


def test_ground_truth_matches_recount(small_spec):
    result = generate(small_spec)
    assert count_ground_truth(result.records, small_spec.biases, result.codebook) == result.ground_truth

    template = set(small_spec.biases[1].question_template)
    language_count = sum(1 for r in result.records if template <= set(tokenize_question(r.question)))
    assert result.ground_truth[1].language_antecedent_count == language_count
    assert result.ground_truth[1].support <= result.ground_truth[1].antecedent_count


def test_fire_rate_leaves_misses(small_spec):
    truth = generate(small_spec).ground_truth[1]
    assert 0 < truth.support < truth.antecedent_count


def test_records_survive_file_round_trip(tmp_path, small_spec):
    records = generate(small_spec.model_copy(update={"record_count": 30})).records
    path = tmp_path / "synth.jsonl"
    write_records(path, records)
    assert [record for _, record in read_records(path)] == records


# ============================================
# VISUAL WORDS
# ============================================

def test_delta_attention_maps_to_planted_word():
    spec = _single_bias_spec()
    codebook = reference_codebook(spec)
    centroids = codebook.centroids
    attention = np.zeros((7, 7))
    attention[3, 5] = 1.0
    cells = np.broadcast_to(centroids[6], (7, 7, 8)).copy()
    cells[3, 5] = centroids[2]
    record = IngestRecord(
        record_id="delta", question="what is it", answer="cat",
        attention=attention.tolist(), cell_features=cells.tolist(),
    )
    assert derive_visual_word(record, codebook) == 2


@pytest.mark.parametrize("mode", ["delta", "blob", "uniform"])
def test_planted_records_get_planted_word(small_spec, mode):
    spec = small_spec.model_copy(update={"attention_mode": mode, "record_count": 120})
    result = generate(spec)
    crop = CropConfig(tau=0.3)
    templates = {tuple(b.question_template): b.visual_word for b in spec.biases}
    checked = 0
    for record in result.records:
        planted = templates.get(tuple(tokenize_question(record.question)))
        if planted is not None:
            assert derive_visual_word(record, result.codebook, crop) == planted
            checked += 1
    assert checked > 0


def test_blob_ground_truth_is_exact(small_spec):
    result = generate(small_spec.model_copy(update={"attention_mode": "blob"}))
    grass = result.ground_truth[0]
    assert grass.confidence == 1
    assert grass.support == grass.language_support


# ============================================
# GROUND TRUTH FILE
# ============================================

def test_ground_truth_file(tmp_path):
    result = generate(_single_bias_spec())
    text = format_ground_truth(result.ground_truth)
    lines = text.splitlines()
    assert lines[0] == "# antecedent\tconsequent\tsupport\tantecedent_count\tconfidence"
    assert lines[1] == "color grass is the what v:0\tgreen\t100\t100\t1.000000"

    path = tmp_path / "truth.tsv"
    write_ground_truth(path, result.ground_truth)
    assert path.read_text(encoding="utf-8") == text


def test_fire_rate_realized_over_many_records():
    spec = _single_bias_spec(
        biases=[PlantedBias(question_template=["what", "sport", "is", "he", "playing"], visual_word=1,
                            answer="tennis", fire_rate=0.8)],
        noise_answers=["baseball", "soccer"],
        record_count=10000,
        grid_size=3,
    )
    (truth,) = generate(spec).ground_truth
    assert truth.antecedent_count == 10000
    assert truth.confidence == Fraction(truth.support, 10000)
    assert abs(float(truth.confidence) - 0.8) < 0.03

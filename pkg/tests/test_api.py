"""
Query service tests over a small rule dump
"""

import pytest
from fastapi.testclient import TestClient

from biasminer.core.exceptions import StorageError
from biasminer.main import create_app
from biasminer.models.mining import RuleConfig, SupportThreshold
from biasminer.services.miner import build_bitmap_index, mine_frequent
from biasminer.services.report import TABLE_HEADER
from biasminer.services.rules import causal_filter, generate_rules, save_rules
from biasminer.services.vocab_db import save_db
from tests.conftest import make_db


@pytest.fixture
def files(tmp_path):
    db = make_db(
        [["what", "sport", "is", "he", "playing", "v:1", "tennis*"]] * 3
        + [["what", "sport", "is", "he", "playing", "v:2", "baseball*"]]
        + [["what", "color", "is", "the", "grass", "v:0", "green*"]] * 2
    )
    db.vocabulary.freeze()
    index = build_bitmap_index(db)
    config = RuleConfig(min_support=SupportThreshold.absolute(1), min_confidence=0.2)
    rules = causal_filter(generate_rules(mine_frequent(index, config.min_support), index, config), db.vocabulary)

    db_path, rules_path = tmp_path / "db.tsv", tmp_path / "rules.jsonl"
    save_db(db, db_path)
    save_rules(rules, db.vocabulary, rules_path)
    return {"db": str(db_path), "rules": str(rules_path), "count": len(rules)}


@pytest.fixture
def client(files):
    with TestClient(create_app(rules_path=files["rules"], db_path=files["db"])) as client:
        yield client


def test_health(client, files):
    response = client.get("/health")
    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "healthy"
    assert body["rules"] == files["count"]
    assert body["transactions"] == 6
    assert body["vocabulary"]["visual"] == 3
    assert body["provenance"]["causal_filter"] is True


def test_query_ranks_rules(client):
    response = client.post("/api/query", json={"terms": "what sport"})
    assert response.status_code == 200
    body = response.json()
    assert body["success"] is True
    assert len(body["rules"]) == min(body["total"], 20)
    top = body["rules"][0]
    assert top["consequent"] == ["tennis*"]
    assert top["confidence"] == 1.0
    assert top["confidence_num"] == top["support"]
    confidences = [rule["confidence"] for rule in body["rules"]]
    assert confidences == sorted(confidences, reverse=True)


def test_query_limit(client):
    body = client.post("/api/query", json={"terms": "what", "limit": 2}).json()
    assert len(body["rules"]) == 2
    assert body["total"] > 2


def test_query_unknown_term(client):
    body = client.post("/api/query", json={"terms": "zebra"}).json()
    assert body["total"] == 0
    assert body["rules"] == []


def test_query_validation_error(client):
    response = client.post("/api/query", json={"terms": ""})
    assert response.status_code == 422
    body = response.json()
    assert body["success"] is False
    assert body["error"]["code"] == 422
    assert body["error"]["details"]


def test_rules_table(client, files):
    response = client.get("/api/rules")
    assert response.status_code == 200
    lines = response.text.splitlines()
    assert lines[0] == TABLE_HEADER
    assert len(lines) == files["count"] + 1


def test_rules_structured(client):
    response = client.get("/api/rules", params={"format": "structured"})
    assert response.text.startswith('{"provenance":')


def test_rules_by_type(client):
    text = client.get("/api/rules", params={"by_type": "true", "limit": 1}).text
    assert "## what sport" in text
    assert "## what color" in text


def test_unknown_format_is_bad_request(client):
    response = client.get("/api/rules", params={"format": "html"})
    assert response.status_code == 400
    assert response.json() == {
        "success": False,
        "error": {"code": "INVALID_FORMAT", "message": response.json()["error"]["message"]},
    }


def test_not_found_envelope(client):
    response = client.get("/nope")
    assert response.status_code == 404
    assert response.json()["success"] is False
    assert response.json()["error"]["code"] == 404


def test_not_loaded_without_startup(files):
    client = TestClient(create_app(rules_path=files["rules"], db_path=files["db"]))
    assert client.get("/health").json()["status"] == "loading"
    assert client.post("/api/query", json={"terms": "what"}).status_code == 503


def test_missing_files_fail_startup(tmp_path):
    app = create_app(rules_path=str(tmp_path / "missing.jsonl"), db_path=str(tmp_path / "missing.tsv"))
    with pytest.raises(StorageError):
        with TestClient(app):
            pass

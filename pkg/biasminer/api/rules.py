"""
Rule Query API
Read-only endpoints over a loaded rule dump and its database
"""

from dataclasses import dataclass
from typing import Optional
import logging

from fastapi import APIRouter, Depends, HTTPException, Query, Request
from fastapi.responses import PlainTextResponse

from biasminer.models.query import QueryRequest, QueryResponse, RuleOut
from biasminer.services.report import emit_report
from biasminer.services.rules import RuleSet, load_rules, query_rules, rule_to_record
from biasminer.services.vocab_db import TransactionDB, load_db

logger = logging.getLogger(__name__)

router = APIRouter()


@dataclass(frozen=True)
class RuleStore:
    """Database and rules loaded once at startup"""
    db: TransactionDB
    rules: RuleSet


def load_store(rules_path: str, db_path: str) -> RuleStore:
    db = load_db(db_path)
    rules = load_rules(rules_path, db.vocabulary)
    logger.info(f"📚 Loaded {len(rules)} rules over {len(db)} transactions")
    return RuleStore(db=db, rules=rules)


def get_store_or_none(app) -> Optional[RuleStore]:
    return getattr(app.state, "store", None)


def get_store(request: Request) -> RuleStore:
    store = get_store_or_none(request.app)
    if store is None:
        raise HTTPException(status_code=503, detail="Rules are not loaded")
    return store


@router.post("/query", response_model=QueryResponse)
async def query(payload: QueryRequest, store: RuleStore = Depends(get_store)):
    """
    Rules whose antecedent contains every query term, ranked by confidence
    """
    matches = query_rules(store.rules, store.db.vocabulary, payload.terms)
    rules = [RuleOut(**rule_to_record(rule, store.db.vocabulary)) for rule in matches[:payload.limit]]
    logger.debug(f"Query {payload.terms!r}: {len(matches)} matches")
    return QueryResponse(terms=payload.terms, total=len(matches), rules=rules)


@router.get("/rules", response_class=PlainTextResponse)
async def list_rules(
    format: str = Query("table", description="table or structured"),
    by_type: bool = Query(False, description="Table sections per question type"),
    limit: Optional[int] = Query(None, ge=1),
    store: RuleStore = Depends(get_store),
):
    """Rule report as plain text"""
    return emit_report(store.rules, store.db.vocabulary, format=format, by_type=by_type, limit=limit)

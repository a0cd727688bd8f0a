"""
biasminer - Query Service Entry Point
FastAPI app serving mined bias rules
"""

from contextlib import asynccontextmanager
from typing import Optional
import logging

from fastapi import FastAPI
from fastapi.exceptions import RequestValidationError
from starlette.exceptions import HTTPException as StarletteHTTPException

from biasminer.api import rules
from biasminer.core.config import settings
from biasminer.core.exceptions import BiasMinerError
from biasminer.middleware.error_handler import (
    biasminer_exception_handler,
    general_exception_handler,
    http_exception_handler,
    validation_exception_handler,
)
from biasminer.models.query import HealthResponse
from biasminer.utils.logger import setup_logger

logger = logging.getLogger(__name__)


def create_app(rules_path: Optional[str] = None, db_path: Optional[str] = None) -> FastAPI:
    """
    Build the query service over one rule dump and its database

    Files are loaded in the lifespan startup, so a bad path fails the start.
    """
    rules_path = rules_path or settings.RULES_PATH
    db_path = db_path or settings.DB_PATH

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        setup_logger("biasminer")
        logger.info("=" * 70)
        logger.info("🚀 STARTING BIASMINER QUERY SERVICE")
        logger.info("=" * 70)
        logger.info(f"📌 Version  : {settings.APP_VERSION}")
        logger.info(f"📜 Rules    : {rules_path}")
        logger.info(f"🗄️  Database : {db_path}")
        logger.info("=" * 70)

        app.state.store = rules.load_store(rules_path, db_path)

        logger.info("✅ QUERY SERVICE READY")
        yield
        app.state.store = None
        logger.info("👋 Query service stopped")

    app = FastAPI(
        title=settings.APP_NAME,
        version=settings.APP_VERSION,
        description="""
    ## biasminer - Rule Query API

    Browse association rules mined from (question, visual word, answer) transactions.

    ### Endpoints:
    - `POST /api/query` ranked rules containing the query words
    - `GET /api/rules` full report (table or structured)
    """,
        lifespan=lifespan,
    )

    app.add_exception_handler(BiasMinerError, biasminer_exception_handler)
    app.add_exception_handler(StarletteHTTPException, http_exception_handler)
    app.add_exception_handler(RequestValidationError, validation_exception_handler)
    app.add_exception_handler(Exception, general_exception_handler)

    @app.get("/health", response_model=HealthResponse, tags=["Health"])
    async def health():
        store = rules.get_store_or_none(app)
        if store is None:
            return HealthResponse(status="loading", rules=0, transactions=0, vocabulary={})
        return HealthResponse(
            status="healthy",
            rules=len(store.rules),
            transactions=len(store.db),
            vocabulary=store.db.item_counts(),
            provenance=dict(store.rules.provenance),
        )

    app.include_router(rules.router, prefix="/api", tags=["Rules"])
    return app


app = create_app()


if __name__ == "__main__":
    import uvicorn

    uvicorn.run("biasminer.main:app", host=settings.HOST, port=settings.PORT, reload=settings.DEBUG)

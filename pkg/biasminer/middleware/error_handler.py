"""
Global Error Handler Middleware
Map toolkit and HTTP errors to the JSON error envelope
"""

from fastapi import Request, status
from fastapi.responses import JSONResponse
from fastapi.exceptions import RequestValidationError
from starlette.exceptions import HTTPException as StarletteHTTPException
import logging

from biasminer.core.exceptions import BiasMinerError, ConfigError, DataError

logger = logging.getLogger(__name__)


def _envelope(status_code: int, code, message: str, **extra) -> JSONResponse:
    error = {"code": code, "message": message}
    error.update(extra)
    return JSONResponse(status_code=status_code, content={"success": False, "error": error})


async def biasminer_exception_handler(request: Request, exc: BiasMinerError):
    """
    Handle toolkit errors: bad input is the caller's fault, anything else is ours
    """
    if isinstance(exc, (DataError, ConfigError)):
        logger.warning(f"{exc.error_code}: {exc.message} | Path: {request.url.path}")
        return _envelope(status.HTTP_400_BAD_REQUEST, exc.error_code, exc.message)

    logger.error(f"{exc.error_code}: {exc.message} | Path: {request.url.path}")
    return _envelope(status.HTTP_500_INTERNAL_SERVER_ERROR, exc.error_code, exc.message)


async def http_exception_handler(request: Request, exc: StarletteHTTPException):
    logger.warning(f"HTTP {exc.status_code}: {exc.detail} | Path: {request.url.path}")
    return _envelope(exc.status_code, exc.status_code, str(exc.detail))


async def validation_exception_handler(request: Request, exc: RequestValidationError):
    """
    Handle request validation errors
    """
    logger.warning(f"Validation error: {exc.errors()} | Path: {request.url.path}")
    return _envelope(
        status.HTTP_422_UNPROCESSABLE_ENTITY,
        422,
        "Validation error",
        details=[{"loc": list(err.get("loc", ())), "msg": err.get("msg", "")} for err in exc.errors()],
    )


async def general_exception_handler(request: Request, exc: Exception):
    logger.error(f"Unhandled error: {type(exc).__name__}: {str(exc)} | Path: {request.url.path}", exc_info=True)
    return _envelope(status.HTTP_500_INTERNAL_SERVER_ERROR, 500, "Internal server error")

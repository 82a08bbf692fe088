"""Health and system endpoints"""
from datetime import datetime

import numpy as np
import scipy
from fastapi import APIRouter

from ..core.config import settings
from ..schemas.schemas import HealthStatus

router = APIRouter(prefix="/api/health", tags=["health"])


@router.get("/status", response_model=HealthStatus)
async def health_status():
    """Get system health status"""
    return HealthStatus(
        status="healthy",
        timestamp=datetime.utcnow(),
        app_name=settings.APP_NAME,
        version=settings.APP_VERSION,
        numpy_version=np.__version__,
        scipy_version=scipy.__version__,
        max_sites=settings.MAX_SITES,
        dense_max_sites=settings.DENSE_MAX_SITES,
        message=f"Exact simulation up to {settings.MAX_SITES} sites",
    )


@router.get("/ready")
async def readiness_check():
    """Readiness check for container orchestration"""
    return {"ready": True}

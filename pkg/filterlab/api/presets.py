"""Experiment preset catalog endpoints."""
from fastapi import APIRouter, HTTPException

from ..core.exceptions import UnknownPresetError
from ..core.preset_catalog import list_presets, resolve_preset

router = APIRouter(prefix="/api/presets", tags=["presets"])


@router.get("")
async def get_presets():
    return {"presets": list_presets()}


@router.get("/{name}")
async def get_preset(name: str):
    try:
        config = resolve_preset(name)
    except UnknownPresetError as exc:
        raise HTTPException(status_code=404, detail=str(exc))
    return {"name": name, "config": config.model_dump(mode="json")}

"""Experiment API endpoints"""
import structlog
from fastapi import APIRouter, BackgroundTasks, HTTPException, Query

from ..core.exceptions import InvalidConfigError, UnknownPresetError
from ..core.preset_catalog import resolve_preset
from ..schemas.schemas import ExperimentRunRequest, ExperimentRunResponse
from ..services.config_loader import parse_config
from ..services.experiment_service import run_experiment
from ..services.filter_service import variance_theory
from ..services.tfi_model import theta_energy_density

router = APIRouter(prefix="/api/experiments", tags=["experiments"])
logger = structlog.get_logger(__name__)


@router.post("/run", response_model=ExperimentRunResponse, status_code=202)
async def start_experiment(request: ExperimentRunRequest, background_tasks: BackgroundTasks):
    """Validate a config and run it in the background"""
    try:
        if request.preset is not None:
            config = resolve_preset(request.preset, request.overrides)
        else:
            config = parse_config(request.config, request.overrides, source="request")
    except UnknownPresetError as exc:
        raise HTTPException(status_code=404, detail=str(exc))
    except InvalidConfigError as exc:
        raise HTTPException(status_code=400, detail=str(exc))

    def run():
        summary = run_experiment(config)
        logger.info("Background experiment done", **summary.as_dict())

    background_tasks.add_task(run)
    return ExperimentRunResponse(
        status="accepted",
        kind=config.kind,
        output_path=config.output.path,
        message="Experiment started in background",
    )


@router.get("/theory/variance")
async def theory_variance(delta: float = Query(..., gt=0), sigma0_sq: float = Query(..., ge=0)):
    """Filtered variance of a Gaussian energy distribution"""
    return {"delta": delta, "sigma0_sq": sigma0_sq, "sigma_L_sq": variance_theory(delta, sigma0_sq)}


@router.get("/theory/theta-energy")
async def theory_theta_energy(theta: float, g: float = -1.05, h: float = 0.5):
    """Thermodynamic energy density E/JN of the uniform theta state"""
    return {"theta": theta, "g": g, "h": h, "energy_density": theta_energy_density(theta, g, h)}

"""Experiment preset catalog reproducing the benchmark figures at desk scale."""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from ..schemas.schemas import ExperimentConfig
from .exceptions import InvalidConfigError, UnknownPresetError


def _log_grid(lo: float, hi: float, count: int) -> List[float]:
    ratio = (hi / lo) ** (1.0 / (count - 1))
    return [lo * ratio ** k for k in range(count)]


PI_6 = math.pi / 6


@dataclass(frozen=True)
class PresetDefinition:
    key: str
    label: str
    description: str
    config: Dict[str, Any]


PRESETS: Dict[str, PresetDefinition] = {
    "fig2": PresetDefinition(
        key="fig2",
        label="AFM variance sweep",
        description="Filtered variance of the AFM state against delta",
        config={
            "experiment": {"kind": "variance_sweep", "sizes": [8, 10, 12]},
            "state": {"afm": True},
            "filter": {"deltas": _log_grid(0.05, 5.0, 13)},
            "output": {"path": "results/fig2.csv"},
        },
    ),
    "fig3": PresetDefinition(
        key="fig3",
        label="Theta=pi/6 variance sweep",
        description="Filtered variance of the theta=pi/6 product state against delta",
        config={
            "experiment": {"kind": "variance_sweep", "sizes": [10, 12]},
            "state": {"afm": False, "thetas": [PI_6]},
            "filter": {"deltas": _log_grid(0.05, 5.0, 13)},
            "output": {"path": "results/fig3.csv"},
        },
    ),
    "fig4": PresetDefinition(
        key="fig4",
        label="AFM adiabatic ladder",
        description="Fidelity and parent energy after adiabatic evolution, delta=0.1, tau=0.1",
        config={
            "experiment": {"kind": "adiabatic_sweep", "sizes": [6, 8, 10]},
            "state": {"afm": True},
            "filter": {"deltas": [0.1]},
            "schedule": {"tau": 0.1, "steps": [250, 500, 1000, 2000]},
            "output": {"path": "results/fig4.csv"},
        },
    ),
    "fig5": PresetDefinition(
        key="fig5",
        label="Theta=pi/6 adiabatic ladder",
        description="Adiabatic evolution of the theta=pi/6 product state, delta=0.1, tau=0.1",
        config={
            "experiment": {"kind": "adiabatic_sweep", "sizes": [6, 8, 10]},
            "state": {"afm": False, "thetas": [PI_6]},
            "filter": {"deltas": [0.1]},
            "schedule": {"tau": 0.1, "steps": [250, 500, 1000, 2000]},
            "output": {"path": "results/fig5.csv"},
        },
    ),
    "fig6": PresetDefinition(
        key="fig6",
        label="Theta energy curve",
        description="Energy density of uniform product states over theta in [0, pi/2]",
        config={
            "experiment": {
                "kind": "theta_curve",
                "sizes": [10],
                "thetas": [k * math.pi / 64 for k in range(33)],
            },
            "output": {"path": "results/fig6.csv"},
        },
    ),
    "fig8": PresetDefinition(
        key="fig8",
        label="Entanglement growth",
        description="Half-chain entropy of filtered theta=pi/6 states against delta^-1",
        config={
            "experiment": {"kind": "entropy_sweep", "sizes": [8, 10, 12]},
            "state": {"afm": False, "thetas": [PI_6]},
            "filter": {"delta_inverses": [0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 7.5, 10.0]},
            "output": {"path": "results/fig8.csv"},
        },
    ),
    "gap": PresetDefinition(
        key="gap",
        label="Gap audit",
        description="Ground-state identity and gap certificate on small chains",
        config={
            "experiment": {"kind": "gap_audit", "sizes": [4, 6, 8, 10]},
            "state": {"afm": True, "thetas": [PI_6]},
            "filter": {"deltas": [0.1, 0.5, 1.0]},
            "output": {"path": "results/gap.csv"},
        },
    ),
    "depth": PresetDefinition(
        key="depth",
        label="Trotter depth audit",
        description="Per-step layered circuit depth over N for delta=0.1, tau=0.1",
        config={
            "experiment": {"kind": "depth_audit", "sizes": [6, 8, 10, 12, 14]},
            "state": {"afm": True},
            "filter": {"deltas": [0.1]},
            "schedule": {"tau": 0.1, "steps": [1, 100]},
            "output": {"path": "results/depth.csv"},
        },
    ),
}


def list_presets() -> List[Dict[str, object]]:
    return [
        {"key": definition.key, "label": definition.label, "description": definition.description}
        for definition in PRESETS.values()
    ]


def preset_payload(name: str) -> Dict[str, Any]:
    definition = PRESETS.get(name)
    if not definition:
        raise UnknownPresetError(f"Unknown preset: {name}")
    return copy.deepcopy(definition.config)


def resolve_preset(name: str, overrides: Optional[Dict[str, Dict[str, Any]]] = None) -> ExperimentConfig:
    """Validated ExperimentConfig for a preset, with per-section overrides merged in"""
    payload = preset_payload(name)
    for section, values in (overrides or {}).items():
        payload.setdefault(section, {}).update(values)
    try:
        return ExperimentConfig.model_validate(payload)
    except ValidationError as exc:
        raise InvalidConfigError(f"Preset {name} invalid after overrides: {exc}") from exc

"""Experiment configuration files: YAML sections validated into ExperimentConfig"""
import logging
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from pydantic import ValidationError

from ..core.exceptions import InvalidConfigError
from ..schemas.schemas import ExperimentConfig

logger = logging.getLogger(__name__)

SECTIONS = ("experiment", "model", "state", "filter", "schedule", "output")


def cli_overrides(out: Optional[str] = None, threads: Optional[int] = None,
                  seed: Optional[int] = None) -> Dict[str, Dict[str, Any]]:
    """Section overrides for the --out, --threads and --seed flags"""
    overrides: Dict[str, Dict[str, Any]] = {}
    if out is not None:
        overrides.setdefault("output", {})["path"] = out
    if threads is not None:
        overrides.setdefault("experiment", {})["threads"] = threads
    if seed is not None:
        overrides.setdefault("experiment", {})["seed"] = seed
    return overrides


def parse_config(payload: Any, overrides: Optional[Dict[str, Dict[str, Any]]] = None,
                 source: str = "<config>") -> ExperimentConfig:
    if not isinstance(payload, dict):
        raise InvalidConfigError(f"{source}: top level must be a mapping of sections")
    unknown = sorted(set(payload) - set(SECTIONS))
    if unknown:
        raise InvalidConfigError(f"{source}: unknown section(s) {', '.join(unknown)}")
    for name, section in payload.items():
        if section is not None and not isinstance(section, dict):
            raise InvalidConfigError(f"{source}: section '{name}' must be a key/value mapping")

    merged = {name: dict(section or {}) for name, section in payload.items()}
    for name, values in (overrides or {}).items():
        merged.setdefault(name, {}).update(values)
    try:
        return ExperimentConfig.model_validate(merged)
    except ValidationError as exc:
        raise InvalidConfigError(f"{source}: {exc}") from exc


def load_config(path, overrides: Optional[Dict[str, Dict[str, Any]]] = None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidConfigError(f"Cannot read config {path}: {exc}") from exc
    try:
        payload = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise InvalidConfigError(f"{path}: invalid YAML: {exc}") from exc
    config = parse_config(payload or {}, overrides, source=str(path))
    logger.info(f"Loaded {config.kind.value} config from {path}")
    return config


def dump_config(config: ExperimentConfig) -> str:
    """YAML text that load_config reads back to an equal config"""
    return yaml.safe_dump(config.model_dump(mode="json"), sort_keys=False)

"""
Run configuration - YAML files plus key=value overrides, validated with pydantic
"""

import os
from typing import Any, Dict, List, Optional, Sequence, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from configs.system_config import (
    all_csi_modes,
    all_schemes,
    engine_config,
    output_config,
    param_aliases,
)

from .engine import resolve_axis
from .errors import ConfigurationError, InvalidArgumentError
from .estimation import CsiMode
from .geometry import SystemParams
from .receivers import ReceiverScheme

ScalarValue = Union[int, float, str]


class SweepSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    axis: str
    values: List[ScalarValue] = Field(min_length=1)

    @field_validator("axis")
    @classmethod
    def _known_axis(cls, value: str) -> str:
        try:
            return resolve_axis(value)[0]
        except InvalidArgumentError as e:
            raise ValueError(str(e)) from None


class RunConfig(BaseModel):
    """Everything one invocation needs: system, schemes, CSI modes, sweep, output"""

    model_config = ConfigDict(extra="forbid")

    system: SystemParams = Field(default_factory=SystemParams)
    schemes: List[str] = Field(default_factory=lambda: list(all_schemes), min_length=1)
    csi_modes: List[str] = Field(default_factory=lambda: list(all_csi_modes), min_length=1)
    sweep: Optional[SweepSpec] = None
    output_dir: str = Field(
        default_factory=lambda: os.getenv("CFSIM_OUTPUT_DIR", output_config["default_dir"])
    )
    formats: List[str] = Field(default_factory=lambda: list(output_config["formats"]), min_length=1)
    n_jobs: int = engine_config["n_jobs"]

    @field_validator("schemes")
    @classmethod
    def _canonical_schemes(cls, value: List[str]) -> List[str]:
        try:
            return [ReceiverScheme.parse(s).label for s in value]
        except InvalidArgumentError as e:
            raise ValueError(str(e)) from None

    @field_validator("csi_modes")
    @classmethod
    def _canonical_modes(cls, value: List[str]) -> List[str]:
        try:
            return [CsiMode.parse(m).value for m in value]
        except InvalidArgumentError as e:
            raise ValueError(str(e)) from None

    @field_validator("formats")
    @classmethod
    def _known_formats(cls, value: List[str]) -> List[str]:
        unknown = [f for f in value if f not in output_config["formats"]]
        if unknown:
            raise ValueError(f"unknown output formats {unknown}; expected {output_config['formats']}")
        return value

    @field_validator("n_jobs")
    @classmethod
    def _jobs_nonzero(cls, value: int) -> int:
        if value == 0:
            raise ValueError("n_jobs must be non-zero (negative counts back from the CPU count)")
        return value


_SYSTEM_FIELDS = set(SystemParams.model_fields)


def _canonical_key(key: str) -> List[str]:
    """Path into the nested config dict for a dotted key, field name or alias"""
    parts = key.strip().split(".")
    head = param_aliases.get(parts[0], parts[0])
    if len(parts) == 1 and head in _SYSTEM_FIELDS:
        return ["system", head]
    if parts[0] == "system" and len(parts) == 2:
        return ["system", param_aliases.get(parts[1], parts[1])]
    return [head] + parts[1:]


def _lift_system_keys(data: Dict[str, Any]) -> Dict[str, Any]:
    """Top-level SystemParams fields and aliases move under `system`"""
    lifted: Dict[str, Any] = {}
    system = data.get("system") or {}
    if not isinstance(system, dict):
        raise ConfigurationError("system", "must be a mapping")
    system = dict(system)
    for key, value in data.items():
        if key == "system":
            continue
        path = _canonical_key(str(key))
        if path[0] == "system":
            system[path[1]] = value
        else:
            lifted[key] = value
    lifted["system"] = {param_aliases.get(k, k): v for k, v in system.items()}
    return lifted


def parse_override(text: str) -> tuple:
    """'Q=15' -> (['system', 'max_cluster_size'], 15); values are YAML scalars"""
    if "=" not in text:
        raise ConfigurationError(text, "override must look like key=value")
    key, raw = text.split("=", 1)
    if not key.strip():
        raise ConfigurationError(text, "override key is empty")
    try:
        value = yaml.safe_load(raw) if raw.strip() else None
    except yaml.YAMLError as e:
        raise ConfigurationError(key.strip(), f"cannot parse value {raw!r}: {e}") from None
    return _canonical_key(key), value


def _set_path(data: Dict[str, Any], path: List[str], value: Any) -> None:
    node = data
    for part in path[:-1]:
        child = node.get(part)
        if child is None:
            child = {}
            node[part] = child
        if not isinstance(child, dict):
            raise ConfigurationError(".".join(path), f"{part} is not a section")
        node = child
    node[path[-1]] = value


def _key_path(loc: Sequence) -> str:
    return ".".join(str(part) for part in loc)


def parse_config(text: Optional[str] = None, overrides: Sequence[str] = ()) -> RunConfig:
    """File values first, then overrides key by key, then full validation"""
    try:
        loaded = yaml.safe_load(text) if text else None
    except yaml.YAMLError as e:
        raise ConfigurationError("", f"config is not valid YAML: {e}") from None
    if loaded is None:
        loaded = {}
    if not isinstance(loaded, dict):
        raise ConfigurationError("", "config must be a mapping at top level")

    data = _lift_system_keys(loaded)
    for item in overrides:
        path, value = parse_override(item)
        _set_path(data, path, value)

    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigurationError(_key_path(first["loc"]), first["msg"]) from None

    if config.sweep is not None:
        fieldname = resolve_axis(config.sweep.axis)[1]
        for i, value in enumerate(config.sweep.values):
            try:
                config.system.with_value(fieldname, value)
            except ValidationError as e:
                raise ConfigurationError(f"sweep.values.{i}", e.errors()[0]["msg"]) from None
    return config


def serialize_config(config: RunConfig) -> str:
    """YAML text that parse_config maps back to an equal RunConfig"""
    return yaml.safe_dump(config.model_dump(mode="json"), sort_keys=True)


def load_config_file(path: Optional[str], overrides: Sequence[str] = ()) -> RunConfig:
    text = None
    if path:
        try:
            with open(path, "r", encoding="utf-8") as f:
                text = f.read()
        except OSError as e:
            raise ConfigurationError("", f"cannot read config {path}: {e}") from None
    return parse_config(text, overrides)


def figure_overrides(path: Optional[str] = None, overrides: Sequence[str] = ()) -> Dict[str, Any]:
    """SystemParams fields that the config file or the overrides set explicitly"""
    if not path and not overrides:
        return {}
    config = load_config_file(path, overrides)
    return config.system.model_dump(exclude_unset=True)

"""
Geometry - torus layouts, wrapped distances, pathloss and SNR calibration
"""

import math
import re
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator

from configs.system_config import pathloss_config, system_defaults

from .errors import InvalidArgumentError

_PI_EXPRESSION = re.compile(r"^\s*(?P<coef>\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(?P<den>\d+(?:\.\d+)?))?\s*$")


def parse_angle(value: Union[float, int, str]) -> float:
    """Accept radians or strings like 'pi/16', '2*pi', '0.5pi'"""
    if isinstance(value, str):
        match = _PI_EXPRESSION.match(value.lower())
        if not match:
            return float(value)
        coef = float(match.group("coef")) if match.group("coef") else 1.0
        den = float(match.group("den")) if match.group("den") else 1.0
        return coef * math.pi / den
    return float(value)


class SystemParams(BaseModel):
    """All scenario constants of one simulated system"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    area_side: float = Field(system_defaults["area_side"], gt=0)
    num_rrh: int = Field(system_defaults["num_rrh"], ge=1)
    num_ue: int = Field(system_defaults["num_ue"], ge=1)
    antennas_per_rrh: int = Field(system_defaults["antennas_per_rrh"], ge=1)
    coherence_block: int = Field(system_defaults["coherence_block"], ge=1)
    pilot_dim: int = Field(system_defaults["pilot_dim"], ge=1)
    angular_spread: float = system_defaults["angular_spread"]
    qos_threshold: float = Field(system_defaults["qos_threshold"], ge=0)
    max_cluster_size: int = Field(system_defaults["max_cluster_size"], ge=1)
    snr: Optional[float] = system_defaults["snr"]
    num_layouts: int = Field(system_defaults["num_layouts"], ge=1)
    num_fading_draws: int = Field(system_defaults["num_fading_draws"], ge=1)
    master_seed: int = Field(system_defaults["master_seed"], ge=0, lt=2**64)
    shadowing_std_db: float = Field(system_defaults["shadowing_std_db"], ge=0)
    rate_unit: str = system_defaults["rate_unit"]

    @field_validator("pilot_dim")
    @classmethod
    def _pilot_fits_block(cls, value: int, info: ValidationInfo) -> int:
        block = info.data.get("coherence_block")
        if block is not None and value > block:
            raise ValueError(f"pilot_dim ({value}) must not exceed coherence_block ({block})")
        return value

    @field_validator("angular_spread", mode="before")
    @classmethod
    def _parse_spread(cls, value):
        return parse_angle(value)

    @field_validator("angular_spread")
    @classmethod
    def _spread_range(cls, value: float) -> float:
        if not (0.0 < value <= 2.0 * math.pi + 1e-12):
            raise ValueError("angular_spread must lie in (0, 2*pi]")
        return min(value, 2.0 * math.pi)

    @field_validator("snr")
    @classmethod
    def _snr_positive(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and not (value > 0 and math.isfinite(value)):
            raise ValueError("snr must be a positive finite ratio")
        return value

    @field_validator("rate_unit")
    @classmethod
    def _known_unit(cls, value: str) -> str:
        if value not in ("bits", "nats"):
            raise ValueError("rate_unit must be 'bits' or 'nats'")
        return value

    @property
    def area(self) -> float:
        return self.area_side ** 2

    @property
    def system_snr(self) -> float:
        """Configured SNR, or the geometry-calibrated one when unset"""
        if self.snr is not None:
            return self.snr
        return calibrate_snr(self)

    @property
    def qos_gain_threshold(self) -> float:
        """Minimum beta for an edge: eta / (M * SNR)"""
        return self.qos_threshold / (self.antennas_per_rrh * self.system_snr)

    def with_value(self, field: str, value) -> "SystemParams":
        """Copy with one field replaced, re-running validation"""
        data = self.model_dump()
        data[field] = value
        return SystemParams.model_validate(data)


@dataclass
class Layout:
    rrh_positions: np.ndarray  # (L, 2) meters
    ue_positions: np.ndarray  # (K, 2) meters
    side: float

    @property
    def num_rrh(self) -> int:
        return self.rrh_positions.shape[0]

    @property
    def num_ue(self) -> int:
        return self.ue_positions.shape[0]


@dataclass
class LsfcMatrix:
    beta: np.ndarray  # (L, K) linear gains

    def __post_init__(self):
        if not np.all(np.isfinite(self.beta)) or np.any(self.beta <= 0):
            raise InvalidArgumentError("LSFC entries must be strictly positive and finite")

    @property
    def shape(self):
        return self.beta.shape


class Direction(NamedTuple):
    angle: float  # radians in [0, 2*pi)
    degenerate: bool  # True when the two points coincide on the torus


def _as_point(p: Sequence[float]) -> np.ndarray:
    point = np.asarray(p, dtype=float)
    if point.shape != (2,) or not np.all(np.isfinite(point)):
        raise InvalidArgumentError(f"expected a finite (x, y) position, got {p!r}")
    return point


def wrapped_displacement(p: np.ndarray, q: np.ndarray, side: float) -> np.ndarray:
    """Shortest displacement from p to q on the torus, components in [-side/2, side/2)"""
    delta = np.asarray(q, dtype=float) - np.asarray(p, dtype=float)
    return np.mod(delta + side / 2.0, side) - side / 2.0


def torus_distance(p: Sequence[float], q: Sequence[float], side: float) -> float:
    if not (side > 0 and math.isfinite(side)):
        raise InvalidArgumentError("side must be positive and finite")
    dx, dy = wrapped_displacement(_as_point(p), _as_point(q), side)
    return float(math.hypot(dx, dy))


def torus_direction(p: Sequence[float], q: Sequence[float], side: float) -> Direction:
    """Angle of the shortest-wrap vector from p to q; coincident points give angle 0"""
    dx, dy = wrapped_displacement(_as_point(p), _as_point(q), side)
    if dx == 0.0 and dy == 0.0:
        return Direction(0.0, True)
    return Direction(float(np.mod(math.atan2(dy, dx), 2.0 * math.pi)), False)


def pathloss_db(
    d,
    intercept_db: float = pathloss_config["intercept_db"],
    slope_db: float = pathloss_config["slope_db"],
):
    """UMi fit PL(d) = intercept - slope * log10(d / 1 m), unclamped"""
    return intercept_db - slope_db * np.log10(d)


def lsfc(
    d,
    intercept_db: float = pathloss_config["intercept_db"],
    slope_db: float = pathloss_config["slope_db"],
    min_distance: float = pathloss_config["min_distance"],
):
    """Linear large-scale fading gain at distance d (scalar or array)"""
    clamped = np.maximum(np.asarray(d, dtype=float), min_distance)
    gain = 10.0 ** (pathloss_db(clamped, intercept_db, slope_db) / 10.0)
    return float(gain) if np.ndim(gain) == 0 else gain


def calibrate_snr(params: SystemParams) -> float:
    """SNR such that beta(3 d_L) * M * SNR = 1, d_L = 2 sqrt(A / (pi L))"""
    d_l = 2.0 * math.sqrt(params.area / (math.pi * params.num_rrh))
    reference = lsfc(pathloss_config["calibration_distance_factor"] * d_l)
    return 1.0 / (params.antennas_per_rrh * reference)


def generate_layout(params: SystemParams, rng: np.random.Generator) -> Layout:
    """Uniform placement on [0, side)^2; RRHs are drawn before UEs"""
    side = params.area_side
    rrh = rng.uniform(0.0, side, size=(params.num_rrh, 2))
    ue = rng.uniform(0.0, side, size=(params.num_ue, 2))
    # uniform() may round up to the upper bound
    rrh = np.where(rrh >= side, 0.0, rrh)
    ue = np.where(ue >= side, 0.0, ue)
    return Layout(rrh_positions=rrh, ue_positions=ue, side=side)


def pairwise_displacements(layout: Layout) -> np.ndarray:
    """(L, K, 2) wrapped displacement from each RRH to each UE"""
    return wrapped_displacement(
        layout.rrh_positions[:, None, :],
        layout.ue_positions[None, :, :],
        layout.side,
    )


def pairwise_distances(layout: Layout) -> np.ndarray:
    disp = pairwise_displacements(layout)
    return np.hypot(disp[..., 0], disp[..., 1])


def compute_lsfc_matrix(
    layout: Layout,
    params: SystemParams,
    rng: Optional[np.random.Generator] = None,
) -> LsfcMatrix:
    """beta[l, k] = lsfc(torus distance), optionally with log-normal shadowing"""
    beta = lsfc(pairwise_distances(layout))
    beta = np.atleast_2d(beta).reshape(layout.num_rrh, layout.num_ue)
    if params.shadowing_std_db > 0:
        if rng is None:
            raise InvalidArgumentError("shadowing requires a random stream")
        beta = beta * 10.0 ** (rng.normal(0.0, params.shadowing_std_db, size=beta.shape) / 10.0)
    return LsfcMatrix(beta=beta)

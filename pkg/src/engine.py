"""
Engine - Monte Carlo orchestration

layout -> LSFC -> association -> per fading draw {channels, pilot fields,
estimates, receivers, SINR} -> ergodic rates -> spectral efficiency.

One layout evaluates every requested (scheme, CSI mode) pair on the same
geometry, association, fading and pilot-noise draws, so comparisons between
schemes are paired. Layouts are independent work items and are reduced in
layout-index order.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from pydantic import ValidationError

from configs.system_config import engine_config

from .association import associate
from .channel import assemble_channel_state, build_subspaces
from .console import log
from .errors import InternalError, InvalidArgumentError
from .estimation import CsiMode, PilotBook, estimate_channels, pilot_fields
from .geometry import SystemParams, compute_lsfc_matrix, generate_layout
from .receivers import (
    Detector,
    ReceiverScheme,
    build_receiver_bank,
    interference_variances,
    local_vectors,
)
from .streams import derive_stream

PairKey = Tuple[str, str]  # (scheme label, CSI mode)

# Sweep axes by short name, with the SystemParams field each one drives
SWEEP_AXES = {
    "tau_p": "pilot_dim",
    "Q": "max_cluster_size",
    "delta": "angular_spread",
    "K": "num_ue",
}
_AXIS_BY_FIELD = {fieldname: axis for axis, fieldname in SWEEP_AXES.items()}
BASE_AXIS = "base"


# =============================================================================
# SINR / RATE / SE
# =============================================================================


def sinr(
    v: np.ndarray,
    H: np.ndarray,
    snr: float,
    k: int,
    active: Optional[np.ndarray] = None,
) -> float:
    """|v^H h_k|^2 / (1/SNR + sum over transmitting j != k of |v^H h_j|^2)"""
    gains = np.abs(v.conj() @ H) ** 2
    mask = np.ones(H.shape[1], dtype=bool) if active is None else np.asarray(active, dtype=bool).copy()
    mask[k] = False
    return float(gains[k] / (1.0 / snr + gains[mask].sum()))


def sinr_all(V: np.ndarray, H: np.ndarray, snr: float, active: Optional[np.ndarray] = None) -> np.ndarray:
    """SINR of every UE at once; a zero receive vector gives 0"""
    gains = np.abs(V.conj().T @ H) ** 2  # [k, j] = |v_k^H h_j|^2
    weight = np.ones(H.shape[1]) if active is None else np.asarray(active, dtype=float)
    signal = np.diag(gains).copy()
    interference = gains @ weight - signal * weight
    return signal / (1.0 / snr + np.maximum(interference, 0.0))


def ergodic_rate(samples, unit: str = "bits") -> np.ndarray:
    """Sample mean of log(1 + SINR) over the first axis; base 2 for bits, e for nats"""
    x = np.asarray(samples, dtype=float)
    if x.ndim == 0 or x.shape[0] < 1:
        raise InvalidArgumentError("ergodic_rate needs at least one sample")
    if unit == "bits":
        values = np.log2(1.0 + x)
    elif unit == "nats":
        values = np.log1p(x)
    else:
        raise InvalidArgumentError(f"unknown rate unit: {unit!r}")
    return values.mean(axis=0)


def spectral_efficiency(rate, tau_p: int, T: int):
    """(1 - tau_p / T) * R"""
    if T <= 0 or not 0 <= tau_p <= T:
        raise InvalidArgumentError(f"need 0 <= tau_p <= T, got tau_p={tau_p}, T={T}")
    return (1.0 - tau_p / T) * rate


# =============================================================================
# ONE LAYOUT
# =============================================================================


@dataclass
class TrialResult:
    scheme: str
    csi_mode: str
    layout_index: int
    sinr: np.ndarray  # (draws, K) linear
    rate: np.ndarray  # (K,) ergodic rate
    se: np.ndarray  # (K,) bit/s/Hz (nat/s/Hz in nats mode)
    outage: List[int]
    degenerate_draws: int = 0

    @property
    def sum_se(self) -> float:
        return float(self.se.sum())

    @property
    def outage_count(self) -> int:
        return len(self.outage)

    @property
    def admitted(self) -> np.ndarray:
        mask = np.ones(self.se.size, dtype=bool)
        mask[self.outage] = False
        return mask


def _normalize_pairs(
    schemes: Iterable,
    csi_modes: Iterable,
) -> Tuple[List[ReceiverScheme], List[CsiMode]]:
    parsed_schemes = [s if isinstance(s, ReceiverScheme) else ReceiverScheme.parse(s) for s in schemes]
    parsed_modes = [CsiMode.parse(m) for m in csi_modes]
    if not parsed_schemes or not parsed_modes:
        raise InvalidArgumentError("at least one scheme and one CSI mode are required")
    return parsed_schemes, parsed_modes


def simulate_layout(
    params: SystemParams,
    schemes: Sequence,
    csi_modes: Sequence,
    layout_index: int,
) -> Dict[PairKey, TrialResult]:
    """Evaluate every (scheme, CSI mode) pair on one layout with shared draws"""
    schemes, modes = _normalize_pairs(schemes, csi_modes)
    seed = params.master_seed
    M = params.antennas_per_rrh
    K = params.num_ue
    draws = params.num_fading_draws

    layout = generate_layout(params, derive_stream(seed, layout_index, "geometry"))
    shadow_rng = derive_stream(seed, layout_index, "shadowing") if params.shadowing_std_db > 0 else None
    lsfc = compute_lsfc_matrix(layout, params, shadow_rng)
    snr = params.system_snr
    graph = associate(lsfc, params, derive_stream(seed, layout_index, "association"))
    subspaces = build_subspaces(layout, params)
    sigma_sq = interference_variances(graph, lsfc, snr)
    active = graph.active

    needs_pilots = any(m is not CsiMode.IDEAL for m in modes)
    book = PilotBook.build(params.pilot_dim, snr) if needs_pilots else None
    local_detectors = {s.detector for s in schemes if s.detector is not Detector.GZF}

    samples = {(s.label, m.value): np.zeros((draws, K)) for s in schemes for m in modes}
    degenerate = {key: 0 for key in samples}

    for d in range(draws):
        state = assemble_channel_state(
            layout, lsfc, params, derive_stream(seed, layout_index, "fading", d), subspaces
        )
        fields = None
        if needs_pilots:
            fields = pilot_fields(state, graph, book, derive_stream(seed, layout_index, "pilot", d))
        for mode in modes:
            estimates = estimate_channels(mode, state, graph, book, fields)
            local = {
                det: local_vectors(det, graph, estimates, sigma_sq, snr) for det in local_detectors
            }
            for scheme in schemes:
                bank = build_receiver_bank(
                    scheme, graph, estimates, lsfc, snr, M,
                    local=local.get(scheme.detector), sigma_sq=sigma_sq,
                )
                key = (scheme.label, mode.value)
                samples[key][d] = sinr_all(bank.V, state.H, snr, active)
                degenerate[key] += len(bank.degenerate)

    results: Dict[PairKey, TrialResult] = {}
    outage = sorted(graph.outage_set)
    for key, sinr_samples in samples.items():
        rate = ergodic_rate(sinr_samples, params.rate_unit)
        rate[~active] = 0.0
        se = spectral_efficiency(rate, params.pilot_dim, params.coherence_block)
        if not np.all(np.isfinite(se)):
            raise InternalError(f"non-finite SE in layout {layout_index} for {key[0]}/{key[1]}")
        results[key] = TrialResult(
            scheme=key[0],
            csi_mode=key[1],
            layout_index=layout_index,
            sinr=sinr_samples,
            rate=rate,
            se=se,
            outage=outage,
            degenerate_draws=degenerate[key],
        )

    total_degenerate = sum(degenerate.values())
    if total_degenerate:
        log("Engine", f"layout {layout_index}: {total_degenerate} degenerate receivers recorded as rate 0")
    return results


def run_layout(params: SystemParams, scheme, csi_mode, layout_index: int) -> TrialResult:
    """Single (scheme, CSI mode) view of simulate_layout"""
    results = simulate_layout(params, [scheme], [csi_mode], layout_index)
    return next(iter(results.values()))


# =============================================================================
# SWEEPS
# =============================================================================


def resolve_axis(axis: str) -> Tuple[str, str]:
    """Return (short axis name, SystemParams field) for a short name or field name"""
    if axis in SWEEP_AXES:
        return axis, SWEEP_AXES[axis]
    if axis in _AXIS_BY_FIELD:
        return _AXIS_BY_FIELD[axis], axis
    raise InvalidArgumentError(f"unknown sweep axis {axis!r}; expected one of {sorted(SWEEP_AXES)}")


@dataclass
class SweepPoint:
    index: int
    value: Optional[float]
    params: SystemParams
    layouts: Dict[PairKey, List[TrialResult]] = field(default_factory=dict)

    def trials(self, scheme: str, csi_mode: str) -> List[TrialResult]:
        return self.layouts[(scheme, csi_mode)]

    def sum_se_per_layout(self, scheme: str, csi_mode: str) -> np.ndarray:
        return np.array([t.sum_se for t in self.trials(scheme, csi_mode)])

    def mean_sum_se(self, scheme: str, csi_mode: str) -> float:
        return float(self.sum_se_per_layout(scheme, csi_mode).mean())

    def per_ue_samples(self, scheme: str, csi_mode: str) -> Tuple[np.ndarray, np.ndarray]:
        """Pooled (ue_id, SE) of admitted UEs; ue_id = layout * K + k"""
        K = self.params.num_ue
        ids, values = [], []
        for trial in self.trials(scheme, csi_mode):
            admitted = np.flatnonzero(trial.admitted)
            ids.append(trial.layout_index * K + admitted)
            values.append(trial.se[admitted])
        return np.concatenate(ids), np.concatenate(values)

    def outage_count(self, scheme: str, csi_mode: str) -> int:
        return sum(t.outage_count for t in self.trials(scheme, csi_mode))

    def degenerate_draws(self, scheme: str, csi_mode: str) -> int:
        return sum(t.degenerate_draws for t in self.trials(scheme, csi_mode))


@dataclass
class SweepResult:
    axis: str
    values: List[Optional[float]]
    schemes: List[str]
    csi_modes: List[str]
    points: List[SweepPoint]

    @property
    def pairs(self) -> List[PairKey]:
        return [(s, m) for s in self.schemes for m in self.csi_modes]

    def mean_sum_se(self, scheme: str, csi_mode: str) -> np.ndarray:
        """Mean sum SE per sweep point"""
        return np.array([p.mean_sum_se(scheme, csi_mode) for p in self.points])


def run_sweep(
    params: SystemParams,
    axis: Optional[str],
    values: Optional[Sequence],
    schemes: Sequence,
    csi_modes: Sequence,
    n_jobs: int = engine_config["n_jobs"],
) -> SweepResult:
    """num_layouts layouts per sweep value; axis=None runs the base parameters once"""
    parsed_schemes, parsed_modes = _normalize_pairs(schemes, csi_modes)
    scheme_labels = [s.label for s in parsed_schemes]
    mode_labels = [m.value for m in parsed_modes]

    if axis is None:
        axis_name, point_params, point_values = BASE_AXIS, [params], [None]
    else:
        axis_name, fieldname = resolve_axis(axis)
        if not values:
            raise InvalidArgumentError(f"sweep over {axis_name} needs at least one value")
        point_params = []
        for value in values:
            try:
                point_params.append(params.with_value(fieldname, value))
            except ValidationError as e:
                raise InvalidArgumentError(f"invalid {axis_name} value {value!r}: {e.errors()[0]['msg']}") from None
        point_values = [getattr(p, fieldname) for p in point_params]

    tasks = [(i, layout) for i, p in enumerate(point_params) for layout in range(p.num_layouts)]
    log("Engine", f"{len(point_params)} sweep point(s), {len(tasks)} layout runs, n_jobs={n_jobs}")

    outputs = Parallel(n_jobs=n_jobs)(
        delayed(simulate_layout)(point_params[i], parsed_schemes, parsed_modes, layout)
        for i, layout in tasks
    )

    pair_keys = [(s, m) for s in scheme_labels for m in mode_labels]
    points = [
        SweepPoint(index=i, value=v, params=p, layouts={key: [] for key in pair_keys})
        for i, (v, p) in enumerate(zip(point_values, point_params))
    ]
    # Parallel returns results in submission order: point-major, layout-minor
    for (i, _), result in zip(tasks, outputs):
        for key, trial in result.items():
            points[i].layouts[key].append(trial)

    for point in points:
        for s in scheme_labels:
            for m in mode_labels:
                mean = point.mean_sum_se(s, m)
                if not math.isfinite(mean):
                    raise InternalError(f"non-finite mean sum SE at {axis_name}={point.value} for {s}/{m}")
        label = BASE_AXIS if point.value is None else f"{axis_name}={point.value:g}"
        log("Engine", f"{label} done ({point.params.num_layouts} layouts)")

    return SweepResult(
        axis=axis_name,
        values=point_values,
        schemes=scheme_labels,
        csi_modes=mode_labels,
        points=points,
    )

"""
Results - summary JSON, per-layout sum SE table and per-point CDF tables

Data files carry no timestamps or host details so identical runs produce
identical bytes.
"""

import json
import os
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from configs.system_config import cdf_columns, output_config

from . import __version__
from .engine import SweepPoint, SweepResult
from .errors import InternalError, OutputError
from .geometry import SystemParams

FLOAT_FORMAT = output_config["float_format"]


def preflight_output_dir(path) -> Path:
    """Create the directory if needed and make sure it is writable, before any computation"""
    target = Path(path)
    if target.exists() and not target.is_dir():
        raise OutputError(f"output path {target} exists and is not a directory")
    try:
        target.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputError(f"cannot create output directory {target}: {e}") from None
    if not os.access(target, os.W_OK | os.X_OK):
        raise OutputError(f"output directory {target} is not writable")
    return target


def empirical_cdf(values) -> Tuple[np.ndarray, np.ndarray]:
    """Sorted values and their empirical percentiles (i + 1) / n"""
    ordered = np.sort(np.asarray(values, dtype=float))
    n = ordered.size
    return ordered, np.arange(1, n + 1) / n if n else np.zeros(0)


def _point_value(point: SweepPoint):
    return None if point.value is None else float(point.value)


def point_records(sweep: SweepResult, point: SweepPoint) -> List[Dict[str, Any]]:
    records = []
    for scheme, mode in sweep.pairs:
        ue_ids, se = point.per_ue_samples(scheme, mode)
        per_layout = point.sum_se_per_layout(scheme, mode)
        records.append({
            "scheme": scheme,
            "csi_mode": mode,
            "mean_sum_se": float(per_layout.mean()),
            "sum_se_per_layout": [float(x) for x in per_layout],
            "num_layouts": int(per_layout.size),
            "num_fading_draws": point.params.num_fading_draws,
            "num_ue_samples": int(se.size),
            "outage_count": point.outage_count(scheme, mode),
            "degenerate_draws": point.degenerate_draws(scheme, mode),
            "per_ue_se": [float(x) for x in se],
            "ue_ids": [int(x) for x in ue_ids],
        })
    return records


def build_summary(sweep: SweepResult, metadata: Dict[str, Any]) -> Dict[str, Any]:
    return {
        "metadata": metadata,
        "sweep_axis": sweep.axis,
        "schemes": list(sweep.schemes),
        "csi_modes": list(sweep.csi_modes),
        "points": [
            {
                "index": point.index,
                "sweep_value": _point_value(point),
                "records": point_records(sweep, point),
            }
            for point in sweep.points
        ],
    }


def sum_se_frame(sweep: SweepResult) -> pd.DataFrame:
    rows = []
    for point in sweep.points:
        for scheme, mode in sweep.pairs:
            for trial in point.trials(scheme, mode):
                rows.append({
                    "sweep_axis": sweep.axis,
                    "sweep_value": _point_value(point),
                    "scheme": scheme,
                    "csi_mode": mode,
                    "layout": trial.layout_index,
                    "sum_se_bps_hz": trial.sum_se,
                    "outage_count": trial.outage_count,
                })
    return pd.DataFrame(rows, columns=[
        "sweep_axis", "sweep_value", "scheme", "csi_mode", "layout", "sum_se_bps_hz", "outage_count",
    ])


def cdf_frame(sweep: SweepResult, point: SweepPoint) -> pd.DataFrame:
    """One block per (scheme, CSI mode), rows sorted by SE"""
    frames = []
    for scheme, mode in sweep.pairs:
        ue_ids, se = point.per_ue_samples(scheme, mode)
        order = np.argsort(se, kind="stable")
        values, percentile = empirical_cdf(se)
        frames.append(pd.DataFrame({
            "ue_id": ue_ids[order],
            "scheme": scheme,
            "csi_mode": mode,
            "sweep_axis": sweep.axis,
            "sweep_value": _point_value(point),
            "se_bps_hz": values,
            "percentile": percentile,
        }, columns=cdf_columns))
    return pd.concat(frames, ignore_index=True)


def cdf_filename(axis: str, index: int) -> str:
    return output_config["cdf_file_template"].format(axis=axis, index=index)


def write_json(data: Dict[str, Any], path: Path) -> None:
    try:
        text = json.dumps(data, sort_keys=True, indent=2, allow_nan=False)
    except ValueError as e:
        raise InternalError(f"non-finite value in {path.name}: {e}") from None
    try:
        path.write_text(text + "\n", encoding="utf-8")
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from None


def _write_csv(frame: pd.DataFrame, path: Path) -> None:
    # sweep_value is legitimately empty for base runs
    numeric = frame.select_dtypes(include="number").drop(columns=["sweep_value"], errors="ignore")
    if not np.all(np.isfinite(numeric.to_numpy(dtype=float))):
        raise InternalError(f"non-finite value in {path.name}")
    try:
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from None


def emit_results(
    sweep: SweepResult,
    metadata: Dict[str, Any],
    formats: Sequence[str],
    output_dir,
) -> List[Path]:
    """Write the summary (json) and the sum SE + CDF tables (csv); return the paths"""
    target = preflight_output_dir(output_dir)
    written: List[Path] = []

    if "json" in formats:
        path = target / output_config["summary_file"]
        write_json(build_summary(sweep, metadata), path)
        written.append(path)

    if "csv" in formats:
        path = target / output_config["sum_se_file"]
        _write_csv(sum_se_frame(sweep), path)
        written.append(path)
        for point in sweep.points:
            path = target / cdf_filename(sweep.axis, point.index)
            _write_csv(cdf_frame(sweep, point), path)
            written.append(path)

    return written


def build_metadata(config: Dict[str, Any], params: SystemParams, **extra) -> Dict[str, Any]:
    """Config echo, seed, code version and the SNR the run actually used"""
    metadata = {
        "code_version": __version__,
        "config": config,
        "master_seed": params.master_seed,
        "system_snr": float(params.system_snr),
        "qos_gain_threshold": float(params.qos_gain_threshold),
    }
    metadata.update(extra)
    return metadata

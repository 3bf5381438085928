"""
Figure presets - preset sweeps, runtime budget, and a manifest of qualitative checks

Each preset lives in presets/<name>.yaml and lists the runs to execute and the
claims to check against their results. Every claim is written to the manifest
with its verdict, pass or fail.
"""

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import yaml
from pydantic import ValidationError

from configs.system_config import (
    desk_scale,
    full_scale,
    output_config,
    presets_dir,
    runtime_budget_s,
    runtime_unit_cost_s,
)

from . import __version__
from .console import log
from .engine import SweepResult, resolve_axis, run_sweep
from .errors import ConfigurationError, InvalidArgumentError, RuntimeBudgetError
from .geometry import SystemParams, parse_angle
from .results import build_metadata, emit_results, preflight_output_dir, write_json

FIGURES = ("fig2", "fig3", "fig4", "fig5")
SCALES = ("desk", "full")

PRESETS_PATH = Path(__file__).resolve().parent.parent / presets_dir


def load_preset(name: str, presets_path: Optional[Path] = None) -> Dict[str, Any]:
    if name not in FIGURES:
        raise InvalidArgumentError(f"unknown figure {name!r}; expected one of {list(FIGURES)}")
    path = Path(presets_path or PRESETS_PATH) / f"{name}.yaml"
    try:
        with open(path, "r", encoding="utf-8") as f:
            preset = yaml.safe_load(f)
    except (OSError, yaml.YAMLError) as e:
        raise ConfigurationError(name, f"cannot load preset {path}: {e}") from None
    if not isinstance(preset, dict) or not preset.get("runs"):
        raise ConfigurationError(name, "preset must be a mapping with at least one run")
    return preset


def preset_params(
    preset: Dict[str, Any],
    scale: str,
    seed: Optional[int] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> SystemParams:
    """Scale factors, then preset overrides, then caller overrides"""
    if scale not in SCALES:
        raise InvalidArgumentError(f"unknown scale {scale!r}; expected one of {list(SCALES)}")
    data: Dict[str, Any] = dict(desk_scale if scale == "desk" else full_scale)
    data.update((preset.get("params") or {}).get(scale) or {})
    data.update(overrides or {})
    if seed is not None:
        data["master_seed"] = seed
    try:
        return SystemParams.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        key = ".".join(str(part) for part in first["loc"])
        raise ConfigurationError(f"system.{key}" if key else "system", first["msg"]) from None


def run_values(run: Dict[str, Any], scale: str) -> Optional[List[Any]]:
    values = run.get("values")
    if isinstance(values, dict):
        values = values.get(scale)
    return None if values is None else list(values)


def _point_params(params: SystemParams, run: Dict[str, Any], scale: str) -> List[SystemParams]:
    if run.get("axis") is None:
        return [params]
    fieldname = resolve_axis(run["axis"])[1]
    return [params.with_value(fieldname, v) for v in run_values(run, scale)]


def estimate_runtime_s(
    points: List[SystemParams],
    num_schemes: int,
    num_modes: int,
    unit_cost_s: float = runtime_unit_cost_s,
) -> float:
    """Coarse wall-clock estimate: one unit per (layout, draw, UE, scheme, mode)"""
    total = 0.0
    for p in points:
        cluster_antennas = min(p.max_cluster_size, p.num_rrh) * p.antennas_per_rrh
        units = p.num_layouts * p.num_fading_draws * p.num_ue * num_schemes * num_modes
        total += units * unit_cost_s * cluster_antennas / 1000.0
    return total


def runtime_budget() -> float:
    return float(os.getenv("CFSIM_RUNTIME_BUDGET_S", runtime_budget_s))


# =============================================================================
# CLAIM CHECKS
# =============================================================================

ClaimCheck = Callable[[Dict[str, SweepResult], Dict[str, Any]], Tuple[bool, Dict[str, Any]]]


def _mean(sweep: SweepResult, scheme: str, mode: str, point: int = 0) -> float:
    return float(sweep.points[point].mean_sum_se(scheme, mode))


def _relative_gap(reference: float, value: float) -> float:
    return (reference - value) / reference if reference > 0 else 0.0


def _value_index(sweep: SweepResult, value) -> int:
    target = parse_angle(value)
    for i, v in enumerate(sweep.values):
        if v is not None and np.isclose(float(v), target):
            return i
    raise ConfigurationError("claims", f"value {value!r} is not a point of the {sweep.axis} sweep")


def check_scheme_ordering(runs, claim):
    sweep = runs[claim["run"]]
    point = claim.get("point", 0)
    means = [_mean(sweep, s, claim["csi_mode"], point) for s in claim["order"]]
    ordered = all(a >= b for a, b in zip(means, means[1:]))
    margin = means[0] / means[-1] - 1.0 if means[-1] > 0 else None
    passed = ordered and margin is not None and margin >= claim.get("min_margin", 0.0)
    return passed, {"mean_sum_se": dict(zip(claim["order"], means)), "first_over_last": margin}


def check_optimal_beats_egc(runs, claim):
    sweep = runs[claim["run"]]
    point = claim.get("point", 0)
    details = {}
    passed = True
    for detector in claim["detectors"]:
        optimal = _mean(sweep, f"{detector}+Optimal", claim["csi_mode"], point)
        egc = _mean(sweep, f"{detector}+EGC", claim["csi_mode"], point)
        details[detector] = {"optimal": optimal, "egc": egc}
        passed = passed and optimal >= egc
    return passed, details


def check_sp_near_ideal(runs, claim):
    sweep = runs[claim["run"]]
    point = claim.get("point", 0)
    details = {}
    passed = True
    for scheme in claim["schemes"]:
        gap = _relative_gap(_mean(sweep, scheme, "IDEAL", point), _mean(sweep, scheme, "SP", point))
        details[scheme] = gap
        passed = passed and abs(gap) <= claim["tolerance"]
    return passed, {"relative_gap": details}


def check_pm_below_sp(runs, claim):
    sweep = runs[claim["run"]]
    point = claim.get("point", 0)
    details = {}
    passed = True
    for scheme in claim["schemes"]:
        gap = _relative_gap(_mean(sweep, scheme, "SP", point), _mean(sweep, scheme, "PM", point))
        details[scheme] = gap
        passed = passed and gap >= claim["min_margin"]
    return passed, {"pm_loss_vs_sp": details}


def check_q_saturation(runs, claim):
    sweep = runs[claim["run"]]
    curve = sweep.mean_sum_se(claim["scheme"], claim["csi_mode"])

    def gain(pair):
        a, b = (_value_index(sweep, v) for v in pair)
        return float(curve[b] / curve[a] - 1.0) if curve[a] > 0 else None

    saturated = gain(claim["saturated"])
    growing = gain(claim["growing"])
    passed = (
        saturated is not None
        and growing is not None
        and saturated < claim["max_saturated_gain"]
        and growing > claim["min_growing_gain"]
    )
    return passed, {"saturated_gain": saturated, "growing_gain": growing, "curve": curve.tolist()}


def check_sp_gap_grows_with_delta(runs, claim):
    sweep = runs[claim["run"]]
    last = len(sweep.points) - 1
    details = {}
    passed = True
    for scheme in claim["schemes"]:
        narrow = _relative_gap(_mean(sweep, scheme, "IDEAL", 0), _mean(sweep, scheme, "SP", 0))
        wide = _relative_gap(_mean(sweep, scheme, "IDEAL", last), _mean(sweep, scheme, "SP", last))
        details[scheme] = {"narrow": narrow, "wide": wide}
        passed = passed and wide > narrow
    return passed, details


def check_sum_se_grows_with_load(runs, claim):
    curve = runs[claim["run"]].mean_sum_se(claim["scheme"], claim["csi_mode"])
    passed = bool(np.all(np.diff(curve) >= 0))
    return passed, {"curve": curve.tolist()}


def check_interior_maximum(runs, claim):
    curve = runs[claim["run"]].mean_sum_se(claim["scheme"], claim["csi_mode"])
    peak = int(np.argmax(curve))
    passed = 0 < peak < curve.size - 1
    decreasing_after_peak = bool(np.all(np.diff(curve[peak:]) <= 0))
    return passed, {
        "curve": curve.tolist(),
        "peak_index": peak,
        "peak_value": runs[claim["run"]].values[peak],
        "decreasing_after_peak": decreasing_after_peak,
    }


CLAIM_CHECKS: Dict[str, ClaimCheck] = {
    "scheme_ordering": check_scheme_ordering,
    "optimal_beats_egc": check_optimal_beats_egc,
    "sp_near_ideal": check_sp_near_ideal,
    "pm_below_sp": check_pm_below_sp,
    "q_saturation": check_q_saturation,
    "sp_gap_grows_with_delta": check_sp_gap_grows_with_delta,
    "sum_se_grows_with_load": check_sum_se_grows_with_load,
    "interior_maximum": check_interior_maximum,
}


def evaluate_claims(claims: List[Dict[str, Any]], runs: Dict[str, SweepResult]) -> List[Dict[str, Any]]:
    verdicts = []
    for claim in claims or []:
        check = CLAIM_CHECKS.get(claim.get("check"))
        if check is None:
            raise ConfigurationError("claims", f"unknown claim check {claim.get('check')!r}")
        passed, details = check(runs, claim)
        verdicts.append({
            "id": claim["id"],
            "check": claim["check"],
            "statement": claim.get("statement", ""),
            "passed": bool(passed),
            "details": details,
        })
        log("Figures", f"{claim['id']}: {'PASS' if passed else 'FAIL'}")
    return verdicts


# =============================================================================
# REPRODUCTION
# =============================================================================


@dataclass
class FigureReport:
    name: str
    scale: str
    runs: Dict[str, SweepResult] = field(default_factory=dict)
    claims: List[Dict[str, Any]] = field(default_factory=list)
    files: List[Path] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(c["passed"] for c in self.claims)


def reproduce_figure(
    name: str,
    scale: str = "desk",
    output_dir=None,
    force: bool = False,
    seed: Optional[int] = None,
    n_jobs: int = 1,
    overrides: Optional[Dict[str, Any]] = None,
    presets_path: Optional[Path] = None,
) -> FigureReport:
    """Run a preset, write its data under <output_dir>/<name>/ and the claim manifest"""
    preset = load_preset(name, presets_path)
    params = preset_params(preset, scale, seed, overrides)
    preset_runs = preset["runs"]

    planned = []
    estimate = 0.0
    for run in preset_runs:
        points = _point_params(params, run, scale)
        planned.append(points)
        estimate += estimate_runtime_s(points, len(run["schemes"]), len(run["csi_modes"]))
    log("Figures", f"{name} ({scale}): estimated runtime {estimate:.0f}s")
    budget = runtime_budget()
    if scale == "full" and estimate > budget and not force:
        raise RuntimeBudgetError(estimate, budget, f"{name} at full scale")

    base_dir = Path(output_dir or os.getenv("CFSIM_OUTPUT_DIR", output_config["default_dir"])) / name
    for run in preset_runs:
        preflight_output_dir(base_dir / run["name"])

    report = FigureReport(name=name, scale=scale)
    for run in preset_runs:
        values = run_values(run, scale)
        sweep = run_sweep(params, run.get("axis"), values, run["schemes"], run["csi_modes"], n_jobs=n_jobs)
        metadata = build_metadata(
            {"figure": name, "scale": scale, "run": run["name"], "system": params.model_dump(mode="json")},
            params,
        )
        report.files.extend(emit_results(sweep, metadata, ["json", "csv"], base_dir / run["name"]))
        report.runs[run["name"]] = sweep

    report.claims = evaluate_claims(preset.get("claims"), report.runs)
    manifest = {
        "figure": name,
        "description": preset.get("description", ""),
        "scale": scale,
        "code_version": __version__,
        "system": params.model_dump(mode="json"),
        "desk_scale": desk_scale,
        "estimated_runtime_s": estimate,
        "runs": [
            {
                "name": run["name"],
                "axis": report.runs[run["name"]].axis,
                "values": report.runs[run["name"]].values,
                "schemes": report.runs[run["name"]].schemes,
                "csi_modes": report.runs[run["name"]].csi_modes,
            }
            for run in preset_runs
        ],
        "files": sorted(str(p.relative_to(base_dir)) for p in report.files),
        "claims": report.claims,
        "all_passed": report.all_passed,
    }
    manifest_path = base_dir / output_config["manifest_file"]
    write_json(manifest, manifest_path)
    report.files.append(manifest_path)
    return report

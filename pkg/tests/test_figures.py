"""
Test suite for figure presets, runtime budget and claim checks
"""

import json

import pytest

from src.errors import ConfigurationError, InvalidArgumentError, RuntimeBudgetError
from src.figures import (
    FIGURES,
    estimate_runtime_s,
    evaluate_claims,
    load_preset,
    preset_params,
    reproduce_figure,
    run_values,
)
from src.geometry import SystemParams
from tests.fixtures.sample_instances import make_sweep


def verdict(claim: dict, runs: dict) -> dict:
    return evaluate_claims([dict(claim, id=claim["check"])], runs)[0]


@pytest.mark.unit
class TestPresets:
    @pytest.mark.parametrize("name", FIGURES)
    def test_every_preset_loads(self, name):
        preset = load_preset(name)
        assert preset["name"] == name
        assert preset["runs"]
        assert preset["claims"]

    @pytest.mark.edge_case
    def test_unknown_figure(self):
        with pytest.raises(InvalidArgumentError):
            load_preset("fig9")

    def test_cdf_run_covers_every_scheme_and_mode(self):
        run = load_preset("fig2")["runs"][0]
        assert run["axis"] is None
        assert len(run["schemes"]) * len(run["csi_modes"]) == 15

    def test_sweep_values_per_scale(self):
        load = load_preset("fig4")["runs"][0]
        assert run_values(load, "desk") == [25, 50, 100, 150]
        assert run_values(load, "full") == [100, 250, 500, 750]
        pilots = load_preset("fig5")["runs"][0]
        assert run_values(pilots, "full") == [5, 10, 20, 30, 40, 50]
        assert run_values({"axis": None}, "desk") is None
        assert run_values({"values": [1, 2]}, "full") == [1, 2]

    def test_desk_parameters(self):
        params = preset_params(load_preset("fig4"), "desk", seed=9)
        assert (params.num_rrh, params.num_ue, params.antennas_per_rrh) == (20, 40, 64)
        assert (params.num_layouts, params.num_fading_draws, params.master_seed) == (10, 30, 9)

    def test_full_parameters(self):
        params = preset_params(load_preset("fig2"), "full", overrides={"num_ue": 80})
        assert (params.num_rrh, params.pilot_dim, params.num_ue) == (50, 20, 80)
        assert (params.num_layouts, params.num_fading_draws) == (48, 100)

    @pytest.mark.edge_case
    def test_unknown_scale(self):
        with pytest.raises(InvalidArgumentError):
            preset_params(load_preset("fig2"), "huge")

    @pytest.mark.edge_case
    def test_invalid_override_names_the_key(self):
        with pytest.raises(ConfigurationError) as exc:
            preset_params(load_preset("fig2"), "desk", overrides={"pilot_dim": 500})
        assert exc.value.key_path == "system.pilot_dim"


@pytest.mark.unit
class TestRuntimeBudget:
    def test_estimate_scales_with_work(self):
        base = SystemParams(num_layouts=2, num_fading_draws=10)
        one = estimate_runtime_s([base], 1, 1)
        assert one > 0
        assert estimate_runtime_s([base.with_value("num_fading_draws", 20)], 1, 1) == pytest.approx(2 * one)
        assert estimate_runtime_s([base, base], 3, 2) == pytest.approx(12 * one)

    def test_full_scale_over_budget_is_refused(self, tmp_path, monkeypatch, mocker):
        monkeypatch.setenv("CFSIM_RUNTIME_BUDGET_S", "1")
        sweep = mocker.patch("src.figures.run_sweep")
        with pytest.raises(RuntimeBudgetError) as exc:
            reproduce_figure("fig4", scale="full", output_dir=tmp_path)
        assert exc.value.budget_s == 1.0
        assert "--force" in str(exc.value)
        sweep.assert_not_called()
        assert not (tmp_path / "fig4").exists()


@pytest.mark.unit
class TestClaimChecks:
    def test_interior_maximum(self):
        runs = {"pilots": make_sweep("tau_p", [5, 10, 20], {("GZF", "SP"): [1.0, 3.0, 2.0]})}
        claim = {"check": "interior_maximum", "run": "pilots", "scheme": "GZF", "csi_mode": "SP"}
        result = verdict(claim, runs)
        assert result["passed"] is True
        assert result["details"]["peak_value"] == 10
        assert result["details"]["decreasing_after_peak"] is True

        runs = {"pilots": make_sweep("tau_p", [5, 10, 20], {("GZF", "SP"): [1.0, 2.0, 3.0]})}
        assert verdict(claim, runs)["passed"] is False

    def test_q_saturation(self):
        claim = {
            "check": "q_saturation", "run": "q", "scheme": "GZF", "csi_mode": "IDEAL",
            "saturated": [15, 20], "max_saturated_gain": 0.03,
            "growing": [5, 15], "min_growing_gain": 0.10,
        }
        saturating = {"q": make_sweep("Q", [5, 15, 20], {("GZF", "IDEAL"): [1.0, 2.0, 2.02]})}
        assert verdict(claim, saturating)["passed"] is True
        flat = {"q": make_sweep("Q", [5, 15, 20], {("GZF", "IDEAL"): [1.0, 1.05, 1.06]})}
        result = verdict(claim, flat)
        assert result["passed"] is False
        assert result["details"]["growing_gain"] == pytest.approx(0.05)

    def test_q_saturation_needs_swept_values(self):
        claim = {
            "check": "q_saturation", "run": "q", "scheme": "GZF", "csi_mode": "IDEAL",
            "saturated": [15, 30], "max_saturated_gain": 0.03,
            "growing": [5, 15], "min_growing_gain": 0.10,
        }
        runs = {"q": make_sweep("Q", [5, 15, 20], {("GZF", "IDEAL"): [1.0, 2.0, 2.0]})}
        with pytest.raises(ConfigurationError):
            verdict(claim, runs)

    def test_scheme_ordering(self):
        claim = {
            "check": "scheme_ordering", "run": "cdf", "csi_mode": "IDEAL",
            "order": ["GZF", "LMMSE+Optimal", "MRC+Optimal"], "min_margin": 0.1,
        }
        good = {"cdf": make_sweep("base", [None], {
            ("GZF", "IDEAL"): [3.0], ("LMMSE+Optimal", "IDEAL"): [2.0], ("MRC+Optimal", "IDEAL"): [1.0],
        })}
        result = verdict(claim, good)
        assert result["passed"] is True
        assert result["details"]["first_over_last"] == pytest.approx(2.0)
        swapped = {"cdf": make_sweep("base", [None], {
            ("GZF", "IDEAL"): [2.0], ("LMMSE+Optimal", "IDEAL"): [3.0], ("MRC+Optimal", "IDEAL"): [1.0],
        })}
        assert verdict(claim, swapped)["passed"] is False

    def test_optimal_beats_egc(self):
        runs = {"cdf": make_sweep("base", [None], {
            ("MRC+Optimal", "IDEAL"): [2.0], ("MRC+EGC", "IDEAL"): [1.5],
            ("LMMSE+Optimal", "IDEAL"): [3.0], ("LMMSE+EGC", "IDEAL"): [3.5],
        })}
        claim = {"check": "optimal_beats_egc", "run": "cdf", "csi_mode": "IDEAL", "detectors": ["MRC"]}
        assert verdict(claim, runs)["passed"] is True
        claim["detectors"] = ["MRC", "LMMSE"]
        assert verdict(claim, runs)["passed"] is False

    def test_csi_quality_checks(self):
        runs = {"delta": make_sweep("delta", [0.2, 1.6], {
            ("GZF", "IDEAL"): [1.0, 1.0], ("GZF", "SP"): [0.98, 0.8], ("GZF", "PM"): [0.8, 0.7],
        })}
        near = {"check": "sp_near_ideal", "run": "delta", "schemes": ["GZF"], "tolerance": 0.05}
        assert verdict(near, runs)["passed"] is True
        assert verdict(dict(near, point=1), runs)["passed"] is False
        below = {"check": "pm_below_sp", "run": "delta", "schemes": ["GZF"], "min_margin": 0.1}
        assert verdict(below, runs)["passed"] is True
        grows = {"check": "sp_gap_grows_with_delta", "run": "delta", "schemes": ["GZF"]}
        assert verdict(grows, runs)["passed"] is True

    def test_sum_se_grows_with_load(self):
        claim = {"check": "sum_se_grows_with_load", "run": "k", "scheme": "GZF", "csi_mode": "IDEAL"}
        assert verdict(claim, {"k": make_sweep("K", [10, 20, 30], {("GZF", "IDEAL"): [1.0, 2.0, 2.0]})})["passed"]
        assert not verdict(claim, {"k": make_sweep("K", [10, 20, 30], {("GZF", "IDEAL"): [1.0, 3.0, 2.0]})})["passed"]

    @pytest.mark.edge_case
    def test_unknown_check(self):
        with pytest.raises(ConfigurationError):
            evaluate_claims([{"id": "x", "check": "looks_nice"}], {})

    def test_verdicts_are_logged(self, captured_console):
        runs = {"k": make_sweep("K", [10, 20], {("GZF", "IDEAL"): [1.0, 2.0]})}
        evaluate_claims(
            [{"id": "load", "check": "sum_se_grows_with_load", "run": "k", "scheme": "GZF", "csi_mode": "IDEAL"}],
            runs,
        )
        assert "[Figures] load: PASS" in captured_console.getvalue()


@pytest.mark.integration
class TestReproduceFigure:
    def test_desk_run_is_reproducible(self, tmp_path, tiny_figure_overrides, monkeypatch):
        monkeypatch.setenv("CFSIM_RUNTIME_BUDGET_S", "1")
        first = reproduce_figure("fig2", output_dir=tmp_path / "a", seed=3, overrides=tiny_figure_overrides)
        second = reproduce_figure("fig2", output_dir=tmp_path / "b", seed=3, overrides=tiny_figure_overrides)

        files_a = sorted(p.relative_to(tmp_path / "a") for p in first.files)
        files_b = sorted(p.relative_to(tmp_path / "b") for p in second.files)
        assert files_a == files_b
        for relative in files_a:
            assert (tmp_path / "a" / relative).read_bytes() == (tmp_path / "b" / relative).read_bytes()

        manifest = json.loads((tmp_path / "a" / "fig2" / "manifest.json").read_text(encoding="utf-8"))
        assert {c["id"] for c in manifest["claims"]} == {"scheme_ordering", "optimal_beats_egc", "q_saturation"}
        assert all(isinstance(c["passed"], bool) for c in manifest["claims"])
        assert manifest["all_passed"] == first.all_passed
        assert "rate_cdf/summary.json" in manifest["files"]
        assert "cluster_size/cdf_Q_04.csv" in manifest["files"]
        assert [r["name"] for r in manifest["runs"]] == ["rate_cdf", "cluster_size"]
        assert manifest["system"]["num_rrh"] == 4


@pytest.mark.slow
@pytest.mark.integration
class TestDeskAcceptance:
    """Every preset at desk scale, with the claim verdicts its manifest records"""

    @pytest.mark.timeout(3600)
    @pytest.mark.parametrize("name", FIGURES)
    def test_every_claim_passes(self, name, tmp_path):
        report = reproduce_figure(name, scale="desk", output_dir=tmp_path, n_jobs=-1)
        manifest = json.loads((tmp_path / name / "manifest.json").read_text(encoding="utf-8"))
        assert [c["id"] for c in manifest["claims"]] == [c["id"] for c in report.claims]
        failed = {c["id"]: c["details"] for c in report.claims if not c["passed"]}
        assert not failed, f"{name} desk claims failed: {failed}"
        assert manifest["all_passed"] is True
        if name == "fig5":
            assert isinstance(manifest["claims"][0]["details"]["decreasing_after_peak"], bool)

"""
Test suite for result files: summary JSON, sum SE table and CDF tables
"""

import json

import numpy as np
import pandas as pd
import pytest

from src import __version__
from src.engine import SweepPoint, SweepResult, run_sweep
from src.errors import InternalError, OutputError
from src.geometry import SystemParams
from src.results import (
    build_metadata,
    cdf_filename,
    cdf_frame,
    emit_results,
    empirical_cdf,
    preflight_output_dir,
    sum_se_frame,
)
from tests.fixtures.sample_instances import make_sweep, make_trial


def sweep_of(trials, num_ue: int, axis: str = "K", value=3) -> SweepResult:
    """One sweep point holding the given GZF / IDEAL layouts"""
    params = SystemParams(num_ue=num_ue, num_layouts=len(trials))
    point = SweepPoint(index=0, value=value, params=params, layouts={("GZF", "IDEAL"): list(trials)})
    return SweepResult(axis=axis, values=[value], schemes=["GZF"], csi_modes=["IDEAL"], points=[point])


@pytest.mark.unit
class TestEmpiricalCdf:
    def test_two_values(self):
        values, percentile = empirical_cdf([1.5, 0.5])
        assert values.tolist() == [0.5, 1.5]
        assert percentile.tolist() == [0.5, 1.0]

    @pytest.mark.edge_case
    def test_empty(self):
        values, percentile = empirical_cdf([])
        assert values.size == 0 and percentile.size == 0

    def test_cdf_frame_keeps_ue_ids_with_their_values(self):
        sweep = sweep_of([make_trial([1.5, 0.5])], num_ue=2)
        frame = cdf_frame(sweep, sweep.points[0])
        assert frame["ue_id"].tolist() == [1, 0]
        assert frame["se_bps_hz"].tolist() == [0.5, 1.5]
        assert frame["percentile"].tolist() == [0.5, 1.0]
        assert set(frame["sweep_axis"]) == {"K"}

    def test_cdf_filename(self):
        assert cdf_filename("Q", 3) == "cdf_Q_03.csv"


@pytest.mark.unit
class TestPreflight:
    def test_creates_nested_directory(self, tmp_path):
        target = preflight_output_dir(tmp_path / "a" / "b")
        assert target.is_dir()

    @pytest.mark.edge_case
    def test_file_in_the_way(self, tmp_path):
        blocker = tmp_path / "results"
        blocker.write_text("x", encoding="utf-8")
        with pytest.raises(OutputError):
            preflight_output_dir(blocker)


@pytest.mark.unit
class TestEmitResults:
    def test_files_and_columns(self, tmp_path):
        sweep = make_sweep("tau_p", [5, 10], {("GZF", "SP"): [1.0, 2.0], ("MRC+EGC", "SP"): [0.5, 0.75]})
        paths = emit_results(sweep, {"code_version": "x"}, ["json", "csv"], tmp_path)
        assert [p.name for p in paths] == ["summary.json", "sum_se.csv", "cdf_tau_p_00.csv", "cdf_tau_p_01.csv"]
        header = (tmp_path / "sum_se.csv").read_text(encoding="utf-8").splitlines()[0]
        assert header == "sweep_axis,sweep_value,scheme,csi_mode,layout,sum_se_bps_hz,outage_count"
        cdf_header = (tmp_path / "cdf_tau_p_01.csv").read_text(encoding="utf-8").splitlines()[0]
        assert cdf_header == "ue_id,scheme,csi_mode,sweep_axis,sweep_value,se_bps_hz,percentile"

    def test_json_only(self, tmp_path):
        sweep = make_sweep("Q", [2], {("GZF", "IDEAL"): [1.0]})
        paths = emit_results(sweep, {}, ["json"], tmp_path)
        assert [p.name for p in paths] == ["summary.json"]

    def test_outage_ues_count_as_zero_in_sums_and_leave_the_cdf(self, tmp_path):
        trials = [make_trial([1.0, 0.0, 2.0], outage=[1]), make_trial([0.25, 0.5, 0.0], layout_index=1, outage=[2])]
        sweep = sweep_of(trials, num_ue=3)
        emit_results(sweep, {}, ["json", "csv"], tmp_path)

        sums = pd.read_csv(tmp_path / "sum_se.csv")
        assert sums["sum_se_bps_hz"].tolist() == [3.0, 0.75]
        assert sums["outage_count"].tolist() == [1, 1]

        cdf = pd.read_csv(tmp_path / "cdf_K_00.csv")
        assert sorted(cdf["ue_id"].tolist()) == [0, 2, 3, 4]
        assert cdf["se_bps_hz"].sum() == pytest.approx(sums["sum_se_bps_hz"].sum())

        summary = json.loads((tmp_path / "summary.json").read_text(encoding="utf-8"))
        record = summary["points"][0]["records"][0]
        assert record["mean_sum_se"] == pytest.approx(1.875)
        assert record["outage_count"] == 2
        assert record["num_ue_samples"] == 4
        assert sum(record["per_ue_se"]) == pytest.approx(sum(record["sum_se_per_layout"]))

    def test_identical_sweeps_give_identical_bytes(self, tmp_path, small_params):
        params = small_params.with_value("num_layouts", 1)
        first = run_sweep(params, "Q", [1, 2], ["GZF", "LMMSE+EGC"], ["PM"])
        second = run_sweep(params, "Q", [1, 2], ["GZF", "LMMSE+EGC"], ["PM"])
        metadata = build_metadata({"seed": params.master_seed}, params)
        a = emit_results(first, metadata, ["json", "csv"], tmp_path / "a")
        b = emit_results(second, metadata, ["json", "csv"], tmp_path / "b")
        for pa, pb in zip(a, b):
            assert pa.name == pb.name
            assert pa.read_bytes() == pb.read_bytes()

    @pytest.mark.edge_case
    def test_non_finite_values_are_refused(self, tmp_path):
        sweep = sweep_of([make_trial([np.nan, 1.0])], num_ue=2)
        with pytest.raises(InternalError):
            emit_results(sweep, {}, ["json"], tmp_path)
        with pytest.raises(InternalError):
            emit_results(sweep, {}, ["csv"], tmp_path)

    def test_base_run_has_empty_sweep_value(self, tmp_path):
        sweep = make_sweep("base", [None], {("GZF", "IDEAL"): [2.0]})
        frame = sum_se_frame(sweep)
        assert frame["sweep_value"].isna().all()
        emit_results(sweep, {}, ["csv"], tmp_path)
        assert (tmp_path / "cdf_base_00.csv").exists()


@pytest.mark.unit
class TestMetadata:
    def test_metadata_fields(self):
        params = SystemParams(snr=2.0, master_seed=5)
        metadata = build_metadata({"system": {}}, params, preset="fig2")
        assert metadata["code_version"] == __version__
        assert metadata["master_seed"] == 5
        assert metadata["system_snr"] == 2.0
        assert metadata["qos_gain_threshold"] == pytest.approx(1.0 / (64 * 2.0))
        assert metadata["preset"] == "fig2"

    def test_summary_carries_metadata(self, tmp_path):
        sweep = make_sweep("Q", [2], {("GZF", "IDEAL"): [1.0]})
        emit_results(sweep, build_metadata({"k": 1}, SystemParams(snr=1.0)), ["json"], tmp_path)
        summary = json.loads((tmp_path / "summary.json").read_text(encoding="utf-8"))
        assert summary["metadata"]["config"] == {"k": 1}
        assert summary["sweep_axis"] == "Q"
        assert summary["points"][0]["sweep_value"] == 2.0

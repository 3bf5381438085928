"""
Pytest configuration and fixtures for Cell-Free Uplink Simulator tests
"""

import io

import numpy as np
import pytest
from rich.console import Console

import src.console as console_module
from src.geometry import SystemParams


@pytest.fixture(autouse=True)
def captured_console(monkeypatch):
    """Route tagged status lines into a buffer instead of stderr"""
    buffer = io.StringIO()
    monkeypatch.setattr(console_module, "_console", Console(file=buffer, highlight=False, width=200))
    return buffer


@pytest.fixture
def rng():
    """Fixed-seed generator for randomized checks"""
    return np.random.default_rng(20240611)


@pytest.fixture
def default_params():
    """Defaults: L=50, K=100, M=64, tau_p=20, Q=30"""
    return SystemParams()


@pytest.fixture
def small_params():
    """A few RRHs and UEs on a small torus, quick to simulate end to end"""
    return SystemParams(
        area_side=200.0,
        num_rrh=4,
        num_ue=6,
        antennas_per_rrh=8,
        pilot_dim=3,
        max_cluster_size=3,
        num_layouts=2,
        num_fading_draws=3,
        master_seed=7,
    )


@pytest.fixture
def unit_threshold_params():
    """SNR = 1/M so the QoS gain threshold eta / (M SNR) equals eta = 1"""
    return SystemParams(
        num_rrh=3,
        num_ue=2,
        antennas_per_rrh=4,
        snr=0.25,
        qos_threshold=1.0,
        pilot_dim=2,
        max_cluster_size=3,
    )


@pytest.fixture
def tiny_figure_overrides():
    """Shrinks any preset to seconds"""
    return {
        "area_side": 200.0,
        "num_rrh": 4,
        "num_ue": 6,
        "antennas_per_rrh": 8,
        "pilot_dim": 3,
        "num_layouts": 1,
        "num_fading_draws": 2,
    }

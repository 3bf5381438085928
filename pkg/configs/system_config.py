"""
Cell-Free Uplink Simulator Configuration
Scenario defaults, model constants and output layout
"""

import math

# =============================================================================
# SCENARIO DEFAULTS - 500 x 500 m torus, 50 RRHs x 64 antennas, 100 UEs
# =============================================================================

system_defaults = {
    "area_side": 500.0,  # meters, A = side^2
    "num_rrh": 50,
    "num_ue": 100,
    "antennas_per_rrh": 64,
    "coherence_block": 200,  # 14 OFDM symbols x 12 subcarriers, rounded
    "pilot_dim": 20,
    "angular_spread": math.pi / 16,
    "qos_threshold": 1.0,
    "max_cluster_size": 30,
    "snr": None,  # None -> calibrated from geometry
    "num_layouts": 48,
    "num_fading_draws": 100,
    "master_seed": 0,
    "shadowing_std_db": 0.0,  # log-normal shadowing, off by default
    "rate_unit": "bits",  # "bits" | "nats"
}

# Short names accepted on the command line and in override strings
param_aliases = {
    "A_side": "area_side",
    "L": "num_rrh",
    "K": "num_ue",
    "M": "antennas_per_rrh",
    "T": "coherence_block",
    "tau_p": "pilot_dim",
    "delta": "angular_spread",
    "eta": "qos_threshold",
    "Q": "max_cluster_size",
    "seed": "master_seed",
}

# =============================================================================
# PATHLOSS - UMi fit used across the cell-free literature
# =============================================================================

pathloss_config = {
    "intercept_db": -30.5,
    "slope_db": 36.7,  # dB per decade of distance
    "min_distance": 10.0,  # meters, clamp against co-location blow-up
    "calibration_distance_factor": 3.0,  # SNR set so beta(3 d_L) M SNR = 1
}

# =============================================================================
# CHANNEL / RECEIVER NUMERICS
# =============================================================================

channel_config = {
    "support_tolerance": 1e-9,  # radians of slack for inclusive interval ends
}

receiver_config = {
    "rank_tolerance": 1e-10,  # SVD numerical rank, relative to leading value
    "degenerate_tolerance": 1e-10,  # ||P h|| / ||h|| below this -> degenerate
}

# =============================================================================
# ENGINE
# =============================================================================

engine_config = {
    "n_jobs": 1,  # joblib workers for independent layouts
}

# Seed hierarchy: master seed -> layout -> stream purpose -> draw
stream_purposes = {
    "geometry": 0,
    "association": 1,
    "fading": 2,
    "pilot": 3,
    "shadowing": 4,
}

# =============================================================================
# SCHEMES / CSI MODES
# =============================================================================

all_schemes = [
    "GZF",
    "MRC+EGC",
    "MRC+Optimal",
    "LMMSE+EGC",
    "LMMSE+Optimal",
]

all_csi_modes = ["IDEAL", "PM", "SP"]

# =============================================================================
# FIGURE PRESETS
# =============================================================================

# Desk scale shrinks the scenario so a preset finishes in minutes. M stays at
# 64: at M = 32 a pi/16 spread covers a single DFT bin per edge
desk_scale = {
    "num_rrh": 20,
    "num_ue": 40,
    "antennas_per_rrh": 64,
    "pilot_dim": 10,
    "num_layouts": 10,
    "num_fading_draws": 30,
}

full_scale = {
    "num_layouts": 48,
    "num_fading_draws": 100,
}

presets_dir = "presets"

# Full-scale presets are refused above this estimate unless forced
runtime_budget_s = 3600.0

# Coarse cost of one (draw, UE, scheme, mode) unit per 1000 cluster antennas
runtime_unit_cost_s = 2e-4

# =============================================================================
# OUTPUT CONFIGURATION
# =============================================================================

output_config = {
    "default_dir": "results",
    "formats": ["json", "csv"],
    "summary_file": "summary.json",
    "sum_se_file": "sum_se.csv",
    "cdf_file_template": "cdf_{axis}_{index:02d}.csv",
    "manifest_file": "manifest.json",
    "float_format": "%.17g",
}

cdf_columns = [
    "ue_id",
    "scheme",
    "csi_mode",
    "sweep_axis",
    "sweep_value",
    "se_bps_hz",
    "percentile",
]

"""
Seed hierarchy - keyed random streams

Every stream is derived from (master seed, layout index, purpose, draw index)
through numpy's SeedSequence, so any single draw can be regenerated in
isolation and results do not depend on execution order.
"""

from typing import Optional

import numpy as np

from configs.system_config import stream_purposes


def derive_stream(
    master_seed: int,
    layout: int,
    purpose: str,
    draw: Optional[int] = None,
) -> np.random.Generator:
    """Return the generator for one (layout, purpose[, draw]) key"""
    if purpose not in stream_purposes:
        raise KeyError(f"unknown stream purpose: {purpose}")
    key = [int(master_seed), int(layout), stream_purposes[purpose]]
    if draw is not None:
        key.append(int(draw))
    return np.random.default_rng(np.random.SeedSequence(key))


def complex_normal(rng: np.random.Generator, size) -> np.ndarray:
    """Circularly-symmetric CN(0, 1) samples: two real normals scaled by 1/sqrt(2)"""
    real = rng.standard_normal(size)
    imag = rng.standard_normal(size)
    return (real + 1j * imag) / np.sqrt(2.0)

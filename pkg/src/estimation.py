"""
Estimation - uplink pilot phase, pilot matching and subspace projection

Every non-outage UE transmits its pilot; RRH l correlates the received field
with the pilot of each UE it serves (PM) and optionally projects the result on
the known DFT subspace of that edge (SP).
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from .association import AssociationGraph
from .channel import ChannelState, SubspaceBasis, dft_matrix
from .errors import InvalidArgumentError
from .geometry import LsfcMatrix
from .streams import complex_normal


class CsiMode(str, Enum):
    IDEAL = "IDEAL"
    PM = "PM"
    SP = "SP"

    @classmethod
    def parse(cls, value) -> "CsiMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise InvalidArgumentError(f"unknown CSI mode: {value!r}") from None


@dataclass(frozen=True)
class PilotBook:
    """Orthogonal pilots as columns, phi_t = sqrt(tau_p * SNR) e_t"""

    pilots: np.ndarray  # (tau_p, tau_p)
    snr: float

    @classmethod
    def build(cls, tau_p: int, snr: float) -> "PilotBook":
        if tau_p < 1 or not snr > 0:
            raise InvalidArgumentError("pilot book needs tau_p >= 1 and a positive SNR")
        return cls(pilots=math.sqrt(tau_p * snr) * np.eye(tau_p, dtype=complex), snr=snr)

    @property
    def tau_p(self) -> int:
        return self.pilots.shape[0]

    def pilot(self, t: int) -> np.ndarray:
        return self.pilots[:, t]


def received_pilot_field(
    channel_state: ChannelState,
    graph: AssociationGraph,
    book: PilotBook,
    l: int,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Y = sum over admitted UEs of h[l, i] phi_t(i)^H + Z; rng=None gives Z = 0"""
    M = channel_state.antennas
    active = np.flatnonzero(graph.active)
    Y = np.zeros((M, book.tau_p), dtype=complex)
    if active.size:
        H_l = channel_state.rrh_blocks(l)[:, active]
        Y += H_l @ book.pilots[:, graph.pilot[active]].conj().T
    if rng is not None:
        Y += complex_normal(rng, (M, book.tau_p))
    return Y


def pilot_fields(
    channel_state: ChannelState,
    graph: AssociationGraph,
    book: PilotBook,
    rng: Optional[np.random.Generator] = None,
) -> List[np.ndarray]:
    """Received fields of every RRH; noise is drawn in RRH index order"""
    return [
        received_pilot_field(channel_state, graph, book, l, rng)
        for l in range(channel_state.num_rrh)
    ]


def pm_estimate(Y: np.ndarray, phi: np.ndarray, snr: float, tau_p: int) -> np.ndarray:
    """h_pm = Y phi / (tau_p * SNR)"""
    return (Y @ phi) / (tau_p * snr)


def sp_estimate(h_pm: np.ndarray, basis: SubspaceBasis) -> np.ndarray:
    """Orthogonal projection of the PM estimate on span(F)"""
    return basis.project(h_pm)


def contamination_covariance(
    graph: AssociationGraph,
    lsfc: LsfcMatrix,
    bases: List[List[SubspaceBasis]],
    l: int,
    k: int,
) -> np.ndarray:
    """Covariance of the co-pilot term left after projecting edge (l, k)"""
    P_k = bases[l][k].projector
    M = P_k.shape[0]
    cov = np.zeros((M, M), dtype=complex)
    for i in graph.copilots(k):
        basis_i = bases[l][i]
        cov += (lsfc.beta[l, i] * M / basis_i.dim) * (P_k @ basis_i.projector @ P_k)
    return cov


@dataclass
class EstimateSet:
    """Per-edge channel knowledge, stored as (L, M, K) blocks that are zero off the edge set"""

    mode: CsiMode
    blocks: np.ndarray  # (L, M, K)
    edges: frozenset

    def edge_vector(self, l: int, k: int) -> np.ndarray:
        if (l, k) not in self.edges:
            raise KeyError(f"({l}, {k}) is not an edge of the association graph")
        return self.blocks[l, :, k]

    def rrh_known(self, l: int, users: List[int]) -> np.ndarray:
        """(M, |U_l|) known channels at RRH l"""
        return self.blocks[l][:, users]

    @property
    def h_hat(self) -> Dict[Tuple[int, int], np.ndarray]:
        return {(l, k): self.blocks[l, :, k] for l, k in sorted(self.edges)}


def _project_columns(X: np.ndarray, mask: np.ndarray, M: int) -> np.ndarray:
    """Project every column of X on its own DFT subspace; mask is (n, M)"""
    F = dft_matrix(M)
    coefficients = (F.conj().T @ X) * mask.T
    return F @ coefficients


def estimate_channels(
    mode: CsiMode,
    channel_state: ChannelState,
    graph: AssociationGraph,
    book: Optional[PilotBook] = None,
    fields: Optional[List[np.ndarray]] = None,
) -> EstimateSet:
    """Estimates for every edge; PM and SP read the same pilot fields"""
    mode = CsiMode.parse(mode)
    L, M, K = channel_state.num_rrh, channel_state.antennas, channel_state.num_ue
    edges = frozenset(graph.edges())
    blocks = np.zeros((L, M, K), dtype=complex)

    if mode is CsiMode.IDEAL:
        for l, users in enumerate(graph.served):
            if users:
                blocks[l][:, users] = channel_state.rrh_blocks(l)[:, users]
        return EstimateSet(mode=mode, blocks=blocks, edges=edges)

    if book is None or fields is None:
        raise InvalidArgumentError(f"{mode.value} estimation needs a pilot book and pilot fields")
    for l, users in enumerate(graph.served):
        if not users:
            continue
        phis = book.pilots[:, graph.pilot[users]]
        h_pm = pm_estimate(fields[l], phis, book.snr, book.tau_p)
        if mode is CsiMode.SP:
            h_pm = _project_columns(h_pm, channel_state.nu_mask[l, users, :], M)
        blocks[l][:, users] = h_pm
    return EstimateSet(mode=mode, blocks=blocks, edges=edges)

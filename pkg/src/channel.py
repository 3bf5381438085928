"""
Channel - angular supports, DFT subspace bases and small-scale fading draws

Each UE-RRH channel lives in the span of a few columns of the unitary M-point
DFT matrix (single-ring local scattering):

    h[l, k] = sqrt(beta[l, k] * M / |S[l, k]|) * F[:, S[l, k]] @ nu[l, k]
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional

import numpy as np
from scipy.linalg import dft

from configs.system_config import channel_config

from .geometry import Layout, LsfcMatrix, SystemParams, pairwise_displacements
from .streams import complex_normal


@dataclass(frozen=True)
class AngularSupport:
    indices: np.ndarray  # sorted DFT column indices, all < M

    def __len__(self) -> int:
        return int(self.indices.size)


@dataclass(frozen=True)
class SubspaceBasis:
    basis: np.ndarray  # (M, |S|) orthonormal columns

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def project(self, x: np.ndarray) -> np.ndarray:
        return self.basis @ (self.basis.conj().T @ x)


@lru_cache(maxsize=16)
def dft_matrix(M: int) -> np.ndarray:
    """Unitary DFT, F[m, n] = exp(-j 2 pi m n / M) / sqrt(M)"""
    F = dft(M, scale="sqrtn")
    F.setflags(write=False)
    return F


def circular_distance(a, b):
    """Absolute angular distance on the circle, in [0, pi]"""
    return np.abs(np.mod(np.asarray(a) - b + math.pi, 2.0 * math.pi) - math.pi)


def angular_support(
    theta: float,
    delta: float,
    M: int,
    tol: float = channel_config["support_tolerance"],
) -> AngularSupport:
    """DFT angles 2 pi m / M within delta/2 of theta (ends inclusive); nearest one if none"""
    grid = 2.0 * math.pi * np.arange(M) / M
    distance = circular_distance(grid, theta)
    indices = np.flatnonzero(distance <= delta / 2.0 + tol)
    if indices.size == 0:
        indices = np.array([int(np.argmin(distance))])
    return AngularSupport(indices=indices)


def dft_submatrix(support: AngularSupport, M: int) -> SubspaceBasis:
    return SubspaceBasis(basis=dft_matrix(M)[:, support.indices])


def channel_from_coefficients(beta: float, basis: SubspaceBasis, M: int, nu: np.ndarray) -> np.ndarray:
    return math.sqrt(beta * M / basis.dim) * (basis.basis @ nu)


def draw_channel(
    beta: float,
    basis: SubspaceBasis,
    M: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """One M x 1 realization; E[||h||^2] = beta * M"""
    nu = complex_normal(rng, basis.dim)
    return channel_from_coefficients(beta, basis, M, nu)


@dataclass
class SubspaceMap:
    """Per-edge supports and bases; depends on geometry only"""

    supports: List[List[AngularSupport]]  # [l][k]
    bases: List[List[SubspaceBasis]]  # [l][k]
    mask: np.ndarray  # (L, K, M) bool, True on support
    sizes: np.ndarray  # (L, K) support sizes
    degenerate: np.ndarray  # (L, K) bool, coincident UE/RRH pairs

    @property
    def num_rrh(self) -> int:
        return self.mask.shape[0]

    @property
    def num_ue(self) -> int:
        return self.mask.shape[1]


def build_subspaces(layout: Layout, params: SystemParams) -> SubspaceMap:
    """Supports around the RRH-to-UE direction of every pair"""
    M = params.antennas_per_rrh
    disp = pairwise_displacements(layout)
    degenerate = (disp[..., 0] == 0.0) & (disp[..., 1] == 0.0)
    angles = np.mod(np.arctan2(disp[..., 1], disp[..., 0]), 2.0 * math.pi)
    angles = np.where(degenerate, 0.0, angles)

    L, K = angles.shape
    supports, bases = [], []
    mask = np.zeros((L, K, M), dtype=bool)
    for l in range(L):
        row_supports, row_bases = [], []
        for k in range(K):
            support = angular_support(angles[l, k], params.angular_spread, M)
            row_supports.append(support)
            row_bases.append(dft_submatrix(support, M))
            mask[l, k, support.indices] = True
        supports.append(row_supports)
        bases.append(row_bases)
    return SubspaceMap(
        supports=supports,
        bases=bases,
        mask=mask,
        sizes=mask.sum(axis=2),
        degenerate=degenerate,
    )


@dataclass
class ChannelState:
    supports: List[List[AngularSupport]]
    bases: List[List[SubspaceBasis]]
    H: np.ndarray  # (L*M, K)
    coefficients: np.ndarray  # (L, K, M) scaled DFT-domain coefficients, zero off support
    nu_mask: np.ndarray  # (L, K, M) support mask
    edge_scale: np.ndarray  # (L, K) beta * M / |S|
    antennas: int

    @property
    def num_rrh(self) -> int:
        return self.edge_scale.shape[0]

    @property
    def num_ue(self) -> int:
        return self.edge_scale.shape[1]

    def block(self, l: int, k: int) -> np.ndarray:
        M = self.antennas
        return self.H[l * M:(l + 1) * M, k]

    def edge_vector(self, l: int, k: int) -> np.ndarray:
        return self.block(l, k)

    def nu(self, l: int, k: int) -> np.ndarray:
        """The i.i.d. CN(0, 1) vector of edge (l, k)"""
        return self.coefficients[l, k, self.nu_mask[l, k]] / math.sqrt(self.edge_scale[l, k])

    def rrh_blocks(self, l: int) -> np.ndarray:
        """(M, K) channels of every UE at RRH l"""
        M = self.antennas
        return self.H[l * M:(l + 1) * M, :]


def assemble_channel_state(
    layout: Layout,
    lsfc: LsfcMatrix,
    params: SystemParams,
    rng: np.random.Generator,
    subspaces: Optional[SubspaceMap] = None,
) -> ChannelState:
    """Draw every edge at once; nu entries are filled in (l, k, m) order"""
    if subspaces is None:
        subspaces = build_subspaces(layout, params)
    M = params.antennas_per_rrh
    L, K = lsfc.beta.shape

    edge_scale = lsfc.beta * M / subspaces.sizes
    coefficients = np.zeros((L, K, M), dtype=complex)
    coefficients[subspaces.mask] = complex_normal(rng, int(subspaces.mask.sum()))
    coefficients *= np.sqrt(edge_scale)[:, :, None]

    # h[l, k] = F @ c[l, k]; F is symmetric so the batch product is c @ F
    blocks = coefficients @ dft_matrix(M)
    H = blocks.transpose(0, 2, 1).reshape(L * M, K)

    return ChannelState(
        supports=subspaces.supports,
        bases=subspaces.bases,
        H=H,
        coefficients=coefficients,
        nu_mask=subspaces.mask,
        edge_scale=edge_scale,
        antennas=M,
    )

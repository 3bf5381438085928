"""
Receivers - global zero-forcing and local MRC / LMMSE with cluster combining

A receive vector v_k is LM x 1, unit norm and zero outside the RRH blocks of
C_k. GZF builds it at cluster level from the known channels; the local
detectors build one M x 1 vector per serving RRH and fuse them with equal-gain
(EGC) or SINR-optimal weights.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Set, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, lstsq, svd

from configs.system_config import receiver_config

from .association import AssociationGraph, ClusterView, EdgeChannels, partial_csi_view
from .errors import DegenerateReceiverError, InvalidArgumentError
from .geometry import LsfcMatrix


class Detector(str, Enum):
    GZF = "GZF"
    MRC = "MRC"
    LMMSE = "LMMSE"


class Combiner(str, Enum):
    EGC = "EGC"
    OPTIMAL = "Optimal"


@dataclass(frozen=True)
class ReceiverScheme:
    detector: Detector
    combiner: Optional[Combiner] = None  # ignored for GZF

    def __post_init__(self):
        if self.detector is Detector.GZF:
            object.__setattr__(self, "combiner", None)
        elif self.combiner is None:
            raise InvalidArgumentError(f"{self.detector.value} needs a combiner")

    @property
    def label(self) -> str:
        if self.combiner is None:
            return self.detector.value
        return f"{self.detector.value}+{self.combiner.value}"

    @classmethod
    def parse(cls, label: str) -> "ReceiverScheme":
        """Accept 'GZF', 'MRC+EGC', 'LMMSE+Optimal' (case-insensitive)"""
        parts = [p.strip() for p in str(label).split("+")]
        detectors = {d.value.upper(): d for d in Detector}
        combiners = {c.value.upper(): c for c in Combiner}
        detector = detectors.get(parts[0].upper())
        if detector is None or len(parts) > 2:
            raise InvalidArgumentError(f"unknown receiver scheme: {label!r}")
        if detector is Detector.GZF:
            if len(parts) == 2:
                raise InvalidArgumentError(f"GZF takes no combiner: {label!r}")
            return cls(detector)
        if len(parts) != 2 or parts[1].upper() not in combiners:
            raise InvalidArgumentError(f"unknown receiver scheme: {label!r}")
        return cls(detector, combiners[parts[1].upper()])

    def __str__(self) -> str:
        return self.label


# =============================================================================
# GLOBAL ZERO-FORCING
# =============================================================================


def rank_truncation(singular_values, tol_rel: float = receiver_config["rank_tolerance"]) -> int:
    """Number of singular values above tol_rel times the largest"""
    s = np.asarray(singular_values, dtype=float)
    if s.size == 0 or s.max() <= 0:
        return 0
    return int(np.count_nonzero(s > tol_rel * s.max()))


def gzf_local(
    view: ClusterView,
    ue: int = -1,
    tol: float = receiver_config["rank_tolerance"],
    degenerate_tol: float = receiver_config["degenerate_tolerance"],
) -> np.ndarray:
    """Unit-norm |C_k| M vector: desired channel projected off the interference span"""
    h = view.desired
    h_norm = np.linalg.norm(h)
    if h_norm == 0:
        raise DegenerateReceiverError(ue, "desired channel is zero")
    B = view.interference
    projected = h
    if B.shape[1] > 0:
        U, s, _ = svd(B, full_matrices=False)
        r = rank_truncation(s, tol)
        if r:
            A = U[:, :r]
            projected = h - A @ (A.conj().T @ h)
    norm = np.linalg.norm(projected)
    if norm < degenerate_tol * h_norm:
        raise DegenerateReceiverError(ue, "desired channel lies in the interference span")
    return projected / norm


def gzf_receiver(
    view: ClusterView,
    num_rrh: int,
    tol: float = receiver_config["rank_tolerance"],
    ue: int = -1,
) -> np.ndarray:
    """LM x 1 GZF vector with zero blocks outside the cluster"""
    return view.expand(gzf_local(view, ue=ue, tol=tol), num_rrh)


# =============================================================================
# LOCAL DETECTORS
# =============================================================================


def unknown_interference_variance(
    beta_row: np.ndarray,
    served: List[int],
    snr: float,
    active: Optional[np.ndarray] = None,
) -> float:
    """sigma_l^2 = 1 + SNR * sum of beta[l, j] over transmitting UEs j not in U_l"""
    excluded = np.ones(beta_row.size, dtype=bool)
    excluded[list(served)] = False
    if active is not None:
        excluded &= active
    return float(1.0 + snr * beta_row[excluded].sum())


def mrc_local(h_hat: np.ndarray) -> np.ndarray:
    return np.array(h_hat, dtype=complex, copy=True)


def lmmse_local_all(known: np.ndarray, sigma_sq: float, snr: float) -> np.ndarray:
    """(sigma^2 I + SNR Hk Hk^H)^-1 Hk for every known column at once"""
    M = known.shape[0]
    A = sigma_sq * np.eye(M, dtype=complex) + snr * (known @ known.conj().T)
    return cho_solve(cho_factor(A, lower=True), known)


def lmmse_local(known: np.ndarray, sigma_sq: float, snr: float, k: int) -> np.ndarray:
    """LMMSE vector for column k of the known channels at one RRH"""
    if not sigma_sq > 0:
        raise InvalidArgumentError("sigma_sq must be positive")
    M = known.shape[0]
    A = sigma_sq * np.eye(M, dtype=complex) + snr * (known @ known.conj().T)
    return cho_solve(cho_factor(A, lower=True), known[:, k])


LocalVectors = Dict[Tuple[int, int], np.ndarray]


def local_vectors(
    detector: Detector,
    graph: AssociationGraph,
    channels: EdgeChannels,
    sigma_sq: np.ndarray,
    snr: float,
) -> LocalVectors:
    """v[l, k] for every edge, computed RRH by RRH from local knowledge only"""
    vectors: LocalVectors = {}
    for l, users in enumerate(graph.served):
        if not users:
            continue
        known = np.column_stack([channels.edge_vector(l, j) for j in users])
        if detector is Detector.MRC:
            V = known.copy()
        elif detector is Detector.LMMSE:
            V = lmmse_local_all(known, float(sigma_sq[l]), snr)
        else:
            raise InvalidArgumentError(f"{detector.value} is not a local detector")
        for column, k in enumerate(users):
            vectors[(l, k)] = V[:, column]
    return vectors


# =============================================================================
# CLUSTER COMBINING
# =============================================================================


@dataclass
class CombinerState:
    a: np.ndarray  # (|C_k|,) g[l, k, k]
    G: np.ndarray  # (|C_k|, |U(C_k)| - 1) known interference gains
    D: np.ndarray  # (|C_k|, |C_k|) diag(sigma_l^2 ||v[l, k]||^2)
    gamma: np.ndarray  # D + SNR G G^H
    sigma_sq: np.ndarray  # (|C_k|,) sigma_l^2 of the cluster RRHs
    cluster: List[int]
    interferers: List[int]  # column order of G


def combiner_state(
    local: LocalVectors,
    channels: EdgeChannels,
    graph: AssociationGraph,
    sigma_sq: np.ndarray,
    snr: float,
    k: int,
) -> CombinerState:
    if graph.is_outage(k):
        raise InvalidArgumentError(f"UE {k} is in outage")
    cluster = graph.clusters[k]
    interferers = [j for j in graph.cluster_users(k) if j != k]
    column = {j: c for c, j in enumerate(interferers)}

    n = len(cluster)
    a = np.zeros(n, dtype=complex)
    G = np.zeros((n, len(interferers)), dtype=complex)
    d = np.zeros(n)
    for i, l in enumerate(cluster):
        v = local[(l, k)]
        a[i] = np.vdot(v, channels.edge_vector(l, k))
        for j in graph.served[l]:
            if j != k:
                G[i, column[j]] = np.vdot(v, channels.edge_vector(l, j))
        d[i] = sigma_sq[l] * np.real(np.vdot(v, v))

    D = np.diag(d).astype(complex)
    gamma = D + snr * (G @ G.conj().T)
    return CombinerState(
        a=a,
        G=G,
        D=D,
        gamma=gamma,
        sigma_sq=np.asarray(sigma_sq)[cluster],
        cluster=list(cluster),
        interferers=interferers,
    )


def egc_weights(size: int) -> np.ndarray:
    if size < 1:
        raise InvalidArgumentError("cluster must be non-empty")
    return np.ones(size, dtype=complex)


def optimal_weights(a: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """w = Gamma^-1 a over the rows with a nonzero local receiver; zero elsewhere"""
    keep = np.real(np.diag(gamma)) > 0
    w = np.zeros(a.size, dtype=complex)
    if not keep.any():
        return w
    sub = gamma[np.ix_(keep, keep)]
    try:
        w[keep] = cho_solve(cho_factor(sub, lower=True), a[keep])
    except LinAlgError:
        w[keep] = lstsq(sub, a[keep])[0]
    return w


def nominal_sinr(w: np.ndarray, a: np.ndarray, gamma: np.ndarray, snr: float) -> float:
    """SNR |w^H a|^2 / (w^H Gamma w), the objective the optimal weights maximize"""
    denominator = float(np.real(np.vdot(w, gamma @ w)))
    if denominator <= 0:
        return 0.0
    return float(snr * abs(np.vdot(w, a)) ** 2 / denominator)


def assemble_global(
    blocks: List[np.ndarray],
    w: np.ndarray,
    cluster: List[int],
    num_rrh: int,
    antennas: int,
    ue: int = -1,
) -> np.ndarray:
    """Stack w[l] v[l, k] over the cluster, normalize, zero-fill the other RRHs"""
    M = antennas
    v = np.zeros(num_rrh * M, dtype=complex)
    for weight, block, l in zip(w, blocks, cluster):
        v[l * M:(l + 1) * M] = weight * block
    norm = np.linalg.norm(v)
    if norm == 0:
        raise DegenerateReceiverError(ue, "every weighted local receiver is zero")
    return v / norm


# =============================================================================
# RECEIVER BANK
# =============================================================================


@dataclass
class ReceiverBank:
    scheme: ReceiverScheme
    V: np.ndarray  # (LM, K), zero columns for outage and degenerate UEs
    degenerate: Set[int]

    def vector(self, k: int) -> np.ndarray:
        return self.V[:, k]


def interference_variances(graph: AssociationGraph, lsfc: LsfcMatrix, snr: float) -> np.ndarray:
    """sigma_l^2 for every RRH, always from the true LSFCs"""
    return np.array([
        unknown_interference_variance(lsfc.beta[l], graph.served[l], snr, graph.active)
        for l in range(graph.num_rrh)
    ])


def build_receiver_bank(
    scheme: ReceiverScheme,
    graph: AssociationGraph,
    channels: EdgeChannels,
    lsfc: LsfcMatrix,
    snr: float,
    antennas: int,
    local: Optional[LocalVectors] = None,
    sigma_sq: Optional[np.ndarray] = None,
) -> ReceiverBank:
    """Receive vectors of every admitted UE; degenerate UEs keep a zero column"""
    L, K = lsfc.beta.shape
    M = antennas
    V = np.zeros((L * M, K), dtype=complex)
    degenerate: Set[int] = set()

    if scheme.detector is Detector.GZF:
        for k in range(K):
            if graph.is_outage(k):
                continue
            try:
                V[:, k] = gzf_receiver(partial_csi_view(graph, channels, k, M), L, ue=k)
            except DegenerateReceiverError:
                degenerate.add(k)
        return ReceiverBank(scheme=scheme, V=V, degenerate=degenerate)

    if sigma_sq is None:
        sigma_sq = interference_variances(graph, lsfc, snr)
    if local is None:
        local = local_vectors(scheme.detector, graph, channels, sigma_sq, snr)

    for k in range(K):
        if graph.is_outage(k):
            continue
        cluster = graph.clusters[k]
        if scheme.combiner is Combiner.EGC:
            w = egc_weights(len(cluster))
        else:
            state = combiner_state(local, channels, graph, sigma_sq, snr, k)
            w = optimal_weights(state.a, state.gamma)
        try:
            V[:, k] = assemble_global([local[(l, k)] for l in cluster], w, cluster, L, M, ue=k)
        except DegenerateReceiverError:
            degenerate.add(k)
    return ReceiverBank(scheme=scheme, V=V, degenerate=degenerate)

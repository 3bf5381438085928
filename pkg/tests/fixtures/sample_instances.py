"""
Hand-built instances for tests: association graphs, channel states with chosen
angular supports, edge-vector containers and synthetic sweep results.
"""

from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.association import OUTAGE, AssociationGraph, _served_from_clusters
from src.channel import AngularSupport, ChannelState, dft_matrix, dft_submatrix
from src.engine import SweepPoint, SweepResult, TrialResult
from src.geometry import SystemParams
from src.streams import complex_normal


class FakeChannels:
    """edge_vector() over an explicit {(l, k): vector} dict"""

    def __init__(self, vectors: Dict[Tuple[int, int], np.ndarray]):
        self.vectors = vectors

    def edge_vector(self, l: int, k: int) -> np.ndarray:
        return self.vectors[(l, k)]


def make_graph(
    clusters: List[List[int]],
    pilots: Sequence[int],
    num_rrh: int,
    num_pilots: int,
    order: Optional[Sequence[int]] = None,
) -> AssociationGraph:
    """Graph from explicit clusters; the leader is the first RRH listed, [] means outage"""
    K = len(clusters)
    leader = np.array([c[0] if c else OUTAGE for c in clusters], dtype=int)
    pilot = np.array([p if c else OUTAGE for p, c in zip(pilots, clusters)], dtype=int)
    sorted_clusters = [sorted(c) for c in clusters]
    return AssociationGraph(
        leader=leader,
        pilot=pilot,
        clusters=sorted_clusters,
        served=_served_from_clusters(sorted_clusters, num_rrh),
        order=np.arange(K) if order is None else np.asarray(order),
        num_pilots=num_pilots,
    )


def full_graph(num_rrh: int, num_ue: int) -> AssociationGraph:
    """Every RRH serves every UE, pilots 0..K-1"""
    return make_graph([list(range(num_rrh)) for _ in range(num_ue)], list(range(num_ue)), num_rrh, num_ue)


def channel_state_from_supports(
    beta: np.ndarray,
    supports: List[List[Sequence[int]]],
    M: int,
    rng: np.random.Generator,
) -> ChannelState:
    """Channel state whose edge (l, k) lives on the DFT columns supports[l][k]"""
    L, K = beta.shape
    mask = np.zeros((L, K, M), dtype=bool)
    support_objs, bases = [], []
    for l in range(L):
        row_s, row_b = [], []
        for k in range(K):
            indices = np.array(sorted(supports[l][k]), dtype=int)
            mask[l, k, indices] = True
            support = AngularSupport(indices=indices)
            row_s.append(support)
            row_b.append(dft_submatrix(support, M))
        support_objs.append(row_s)
        bases.append(row_b)

    edge_scale = beta * M / mask.sum(axis=2)
    coefficients = np.zeros((L, K, M), dtype=complex)
    coefficients[mask] = complex_normal(rng, int(mask.sum()))
    coefficients *= np.sqrt(edge_scale)[:, :, None]
    blocks = coefficients @ dft_matrix(M)
    H = blocks.transpose(0, 2, 1).reshape(L * M, K)
    return ChannelState(
        supports=support_objs,
        bases=bases,
        H=H,
        coefficients=coefficients,
        nu_mask=mask,
        edge_scale=edge_scale,
        antennas=M,
    )


def make_trial(
    se: Sequence[float],
    scheme: str = "GZF",
    csi_mode: str = "IDEAL",
    layout_index: int = 0,
    outage: Sequence[int] = (),
) -> TrialResult:
    se = np.asarray(se, dtype=float)
    return TrialResult(
        scheme=scheme,
        csi_mode=csi_mode,
        layout_index=layout_index,
        sinr=np.zeros((1, se.size)),
        rate=se / 0.9,
        se=se,
        outage=list(outage),
    )


def make_sweep(
    axis: str,
    values: List[Optional[float]],
    curves: Dict[Tuple[str, str], List[float]],
) -> SweepResult:
    """One single-UE layout per point whose SE equals the requested sum SE"""
    schemes = sorted({s for s, _ in curves})
    modes = sorted({m for _, m in curves})
    params = SystemParams(num_ue=1, num_layouts=1)
    points = []
    for i, value in enumerate(values):
        layouts = {
            key: [make_trial([curve[i]], key[0], key[1])] for key, curve in curves.items()
        }
        points.append(SweepPoint(index=i, value=value, params=params, layouts=layouts))
    return SweepResult(axis=axis, values=list(values), schemes=schemes, csi_modes=modes, points=points)

"""
Association - leader election, pilot assignment and dynamic cluster formation

Produces the bipartite UE-RRH graph: clusters C_k (RRHs serving UE k), served
sets U_l (UEs served by RRH l) and the pilot index t(k) of every admitted UE.
"""

import json
from dataclasses import dataclass
from typing import Any, Dict, List, Protocol, Set, Tuple

import numpy as np

from .console import log
from .errors import InvalidArgumentError, InvalidStateError
from .geometry import LsfcMatrix, SystemParams

OUTAGE = -1


class EdgeChannels(Protocol):
    """Anything that can hand out the M x 1 vector of a graph edge"""

    def edge_vector(self, l: int, k: int) -> np.ndarray: ...


@dataclass
class AssociationGraph:
    leader: np.ndarray  # (K,) RRH index or OUTAGE
    pilot: np.ndarray  # (K,) pilot index or OUTAGE
    clusters: List[List[int]]  # C_k, sorted RRH indices
    served: List[List[int]]  # U_l, sorted UE indices
    order: np.ndarray  # UE processing permutation
    num_pilots: int

    @property
    def num_ue(self) -> int:
        return int(self.leader.size)

    @property
    def num_rrh(self) -> int:
        return len(self.served)

    @property
    def outage_set(self) -> Set[int]:
        return {int(k) for k in np.flatnonzero(self.leader == OUTAGE)}

    @property
    def active(self) -> np.ndarray:
        """(K,) bool, True for UEs that were admitted"""
        return self.leader != OUTAGE

    def is_outage(self, k: int) -> bool:
        return bool(self.leader[k] == OUTAGE)

    def edges(self) -> List[Tuple[int, int]]:
        return [(l, k) for l, users in enumerate(self.served) for k in users]

    def has_edge(self, l: int, k: int) -> bool:
        return l in self.clusters[k]

    def cluster_users(self, k: int) -> List[int]:
        """U(C_k): UEs served by at least one RRH of the cluster of k"""
        users: Set[int] = set()
        for l in self.clusters[k]:
            users.update(self.served[l])
        return sorted(users)

    def copilots(self, k: int) -> List[int]:
        """Other admitted UEs transmitting the pilot of k"""
        if self.is_outage(k):
            return []
        same = np.flatnonzero((self.pilot == self.pilot[k]) & self.active)
        return [int(i) for i in same if i != k]

    def validate(self, lsfc: LsfcMatrix, threshold: float, max_cluster_size: int) -> None:
        """Raise InvalidStateError on the first broken invariant"""
        K = self.num_ue
        for k in range(K):
            cluster = self.clusters[k]
            if self.is_outage(k):
                if cluster or self.pilot[k] != OUTAGE:
                    raise InvalidStateError(f"outage UE {k} has a cluster or pilot")
                continue
            if len(cluster) > max_cluster_size:
                raise InvalidStateError(f"UE {k}: |C_k| = {len(cluster)} exceeds {max_cluster_size}")
            if int(self.leader[k]) not in cluster:
                raise InvalidStateError(f"UE {k}: leader not in cluster")
            if not 0 <= self.pilot[k] < self.num_pilots:
                raise InvalidStateError(f"UE {k}: pilot {self.pilot[k]} out of range")
            for l in cluster:
                if k not in self.served[l]:
                    raise InvalidStateError(f"edge ({l}, {k}) missing from U_{l}")
                if lsfc.beta[l, k] < threshold:
                    raise InvalidStateError(f"edge ({l}, {k}) below the QoS threshold")
        for l, users in enumerate(self.served):
            if len(users) > self.num_pilots:
                raise InvalidStateError(f"RRH {l}: |U_l| = {len(users)} exceeds tau_p")
            pilots = [int(self.pilot[k]) for k in users]
            if len(set(pilots)) != len(pilots):
                raise InvalidStateError(f"RRH {l}: pilot reused among served UEs")
            for k in users:
                if l not in self.clusters[k]:
                    raise InvalidStateError(f"edge ({l}, {k}) missing from C_{k}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "num_pilots": self.num_pilots,
            "order": [int(k) for k in self.order],
            "leader": [int(x) for x in self.leader],
            "pilot": [int(x) for x in self.pilot],
            "clusters": [list(c) for c in self.clusters],
            "served": [list(u) for u in self.served],
            "outage": sorted(self.outage_set),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AssociationGraph":
        return cls(
            leader=np.asarray(data["leader"], dtype=int),
            pilot=np.asarray(data["pilot"], dtype=int),
            clusters=[sorted(int(l) for l in c) for c in data["clusters"]],
            served=[sorted(int(k) for k in u) for u in data["served"]],
            order=np.asarray(data["order"], dtype=int),
            num_pilots=int(data["num_pilots"]),
        )


def _served_from_clusters(clusters: List[List[int]], num_rrh: int) -> List[List[int]]:
    served: List[List[int]] = [[] for _ in range(num_rrh)]
    for k, cluster in enumerate(clusters):
        for l in cluster:
            served[l].append(k)
    return [sorted(users) for users in served]


def elect_leaders(
    lsfc: LsfcMatrix,
    params: SystemParams,
    rng: np.random.Generator,
) -> AssociationGraph:
    """Greedy pass in random UE order; each UE takes its strongest feasible RRH"""
    beta = lsfc.beta
    L, K = beta.shape
    tau_p = params.pilot_dim
    threshold = params.qos_gain_threshold

    order = rng.permutation(K)
    pilot_used = np.zeros((L, tau_p), dtype=bool)
    pilot_held = np.zeros(tau_p, dtype=bool)  # held by any admitted UE
    leader = np.full(K, OUTAGE, dtype=int)
    pilot = np.full(K, OUTAGE, dtype=int)

    for k in order:
        feasible = (beta[:, k] >= threshold) & ~pilot_used.all(axis=1)
        if not feasible.any():
            continue
        # argmax keeps the first maximum, so ties go to the lower RRH index
        candidates = np.where(feasible, beta[:, k], -np.inf)
        l = int(np.argmax(candidates))
        # lowest free pilot at l, taking one nobody holds yet when there is one
        free = ~pilot_used[l]
        unheld = free & ~pilot_held
        t = int(np.argmax(unheld)) if unheld.any() else int(np.argmax(free))
        pilot_used[l, t] = True
        pilot_held[t] = True
        leader[k] = l
        pilot[k] = t

    clusters = [[int(leader[k])] if leader[k] != OUTAGE else [] for k in range(K)]
    num_outage = int((leader == OUTAGE).sum())
    if num_outage:
        log("Association", f"{num_outage} of {K} UEs in outage")
    return AssociationGraph(
        leader=leader,
        pilot=pilot,
        clusters=clusters,
        served=_served_from_clusters(clusters, L),
        order=order,
        num_pilots=tau_p,
    )


def _pilot_occupancy(graph: AssociationGraph) -> np.ndarray:
    occupancy = np.zeros((graph.num_rrh, graph.num_pilots), dtype=bool)
    for l, users in enumerate(graph.served):
        for k in users:
            t = int(graph.pilot[k])
            if t == OUTAGE or occupancy[l, t]:
                raise InvalidStateError(f"RRH {l}: pilot {t} claimed twice or by an outage UE")
            occupancy[l, t] = True
    return occupancy


def form_clusters(
    partial: AssociationGraph,
    lsfc: LsfcMatrix,
    params: SystemParams,
) -> AssociationGraph:
    """Enroll RRHs per UE in decreasing beta while pilot t(k) is free and |C_k| < Q"""
    beta = lsfc.beta
    L, K = beta.shape
    if partial.num_ue != K or partial.num_rrh != L:
        raise InvalidStateError("partial graph does not match the LSFC dimensions")
    for k in range(K):
        if partial.is_outage(k):
            if partial.clusters[k]:
                raise InvalidStateError(f"outage UE {k} already has a cluster")
            continue
        if int(partial.leader[k]) not in partial.clusters[k]:
            raise InvalidStateError(f"UE {k}: leader missing from its partial cluster")

    occupancy = _pilot_occupancy(partial)
    threshold = params.qos_gain_threshold
    Q = params.max_cluster_size
    clusters = [list(c) for c in partial.clusters]

    for k in partial.order:
        k = int(k)
        if partial.is_outage(k):
            continue
        t = int(partial.pilot[k])
        # stable sort on -beta: equal gains keep the lower RRH index first
        for l in np.argsort(-beta[:, k], kind="stable"):
            l = int(l)
            if len(clusters[k]) >= Q:
                break
            if beta[l, k] < threshold:
                break
            if l in clusters[k] or occupancy[l, t]:
                continue
            occupancy[l, t] = True
            clusters[k].append(l)

    clusters = [sorted(c) for c in clusters]
    return AssociationGraph(
        leader=partial.leader.copy(),
        pilot=partial.pilot.copy(),
        clusters=clusters,
        served=_served_from_clusters(clusters, L),
        order=partial.order.copy(),
        num_pilots=partial.num_pilots,
    )


def associate(lsfc: LsfcMatrix, params: SystemParams, rng: np.random.Generator) -> AssociationGraph:
    """Leader election followed by cluster formation"""
    graph = form_clusters(elect_leaders(lsfc, params, rng), lsfc, params)
    graph.validate(lsfc, params.qos_gain_threshold, params.max_cluster_size)
    return graph


@dataclass
class ClusterView:
    """Cluster-local channel matrix: RRH blocks of C_k, UE columns of U(C_k)"""

    matrix: np.ndarray  # (|C_k| M, |U(C_k)|)
    cluster: List[int]
    users: List[int]
    column: int  # column of the UE the view was built for
    antennas: int

    @property
    def desired(self) -> np.ndarray:
        return self.matrix[:, self.column]

    @property
    def interference(self) -> np.ndarray:
        return np.delete(self.matrix, self.column, axis=1)

    def expand(self, local: np.ndarray, num_rrh: int) -> np.ndarray:
        """Reinsert zero blocks for RRHs outside the cluster"""
        M = self.antennas
        full = np.zeros(num_rrh * M, dtype=complex)
        for a, l in enumerate(self.cluster):
            full[l * M:(l + 1) * M] = local[a * M:(a + 1) * M]
        return full


def partial_csi_view(
    graph: AssociationGraph,
    channels: EdgeChannels,
    k: int,
    antennas: int,
) -> ClusterView:
    """Known channels of cluster C_k; blocks (l, j) outside the edge set are zero"""
    if graph.is_outage(k):
        raise InvalidArgumentError(f"UE {k} is in outage and has no cluster view")
    M = antennas
    cluster = graph.clusters[k]
    users = graph.cluster_users(k)
    position = {j: i for i, j in enumerate(users)}
    matrix = np.zeros((len(cluster) * M, len(users)), dtype=complex)
    for a, l in enumerate(cluster):
        for j in graph.served[l]:
            matrix[a * M:(a + 1) * M, position[j]] = channels.edge_vector(l, j)
    return ClusterView(
        matrix=matrix,
        cluster=list(cluster),
        users=users,
        column=position[k],
        antennas=M,
    )

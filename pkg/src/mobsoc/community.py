"""Community detection and network metrics on similarity graphs."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.cluster.hierarchy import linkage
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from . import kernels
from .similarity import SimilarityGraph, SimilarityMatrix

# relative tolerance when comparing betweenness and modularity values
_TIE = 1e-9


class EdgelessGraphError(ValueError):
    """Raised where an operation needs at least one edge."""


@dataclass(frozen=True)
class Partition:
    labels: tuple[int, ...]

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "Partition":
        """Relabel communities 0, 1, ... in order of first appearance."""
        remap: dict[int, int] = {}
        return cls(tuple(remap.setdefault(int(c), len(remap)) for c in labels))

    @property
    def community_count(self) -> int:
        return len(set(self.labels))

    def communities(self) -> list[list[int]]:
        groups: list[list[int]] = [[] for _ in range(self.community_count)]
        for vertex, c in enumerate(self.labels):
            groups[c].append(vertex)
        return groups

    def to_csv(self, vertices: Sequence[str]) -> str:
        lines = ["node_id,community"]
        lines.extend(f"{v},{c}" for v, c in zip(vertices, self.labels))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class GirvanNewmanResult:
    history: list[tuple[int, Partition, float]]  # (edges removed, partition, Q)
    best: Partition
    best_modularity: float
    removals: int


@dataclass(frozen=True)
class PathLengthResult:
    mean: float
    connected_pairs: int
    disconnected_pairs: int


@dataclass(frozen=True)
class GraphMetrics:
    clustering_coefficient: float
    avg_path_length: float
    avg_path_length_weighted: float
    modularity: float


@dataclass(frozen=True)
class Dendrogram:
    """Agglomerative merge tree in scipy linkage layout.

    Row ``i`` of ``merges`` joins clusters ``a`` and ``b`` (leaves are
    ``0..n-1``, the cluster made by row ``i`` is ``n + i``) at ``heights[i]``.
    """

    leaves: tuple[str, ...]
    merges: np.ndarray  # (n-1, 2) int
    heights: np.ndarray  # (n-1,)
    sizes: np.ndarray = field(repr=False)

    def to_newick(self) -> str:
        n = len(self.leaves)
        if n == 1:
            return f"{self.leaves[0]};"
        height = np.concatenate([np.zeros(n), self.heights])
        text: dict[int, str] = {i: self.leaves[i] for i in range(n)}
        for i, (a, b) in enumerate(self.merges.tolist()):
            h = height[n + i]
            left = f"{text.pop(a)}:{h - height[a]:.10g}"
            right = f"{text.pop(b)}:{h - height[b]:.10g}"
            text[n + i] = f"({left},{right})"
        return text[2 * n - 2] + ";"


def _csr(graph: SimilarityGraph):
    indptr, nbrs, eids = graph.csr()
    return indptr, nbrs, eids


def edge_betweenness(graph: SimilarityGraph) -> dict[tuple[int, int], float]:
    """Shortest-path betweenness of every edge, keyed by ``(u, v)`` indices.

    Paths are counted in hops; edge weights are ignored.
    """
    if graph.n_edges == 0:
        raise EdgelessGraphError("edge betweenness needs at least one edge")
    eb = _edge_betweenness_array(graph, *_csr(graph), np.ones(graph.n_edges, dtype=np.uint8))
    return dict(zip(graph.edge_list(), eb.tolist()))


def _edge_betweenness_array(graph, indptr, nbrs, eids, alive, sources=None):
    if sources is None:
        sources = np.arange(graph.n_vertices, dtype=np.int64)
    return kernels.edge_betweenness(indptr, nbrs, eids, alive, graph.n_edges, sources) / 2.0


def modularity(graph: SimilarityGraph, partition: Partition | Sequence[int]) -> float:
    """Newman modularity of an unweighted partition."""
    m = graph.n_edges
    if m == 0:
        raise EdgelessGraphError("modularity is undefined without edges")
    labels = np.asarray(partition.labels if isinstance(partition, Partition) else partition)
    if len(labels) != graph.n_vertices:
        raise ValueError("partition does not cover the graph's vertices")
    k = int(labels.max()) + 1
    inside = labels[graph.u] == labels[graph.v]
    e_in = np.bincount(labels[graph.u][inside], minlength=k) / m
    a = np.bincount(labels, weights=graph.degrees(), minlength=k) / (2.0 * m)
    return float(np.sum(e_in) - np.sum(a * a))


def girvan_newman(
    graph: SimilarityGraph,
    patience: int | None = None,
    max_removals: int | None = None,
) -> GirvanNewmanResult:
    """Divisive clustering by repeatedly cutting the highest-betweenness edge.

    Betweenness is recomputed after every removal (only inside the component
    that lost the edge; the others are unaffected).  The component partition
    is recorded at the start and whenever a removal splits a component; the
    recorded partition with the highest modularity wins, earlier (fewer
    communities) on ties.  ``patience`` stops after that many splits without
    improvement, ``max_removals`` caps the number of removed edges.  Ties in
    betweenness go to the lowest edge index.
    """
    if graph.n_vertices < 2:
        raise ValueError("girvan_newman needs at least 2 vertices")
    if graph.n_edges == 0:
        raise EdgelessGraphError("girvan_newman needs at least one edge")
    indptr, nbrs, eids = _csr(graph)
    alive = np.ones(graph.n_edges, dtype=np.uint8)
    labels = kernels.component_labels(indptr, nbrs, eids, alive)
    eb = _edge_betweenness_array(graph, indptr, nbrs, eids, alive)

    start = Partition.from_labels(labels)
    best_q = modularity(graph, start)
    best = start
    history = [(0, start, best_q)]
    stale = 0
    removals = 0
    n_comp = int(labels.max()) + 1
    while alive.any():
        if max_removals is not None and removals >= max_removals:
            break
        top = eb.max()
        e = int(np.flatnonzero(eb >= top - _TIE * max(1.0, top))[0])
        alive[e] = 0
        eb[e] = -np.inf
        removals += 1
        a, b = int(graph.u[e]), int(graph.v[e])
        comp_a = kernels.component_of(indptr, nbrs, eids, alive, a)
        touched = comp_a
        if not np.any(comp_a == b):
            comp_b = kernels.component_of(indptr, nbrs, eids, alive, b)
            labels[comp_b] = n_comp
            n_comp += 1
            touched = np.concatenate([comp_a, comp_b])
            partition = Partition.from_labels(labels)
            q = modularity(graph, partition)
            history.append((removals, partition, q))
            if q > best_q + _TIE:
                best_q, best, stale = q, partition, 0
            else:
                stale += 1
            if patience is not None and stale >= patience:
                break
        # refresh betweenness of edges inside the affected component(s)
        in_touched = np.zeros(graph.n_vertices, dtype=bool)
        in_touched[touched] = True
        mask = in_touched[graph.u] & (alive == 1)
        if mask.any():
            part = _edge_betweenness_array(graph, indptr, nbrs, eids, alive, np.sort(touched))
            eb[mask] = part[mask]
    return GirvanNewmanResult(history, best, best_q, removals)


def clustering_coefficient(graph: SimilarityGraph, exclude_low_degree: bool = False) -> float:
    """Mean local clustering coefficient.

    Vertices of degree < 2 count as 0, or are left out of the mean when
    ``exclude_low_degree`` is set.
    """
    n = graph.n_vertices
    if n == 0:
        return 0.0
    deg = graph.degrees()
    if graph.n_edges == 0:
        return 0.0
    ones = np.ones(graph.n_edges)
    adj = csr_matrix((ones, (graph.u, graph.v)), shape=(n, n))
    adj = adj + adj.T
    if n <= 4000:
        dense = adj.toarray()
        tri2 = np.einsum("ij,ij->i", dense @ dense, dense)
    else:
        tri2 = np.asarray((adj @ adj).multiply(adj).sum(axis=1)).ravel()
    pairs = deg * (deg - 1.0)
    local = np.divide(tri2, pairs, out=np.zeros(n), where=deg >= 2)
    if exclude_low_degree:
        sel = deg >= 2
        return float(local[sel].mean()) if sel.any() else 0.0
    return float(local.mean())


def avg_path_length(graph: SimilarityGraph, mode: str = "unweighted") -> PathLengthResult:
    """Mean shortest-path distance over connected vertex pairs.

    ``mode="weighted"`` uses edge length ``1 - weight``.
    """
    n = graph.n_vertices
    if n == 0:
        raise ValueError("empty graph")
    if mode == "unweighted":
        lengths = np.ones(graph.n_edges)
    elif mode == "weighted":
        lengths = np.clip(1.0 - graph.weights, 0.0, None)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    # zero-length edges must survive as explicit entries, so no sparse arithmetic here
    adj = csr_matrix(
        (np.concatenate([lengths, lengths]),
         (np.concatenate([graph.u, graph.v]), np.concatenate([graph.v, graph.u]))),
        shape=(n, n),
    )
    dist = shortest_path(adj, method="D", directed=False, unweighted=(mode == "unweighted"))
    iu = np.triu_indices(n, 1)
    d = dist[iu]
    finite = np.isfinite(d)
    connected = int(finite.sum())
    if connected == 0:
        raise ValueError("no connected vertex pair")
    return PathLengthResult(float(d[finite].mean()), connected, int(d.size - connected))


def random_baseline(n: int, m: int, seed: int) -> SimilarityGraph:
    """Uniform simple graph with ``n`` vertices and exactly ``m`` unit-weight edges."""
    total = n * (n - 1) // 2
    if m < 0 or m > total:
        raise ValueError(f"m must be in [0, {total}], got {m}")
    rng = np.random.default_rng(seed)
    picks = np.sort(rng.choice(total, size=m, replace=False)) if m else np.zeros(0, np.int64)
    # decode pair index p -> (i, j), i < j, row-major over the upper triangle
    iu, ju = np.triu_indices(n, 1)
    u, v = iu[picks].astype(np.int64), ju[picks].astype(np.int64)
    vertices = tuple(f"r{i}" for i in range(n))
    return SimilarityGraph(vertices, u, v, np.ones(m), None)


def hierarchical_dendrogram(matrix: SimilarityMatrix) -> Dendrogram:
    """Average-linkage clustering on distance ``1 - Sim``."""
    m = len(matrix.users)
    if m < 2:
        raise ValueError("need at least 2 users")
    iu = np.triu_indices(m, 1)
    dist = np.clip(1.0 - matrix.scores[iu], 0.0, None)
    Z = linkage(dist, method="average")
    merges = Z[:, :2].astype(np.int64)
    heights = np.maximum.accumulate(Z[:, 2])
    return Dendrogram(matrix.users, merges, heights, Z[:, 3].astype(np.int64))


def cut_dendrogram(d: Dendrogram, height: float) -> Partition:
    """Clusters whose internal merges all lie strictly below ``height``."""
    if height < 0:
        raise ValueError("height must be >= 0")
    n = len(d.leaves)
    parent = list(range(2 * n - 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, (a, b) in enumerate(d.merges.tolist()):
        if d.heights[i] < height:
            parent[find(a)] = n + i
            parent[find(b)] = n + i
    return Partition.from_labels([find(i) for i in range(n)])


def graph_metrics(graph: SimilarityGraph, partition: Partition) -> GraphMetrics:
    def _apl(mode):
        try:
            return avg_path_length(graph, mode).mean
        except ValueError:
            return float("nan")

    try:
        q = modularity(graph, partition)
    except EdgelessGraphError:
        q = float("nan")
    return GraphMetrics(clustering_coefficient(graph), _apl("unweighted"), _apl("weighted"), q)

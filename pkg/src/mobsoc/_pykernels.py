"""Pure-Python graph kernels; reference and fallback for ``_ckernels``.

Graphs are given in CSR form ``(indptr, nbrs, eids)`` plus an ``alive``
mask over edge ids; dead edges are skipped.
"""
from collections import deque

import numpy as np


def edge_betweenness(indptr, nbrs, eids, alive, n_edges, sources):
    """Brandes accumulation of shortest-path dependencies from ``sources``.

    Returns per-edge sums over ordered (source, target) pairs; halve for
    unordered pairs when every vertex of a component is a source.
    """
    indptr = indptr.tolist()
    nbrs = nbrs.tolist()
    eids = eids.tolist()
    alive = alive.tolist()
    n = len(indptr) - 1
    eb = [0.0] * n_edges
    dist = [-1] * n
    sigma = [0.0] * n
    delta = [0.0] * n
    for s in np.asarray(sources).tolist():
        order = [s]
        dist[s] = 0
        sigma[s] = 1.0
        queue = deque([s])
        while queue:
            v = queue.popleft()
            dv = dist[v] + 1
            sv = sigma[v]
            for p in range(indptr[v], indptr[v + 1]):
                if not alive[eids[p]]:
                    continue
                w = nbrs[p]
                if dist[w] < 0:
                    dist[w] = dv
                    queue.append(w)
                    order.append(w)
                if dist[w] == dv:
                    sigma[w] += sv
        for w in reversed(order):
            dw = dist[w] - 1
            coeff = (1.0 + delta[w]) / sigma[w]
            for p in range(indptr[w], indptr[w + 1]):
                e = eids[p]
                if not alive[e]:
                    continue
                v = nbrs[p]
                if dist[v] == dw:
                    c = sigma[v] * coeff
                    eb[e] += c
                    delta[v] += c
        for w in order:
            dist[w] = -1
            sigma[w] = 0.0
            delta[w] = 0.0
    return np.array(eb, dtype=np.float64)


def component_of(indptr, nbrs, eids, alive, source):
    """Vertices reachable from ``source`` in BFS order."""
    seen = {source}
    order = [source]
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for p in range(indptr[v], indptr[v + 1]):
            if alive[eids[p]]:
                w = int(nbrs[p])
                if w not in seen:
                    seen.add(w)
                    order.append(w)
                    queue.append(w)
    return np.array(order, dtype=np.int64)


def component_labels(indptr, nbrs, eids, alive):
    """Component index per vertex, numbered by smallest member."""
    n = len(indptr) - 1
    labels = np.full(n, -1, dtype=np.int64)
    count = 0
    for s in range(n):
        if labels[s] < 0:
            labels[component_of(indptr, nbrs, eids, alive, s)] = count
            count += 1
    return labels

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled graph kernels; same contracts as ``_pykernels``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef cnp.int64_t i64


def edge_betweenness(const i64[::1] indptr, const i64[::1] nbrs, const i64[::1] eids,
                     const cnp.uint8_t[::1] alive, Py_ssize_t n_edges, sources):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef i64[::1] src = np.ascontiguousarray(sources, dtype=np.int64)
    out = np.zeros(n_edges, dtype=np.float64)
    cdef double[::1] eb = out
    cdef i64[::1] dist = np.full(n, -1, dtype=np.int64)
    cdef double[::1] sigma = np.zeros(n, dtype=np.float64)
    cdef double[::1] delta = np.zeros(n, dtype=np.float64)
    cdef i64[::1] order = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t si, head, tail, p, i
    cdef i64 s, v, w, e, dv, dw
    cdef double sv, coeff, c
    with nogil:
        for si in range(src.shape[0]):
            s = src[si]
            dist[s] = 0
            sigma[s] = 1.0
            order[0] = s
            head = 0
            tail = 1
            while head < tail:
                v = order[head]
                head += 1
                dv = dist[v] + 1
                sv = sigma[v]
                for p in range(indptr[v], indptr[v + 1]):
                    if not alive[eids[p]]:
                        continue
                    w = nbrs[p]
                    if dist[w] < 0:
                        dist[w] = dv
                        order[tail] = w
                        tail += 1
                    if dist[w] == dv:
                        sigma[w] += sv
            for i in range(tail - 1, -1, -1):
                w = order[i]
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
            for i in range(tail):
                w = order[i]
                dist[w] = -1
                sigma[w] = 0.0
                delta[w] = 0.0
    return out


cdef Py_ssize_t _bfs(const i64[::1] indptr, const i64[::1] nbrs, const i64[::1] eids,
                     const cnp.uint8_t[::1] alive, i64 source, i64[::1] mark, i64 label,
                     i64[::1] order) noexcept nogil:
    cdef Py_ssize_t head = 0, tail = 1, p
    cdef i64 v, w
    order[0] = source
    mark[source] = label
    while head < tail:
        v = order[head]
        head += 1
        for p in range(indptr[v], indptr[v + 1]):
            if alive[eids[p]]:
                w = nbrs[p]
                if mark[w] != label:
                    mark[w] = label
                    order[tail] = w
                    tail += 1
    return tail


def component_of(const i64[::1] indptr, const i64[::1] nbrs, const i64[::1] eids,
                 const cnp.uint8_t[::1] alive, i64 source):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef i64[::1] mark = np.full(n, -1, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t size = _bfs(indptr, nbrs, eids, alive, source, mark, 1, order)
    return order[:size].copy()


def component_labels(const i64[::1] indptr, const i64[::1] nbrs, const i64[::1] eids,
                     const cnp.uint8_t[::1] alive):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    labels = np.full(n, -1, dtype=np.int64)
    cdef i64[::1] mark = labels
    cdef i64[::1] order = np.empty(n, dtype=np.int64)
    cdef i64 count = 0
    cdef Py_ssize_t s
    for s in range(n):
        if mark[s] < 0:
            _bfs(indptr, nbrs, eids, alive, s, mark, count, order)
            count += 1
    return labels

"""Weighted-cosine behavioral similarity between profiles."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .profile import BehavioralProfile, UniverseMismatchError

# users per block in the all-pairs computation
_BLOCK = 64


@dataclass(frozen=True)
class SimilarityMatrix:
    users: tuple[str, ...]
    scores: np.ndarray  # (m, m), symmetric

    def __len__(self) -> int:
        return len(self.users)

    def pair_scores(self) -> np.ndarray:
        """Upper-triangle scores, row-major."""
        iu = np.triu_indices(len(self.users), 1)
        return self.scores[iu]


@dataclass(frozen=True)
class SimilarityGraph:
    """Undirected graph on ``vertices``; edge ``e`` joins ``u[e] < v[e]``."""

    vertices: tuple[str, ...]
    u: np.ndarray
    v: np.ndarray
    weights: np.ndarray
    threshold: float | None = None

    @classmethod
    def from_edges(cls, vertices, edges, weights=None, threshold=None) -> "SimilarityGraph":
        """Build from ``(a, b)`` pairs given as vertex names or indices."""
        vertices = tuple(vertices)
        index = {name: i for i, name in enumerate(vertices)}
        seen: dict[tuple[int, int], int] = {}
        for a, b in edges:
            a = index[a] if a in index else int(a)
            b = index[b] if b in index else int(b)
            if a == b:
                raise ValueError("self-loops are not allowed")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen[key] = len(seen)
        pairs = np.array(list(seen), dtype=np.int64).reshape(-1, 2)
        if weights is None:
            w = np.ones(len(pairs))
        else:
            w = np.asarray(list(weights), dtype=float)
        return cls(vertices, pairs[:, 0].copy(), pairs[:, 1].copy(), w, threshold)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.u)

    def edge_list(self) -> list[tuple[int, int]]:
        return list(zip(self.u.tolist(), self.v.tolist()))

    def degrees(self) -> np.ndarray:
        return np.bincount(np.concatenate([self.u, self.v]), minlength=self.n_vertices)

    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Adjacency in CSR form: ``(indptr, neighbors, edge_ids)``.

        Neighbors of each vertex are sorted by vertex index.
        """
        n, m = self.n_vertices, self.n_edges
        src = np.concatenate([self.u, self.v])
        dst = np.concatenate([self.v, self.u])
        eid = np.concatenate([np.arange(m), np.arange(m)])
        order = np.lexsort((dst, src))
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return indptr, dst[order].astype(np.int64), eid[order].astype(np.int64)

    def to_edge_list_text(self) -> str:
        buf = io.StringIO()
        for a, b, w in zip(self.u.tolist(), self.v.tolist(), self.weights.tolist()):
            buf.write(f"{self.vertices[a]} {self.vertices[b]} {w!r}\n")
        return buf.getvalue()


@dataclass(frozen=True)
class ScoreHistogram:
    bin_edges: np.ndarray
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def fractions(self) -> np.ndarray:
        total = self.total
        return self.counts / total if total else np.zeros(len(self.counts))

    def to_csv(self) -> str:
        lines = ["bin_low,bin_high,count"]
        for lo, hi, c in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts):
            lines.append(f"{lo:.6g},{hi:.6g},{int(c)}")
        return "\n".join(lines) + "\n"

    def to_lognorm_csv(self) -> str:
        """Normalized counts with their base-10 logs (blank for empty bins)."""
        lines = ["bin_low,bin_high,fraction,log10_fraction"]
        for lo, hi, f in zip(self.bin_edges[:-1], self.bin_edges[1:], self.fractions()):
            log = f"{math.log10(f):.12g}" if f > 0 else ""
            lines.append(f"{lo:.6g},{hi:.6g},{f:.12g},{log}")
        return "\n".join(lines) + "\n"


def _check_universe(profiles: Sequence[BehavioralProfile]) -> None:
    first = profiles[0]
    for p in profiles[1:]:
        if p.universe is not first.universe and p.universe.ids != first.universe.ids:
            raise UniverseMismatchError(
                f"profiles {first.user!r} and {p.user!r} use different location universes"
            )


def pairwise_similarity(X: BehavioralProfile, Y: BehavioralProfile) -> float:
    """Sum over component pairs of ``w_x * w_y * |x . y|``.

    Evaluated with correctly rounded summation so the result does not depend
    on argument order.
    """
    _check_universe([X, Y])
    terms = []
    for wx, x in zip(X.weights.tolist(), X.vectors):
        for wy, y in zip(Y.weights.tolist(), Y.vectors):
            terms.append(wx * wy * abs(math.fsum((x * y).tolist())))
    return min(1.0, math.fsum(terms))


def _padded(profiles: Sequence[BehavioralProfile]) -> tuple[np.ndarray, np.ndarray]:
    m, n = len(profiles), profiles[0].vectors.shape[1]
    k = max(p.k for p in profiles)
    W = np.zeros((m, k))
    V = np.zeros((m, k, n))
    for i, p in enumerate(profiles):
        W[i, : p.k] = p.weights
        V[i, : p.k] = p.vectors
    return W, V


def similarity_matrix(profiles: Sequence[BehavioralProfile]) -> SimilarityMatrix:
    """All-pairs similarity, computed blockwise with one matrix product per block.

    The upper triangle is mirrored so the result is exactly symmetric and the
    diagonal holds each user's self-similarity ``sum(w**2)``.
    """
    if len(profiles) < 2:
        raise ValueError(f"fewer than 2 users ({len(profiles)}) for similarity")
    _check_universe(profiles)
    W, V = _padded(profiles)
    m, k, n = V.shape
    flat = V.reshape(m * k, n)
    scores = np.zeros((m, m))
    for lo in range(0, m, _BLOCK):
        hi = min(m, lo + _BLOCK)
        dots = np.abs(flat[lo * k : hi * k] @ flat[lo * k :].T)
        dots = dots.reshape(hi - lo, k, m - lo, k)
        block = np.einsum("ia,iajb,jb->ij", W[lo:hi], dots, W[lo:], optimize=True)
        scores[lo:hi, lo:] = block
    scores = np.triu(scores, 1)
    scores = scores + scores.T
    np.clip(scores, 0.0, 1.0, out=scores)
    scores[np.diag_indices(m)] = (W * W).sum(axis=1)
    return SimilarityMatrix(tuple(p.user for p in profiles), scores)


def similarity_histogram(matrix: SimilarityMatrix, bins: int = 10) -> ScoreHistogram:
    """Count user pairs per equal-width score bin over ``[0, 1]``.

    Bins are half-open except the last, which includes 1.0.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    scores = matrix.pair_scores()
    idx = np.minimum(np.floor(scores * bins).astype(np.int64), bins - 1)
    counts = np.bincount(idx, minlength=bins)
    return ScoreHistogram(np.linspace(0.0, 1.0, bins + 1), counts)


def similarity_cdf(matrix: SimilarityMatrix) -> list[tuple[float, float]]:
    scores = matrix.pair_scores()
    if scores.size == 0:
        raise ValueError("no user pairs")
    values, counts = np.unique(scores, return_counts=True)
    cum = np.cumsum(counts) / scores.size
    cum[-1] = 1.0
    return list(zip(values.tolist(), cum.tolist()))


def cdf_to_csv(cdf: Sequence[tuple[float, float]]) -> str:
    lines = ["score,cum_fraction"]
    lines.extend(f"{s!r},{c!r}" for s, c in cdf)
    return "\n".join(lines) + "\n"


def build_similarity_graph(matrix: SimilarityMatrix, threshold: float = 0.5) -> SimilarityGraph:
    """Edge between every pair scoring at least ``threshold``."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must be in [0, 1]")
    iu, ju = np.triu_indices(len(matrix.users), 1)
    s = matrix.scores[iu, ju]
    keep = s >= threshold
    return SimilarityGraph(
        matrix.users, iu[keep].astype(np.int64), ju[keep].astype(np.int64), s[keep].copy(), threshold
    )

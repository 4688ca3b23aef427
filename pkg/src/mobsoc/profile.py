"""Association matrices and SVD eigen-behavior profiles."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .trace_io import LocationUniverse, SessionRecord, TimeWindow, Trace

SVD_TOL = 1e-8
RANK_TOL = 1e-10


class NoActivityError(ValueError):
    """Raised for an association matrix with no online time at all."""


class UniverseMismatchError(ValueError):
    """Raised when data refers to locations outside the shared universe."""


@dataclass(frozen=True)
class AssociationMatrix:
    user: str
    values: np.ndarray  # (t, n)
    slot_length: int
    universe: LocationUniverse

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.universe.ids)
        for row in self.values:
            writer.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


@dataclass(frozen=True)
class SvdResult:
    U: np.ndarray  # (t, r)
    S: np.ndarray  # (r,)
    V: np.ndarray  # (n, r)

    @property
    def rank(self) -> int:
        return len(self.S)


@dataclass(frozen=True)
class BehavioralProfile:
    user: str
    vectors: np.ndarray  # (k, n), unit rows
    weights: np.ndarray  # (k,)
    captured_power: float
    universe: LocationUniverse

    @property
    def k(self) -> int:
        return len(self.weights)

    def to_dict(self) -> dict:
        return {
            "user": self.user,
            "k": self.k,
            "weights": [float(w) for w in self.weights],
            "vectors": [[float(x) for x in v] for v in self.vectors],
            "captured_power": float(self.captured_power),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def build_association_matrix(
    sessions: Sequence[SessionRecord],
    window: TimeWindow,
    universe: LocationUniverse,
    user: str | None = None,
) -> AssociationMatrix:
    """Per-slot fraction of online time spent at each location.

    Slots with no online time give all-zero rows.
    """
    t, n = window.n_slots, len(universe)
    seconds = np.zeros((t, n))
    slot = window.slot_length
    for s in sessions:
        if user is None:
            user = s.node_id
        elif s.node_id != user:
            raise ValueError(f"sessions mix nodes {user!r} and {s.node_id!r}")
        try:
            col = universe.index[s.location_id]
        except KeyError:
            raise UniverseMismatchError(f"location {s.location_id!r} not in universe") from None
        a = max(s.start_time, window.start) - window.start
        b = min(s.end_time, window.end) - window.start
        while a < b:
            row = a // slot
            edge = min(b, (row + 1) * slot)
            seconds[row, col] += edge - a
            a = edge
    totals = seconds.sum(axis=1, keepdims=True)
    values = np.divide(seconds, totals, out=np.zeros_like(seconds), where=totals > 0)
    return AssociationMatrix(user or "", values, slot, universe)


def _flip_signs(U: np.ndarray, V: np.ndarray) -> None:
    # largest-magnitude entry of every right singular vector made positive
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    V *= signs
    U *= signs


def compute_svd(A: AssociationMatrix | np.ndarray) -> SvdResult:
    """Thin SVD truncated to numerical rank, with a fixed sign convention."""
    values = A.values if isinstance(A, AssociationMatrix) else np.asarray(A, dtype=float)
    if not np.any(values):
        raise NoActivityError("association matrix is all zero")
    U, S, Vt = np.linalg.svd(values, full_matrices=False)
    r = int(np.count_nonzero(S > RANK_TOL * S[0]))
    U = np.ascontiguousarray(U[:, :r])
    V = np.ascontiguousarray(Vt[:r].T)
    _flip_signs(U, V)
    return SvdResult(U, S[:r].copy(), V)


def cumulative_power(S: Sequence[float], k: int) -> float:
    """Share of the squared singular-value mass held by the first ``k`` values."""
    S = np.asarray(S, dtype=float)
    if not 1 <= k <= len(S):
        raise ValueError(f"k must be in [1, {len(S)}], got {k}")
    power = S * S
    if k == len(S):
        return 1.0
    return float(power[:k].sum() / power.sum())


def profile_from_svd(
    svd: SvdResult,
    power_threshold: float = 0.9,
    max_components: int = 7,
    user: str = "",
    universe: LocationUniverse | None = None,
) -> BehavioralProfile:
    """Keep the leading right singular vectors until ``power_threshold`` is met.

    Weights are per-component power fractions over the full rank and are not
    renormalized after truncation.
    """
    if not 0 < power_threshold <= 1:
        raise ValueError("power_threshold must be in (0, 1]")
    if max_components < 1:
        raise ValueError("max_components must be positive")
    power = svd.S ** 2
    fractions = power / power.sum()
    cum = np.cumsum(fractions)
    cum[-1] = 1.0
    k = int(np.searchsorted(cum, power_threshold - 1e-12) + 1)
    k = min(k, max_components, svd.rank)
    weights = fractions[:k].copy()
    captured = float(cum[k - 1])
    if universe is None:
        universe = LocationUniverse.from_ids(str(i) for i in range(svd.V.shape[0]))
    return BehavioralProfile(user, np.ascontiguousarray(svd.V[:, :k].T), weights, captured, universe)


def build_profiles(
    trace: Trace,
    universe: LocationUniverse,
    window: TimeWindow | None = None,
    nodes: Iterable[str] | None = None,
    power_threshold: float = 0.9,
    max_components: int = 7,
) -> tuple[list[BehavioralProfile], list[str]]:
    """Profile every node with online time in ``window``.

    Returns the profiles (sorted by node id) and the excluded node ids.
    """
    window = window or trace.window
    per_node = trace.by_node()
    if nodes is None:
        nodes = sorted(per_node)
    profiles, excluded = [], []
    for node in nodes:
        A = build_association_matrix(per_node.get(node, ()), window, universe, user=node)
        try:
            svd = compute_svd(A)
        except NoActivityError:
            excluded.append(node)
            continue
        profiles.append(profile_from_svd(svd, power_threshold, max_components, node, universe))
    return profiles, excluded

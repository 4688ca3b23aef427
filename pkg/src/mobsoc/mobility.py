"""Synthetic session traces from Random Direction and TVC mobility models.

Nodes are online (associated with the access point of their current grid
cell) only while paused; travel time is offline.  Every node draws from its
own random stream seeded by ``(seed, node_index)``, so adding nodes never
changes the trajectories of existing ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .trace_io import DAY, SessionRecord, TimeWindow, Trace, normalize_node_sessions

GENERATOR_VERSION = "1"
WEEK = 7 * DAY


@dataclass(frozen=True)
class WorldGrid:
    width: float = 1000.0
    height: float = 1000.0
    cell_size: float = 100.0

    def __post_init__(self):
        if self.cell_size <= 0 or self.width <= 0 or self.height <= 0:
            raise ValueError("world dimensions must be positive")
        for side in (self.width, self.height):
            ratio = side / self.cell_size
            if abs(ratio - round(ratio)) > 1e-9:
                raise ValueError(f"cell_size {self.cell_size} does not divide {side}")

    @property
    def cols(self) -> int:
        return int(round(self.width / self.cell_size))

    @property
    def rows(self) -> int:
        return int(round(self.height / self.cell_size))

    @property
    def bounds(self) -> "Rect":
        return Rect(0.0, 0.0, self.width, self.height)


@dataclass(frozen=True)
class Rect:
    x0: float
    y0: float
    x1: float
    y1: float

    def intersects(self, other: "Rect") -> bool:
        """Positive-area overlap (shared edges do not count)."""
        return self.x0 < other.x1 and other.x0 < self.x1 and self.y0 < other.y1 and other.y0 < self.y1

    def contains(self, x: float, y: float) -> bool:
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1

    def inside(self, world: WorldGrid) -> bool:
        return self.x0 >= 0 and self.y0 >= 0 and self.x1 <= world.width and self.y1 <= world.height


def _cell_index(coord: float, cell: float, count: int) -> int:
    # closed-lower convention: a point on a cell border belongs to the lower cell
    if coord <= 0:
        return 0
    return min(count - 1, math.ceil(coord / cell) - 1)


def map_position_to_location(pos: tuple[float, float], world: WorldGrid) -> str:
    x, y = pos
    if not (0 <= x <= world.width and 0 <= y <= world.height):
        raise ValueError(f"position {pos} outside the {world.width}x{world.height} world")
    col = _cell_index(x, world.cell_size, world.cols)
    row = _cell_index(y, world.cell_size, world.rows)
    return f"cell_{col}_{row}"


def node_name(index: int) -> str:
    return f"node{index:05d}"


def _node_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def _finish(sessions_by_node: list[list[SessionRecord]], duration: int, slot_length: int) -> Trace:
    out: list[SessionRecord] = []
    for sessions in sessions_by_node:
        out.extend(normalize_node_sessions(sessions))
    return Trace(tuple(out), TimeWindow(0, duration, slot_length))


def _emit(sessions, node, loc, t0, t1, duration):
    a = math.floor(t0)
    b = math.floor(min(t1, duration))
    if b > a:
        sessions.append(SessionRecord(node, loc, a, b))


# ---------------------------------------------------------------- Random Direction


@dataclass(frozen=True)
class RdConfig:
    node_count: int = 100
    v_min: float = 1.0
    v_max: float = 5.0
    pause_time: float = 300.0
    sim_duration: int = 28 * DAY
    world: WorldGrid = field(default_factory=WorldGrid)
    seed: int = 1
    slot_length: int = DAY
    pause_at: str = "boundary"

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError("node_count must be positive")
        if not 0 < self.v_min <= self.v_max:
            raise ValueError("need 0 < v_min <= v_max")
        if self.pause_at not in ("boundary", "leg"):
            raise ValueError("pause_at must be 'boundary' or 'leg'")
        if self.pause_time < 0:
            raise ValueError("pause_time must be >= 0")
        TimeWindow(0, self.sim_duration, self.slot_length)


def _inward_direction(rng, x, y, world: WorldGrid) -> tuple[float, float]:
    while True:
        theta = rng.uniform(0.0, 2.0 * math.pi)
        dx, dy = math.cos(theta), math.sin(theta)
        if (x <= 0 and dx <= 0) or (x >= world.width and dx >= 0):
            continue
        if (y <= 0 and dy <= 0) or (y >= world.height and dy >= 0):
            continue
        return dx, dy


def _travel_to_boundary(x, y, dx, dy, world: WorldGrid) -> tuple[float, float, float]:
    tx = (world.width - x) / dx if dx > 0 else (-x / dx if dx < 0 else math.inf)
    ty = (world.height - y) / dy if dy > 0 else (-y / dy if dy < 0 else math.inf)
    dist = min(tx, ty)
    nx = min(max(x + dist * dx, 0.0), world.width)
    ny = min(max(y + dist * dy, 0.0), world.height)
    # snap the wall that was hit so the next direction points inward
    if tx <= ty:
        nx = world.width if dx > 0 else 0.0
    if ty <= tx:
        ny = world.height if dy > 0 else 0.0
    return nx, ny, dist


def _rd_node(config: RdConfig, index: int) -> list[SessionRecord]:
    node = node_name(index)
    sessions: list[SessionRecord] = []
    if config.pause_time <= 0:
        return sessions
    rng = _node_rng(config.seed, index)
    world = config.world
    x, y = rng.uniform(0, world.width), rng.uniform(0, world.height)
    t = 0.0
    while True:
        dx, dy = _inward_direction(rng, x, y, world)
        speed = rng.uniform(config.v_min, config.v_max)
        bx, by, dist = _travel_to_boundary(x, y, dx, dy, world)
        if config.pause_at == "leg":
            # stop at a uniform point of the leg instead of at the wall
            frac = rng.uniform()
            dist *= frac
            bx = min(max(x + dist * dx, 0.0), world.width)
            by = min(max(y + dist * dy, 0.0), world.height)
        x, y = bx, by
        t += dist / speed
        if t >= config.sim_duration:
            break
        loc = map_position_to_location((x, y), world)
        _emit(sessions, node, loc, t, t + config.pause_time, config.sim_duration)
        t += config.pause_time
        if t >= config.sim_duration:
            break
    return sessions


def generate_random_direction(config: RdConfig) -> Trace:
    """Random Direction: travel to the world edge, pause there online, repeat.

    With ``pause_at="leg"`` the node instead stops at a uniformly drawn point
    of each leg, which spreads pauses over the whole grid.
    """
    return _finish(
        [_rd_node(config, i) for i in range(config.node_count)],
        config.sim_duration,
        config.slot_length,
    )


# ---------------------------------------------------------------- TVC


@dataclass(frozen=True)
class Period:
    """``[start, end)`` seconds from the start of the week, with area probabilities.

    ``probs`` covers the node's own communities in order, then whole-world
    roaming as the last entry.
    """

    start: int
    end: int
    probs: tuple[float, ...]


def default_schedule() -> tuple[Period, ...]:
    """Weekday daytime / weekday night / weekend, over (primary, hub, roaming)."""
    periods = []
    hour = 3600
    for day in range(5):
        base = day * DAY
        periods.append(Period(base, base + 8 * hour, (0.65, 0.30, 0.05)))
        periods.append(Period(base + 8 * hour, base + 18 * hour, (0.85, 0.10, 0.05)))
        periods.append(Period(base + 18 * hour, base + DAY, (0.65, 0.30, 0.05)))
    periods.append(Period(5 * DAY, WEEK, (0.75, 0.20, 0.05)))
    return tuple(periods)


@dataclass(frozen=True)
class TvcConfig:
    node_count: int = 100
    schedule: tuple[Period, ...] = field(default_factory=default_schedule)
    v_min: float = 1.0
    v_max: float = 5.0
    pause_time: float = 2000.0
    sim_duration: int = 28 * DAY
    world: WorldGrid = field(default_factory=WorldGrid)
    seed: int = 1
    slot_length: int = DAY

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError("node_count must be positive")
        if not 0 < self.v_min <= self.v_max:
            raise ValueError("need 0 < v_min <= v_max")
        if self.pause_time <= 0:
            raise ValueError("pause_time must be positive")
        TimeWindow(0, self.sim_duration, self.slot_length)
        periods = sorted(self.schedule, key=lambda p: p.start)
        edge = 0
        widths = {len(p.probs) for p in periods}
        if len(widths) != 1:
            raise ValueError("all periods need probability vectors of the same length")
        for p in periods:
            if p.start != edge or p.end <= p.start:
                raise ValueError("schedule periods must tile one week without gaps")
            if abs(sum(p.probs) - 1.0) > 1e-9 or min(p.probs) < 0:
                raise ValueError(f"period {p.start}-{p.end} probabilities do not sum to 1")
            edge = p.end
        if edge != WEEK:
            raise ValueError("schedule periods must tile exactly one week")

    @property
    def n_areas(self) -> int:
        return len(self.schedule[0].probs)


@dataclass(frozen=True)
class CommunityAssignment:
    communities: tuple[tuple[Rect, ...], ...]  # per node
    planted_label: tuple[int, ...]
    mode: str
    groups: int


def assign_communities(
    node_count: int,
    mode: str = "homogeneous",
    world: WorldGrid | None = None,
    seed: int = 1,
    groups: int = 1,
    community_cells: int = 1,
) -> CommunityAssignment:
    """Give every node a primary community and a shared hub community.

    ``homogeneous`` gives all nodes the same primary (the one-group case).
    ``grouped`` splits nodes into ``groups`` contiguous, equal-size groups
    with pairwise disjoint primaries.  Communities are squares of
    ``community_cells`` x ``community_cells`` grid cells placed on distinct
    blocks of the grid.
    """
    world = world or WorldGrid()
    if mode == "homogeneous":
        groups = 1
    elif mode != "grouped":
        raise ValueError(f"unknown assignment mode {mode!r}")
    if not 1 <= groups <= node_count:
        raise ValueError(f"groups must be in [1, {node_count}]")
    bx, by = world.cols // community_cells, world.rows // community_cells
    if community_cells < 1 or bx * by < groups + 1:
        raise ValueError(
            f"cannot place {groups + 1} disjoint {community_cells}-cell communities "
            f"in a {world.cols}x{world.rows} grid"
        )
    rng = np.random.default_rng([seed, 0x7C0])
    blocks = rng.choice(bx * by, size=groups + 1, replace=False)
    side = community_cells * world.cell_size
    rects = [
        Rect((b % bx) * side, (b // bx) * side, (b % bx + 1) * side, (b // bx + 1) * side)
        for b in blocks.tolist()
    ]
    hub = rects[-1]
    labels = tuple(i * groups // node_count for i in range(node_count))
    communities = tuple((rects[g], hub) for g in labels)
    return CommunityAssignment(communities, labels, mode, groups)


class _Schedule:
    def __init__(self, periods: Sequence[Period]):
        periods = sorted(periods, key=lambda p: p.start)
        self.starts = np.array([p.start for p in periods], dtype=float)
        self.cum = [np.cumsum(p.probs) for p in periods]
        for c in self.cum:
            c[-1] = 1.0

    def pick(self, t: float, u: float) -> int:
        i = int(np.searchsorted(self.starts, t % WEEK, side="right") - 1)
        return int(np.searchsorted(self.cum[i], u, side="right"))


def _tvc_node(config: TvcConfig, areas: Sequence[Rect], schedule: _Schedule, index: int):
    node = node_name(index)
    rng = _node_rng(config.seed, index)
    world = config.world
    sessions: list[SessionRecord] = []
    batch = 512
    draws = rng.random((batch, 4))
    j = 0

    def waypoint(area: Rect, r1: float, r2: float):
        return area.x0 + r1 * (area.x1 - area.x0), area.y0 + r2 * (area.y1 - area.y0)

    t = 0.0
    first = True
    x = y = 0.0
    while t < config.sim_duration:
        if j == batch:
            draws = rng.random((batch, 4))
            j = 0
        u_area, r1, r2, u_speed = draws[j].tolist()
        j += 1
        a = schedule.pick(t, u_area)
        area = areas[a] if a < len(areas) else world.bounds
        nx, ny = waypoint(area, r1, r2)
        if first:
            first = False
        else:
            speed = config.v_min + u_speed * (config.v_max - config.v_min)
            t += math.hypot(nx - x, ny - y) / speed
            if t >= config.sim_duration:
                break
        x, y = nx, ny
        loc = map_position_to_location((x, y), world)
        _emit(sessions, node, loc, t, t + config.pause_time, config.sim_duration)
        t += config.pause_time
    return sessions


def generate_tvc(config: TvcConfig, assignment: CommunityAssignment) -> Trace:
    """Time-variant community model.

    Each epoch picks a target area from the probabilities of the current
    weekly period, moves to a uniform waypoint inside it and pauses there.
    """
    if len(assignment.communities) != config.node_count:
        raise ValueError("assignment does not match node_count")
    schedule = _Schedule(config.schedule)
    per_node = []
    for i, areas in enumerate(assignment.communities):
        if len(areas) + 1 != config.n_areas:
            raise ValueError(
                f"node {i} has {len(areas)} communities but schedule expects {config.n_areas - 1}"
            )
        for r in areas:
            if not r.inside(config.world):
                raise ValueError(f"community {r} lies outside the world")
        per_node.append(_tvc_node(config, areas, schedule, i))
    return _finish(per_node, config.sim_duration, config.slot_length)

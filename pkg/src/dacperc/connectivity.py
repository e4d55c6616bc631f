"""Monochromatic connectivity: crossings, extremal paths, circuits.

Conventions used throughout:

* A *crossing* of a rectangle is a self-avoiding path of same-coloured
  vertices inside the rectangle joining its two opposite sides -- left to
  right for horizontal, top to bottom for vertical -- with consecutive
  vertices adjacent in the requested mode.
* Black crossings are increasing in ``r``; each replica therefore has a
  sharp threshold, returned by :func:`crossing_threshold` with the exact
  float semantics ``has_crossing at r  <=>  r >= threshold``.
* The *lowest* white horizontal star crossing and the *leftmost* black
  vertical crossing are computed by frontier exploration, so the set of
  colours read never strays past the returned path.  An optional
  :class:`AccessLog` records every read for locality audits.

The below-region order behind "lowest" is combinatorial rather than
geometric: a vertex is *above* a path when it can be reached from the top
side by an ordinary-adjacent walk inside the rectangle that avoids the path.
Ordinary floods cannot slip through a star path (nor star floods through an
ordinary one), which is the same planar matching fact that powers the
crossing dichotomy, so this reproduces the intuitive picture while staying
well defined when star diagonals touch.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .bonds import ClusterLabeling
from .colouring import Colour, ColourConfig, recolour_at
from .lattice import (
    AdjacencyMode,
    AnnulusRegion,
    RectRegion,
    Topology,
    Vertex,
    matching_mode,
    neighbor_offsets,
)


class Direction(enum.Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"


@dataclass(frozen=True)
class CrossingSpec:
    rect: RectRegion
    direction: Direction
    colour: Colour
    mode: AdjacencyMode

    def side_sets(self) -> tuple[list[Vertex], list[Vertex]]:
        """(start, target) vertices: left/right columns or top/bottom rows."""
        r = self.rect
        if self.direction is Direction.HORIZONTAL:
            start = [(r.x0, y) for y in range(r.y0, r.y1 + 1)]
            target = [(r.x1, y) for y in range(r.y0, r.y1 + 1)]
        else:
            start = [(x, r.y1) for x in range(r.x0, r.x1 + 1)]
            target = [(x, r.y0) for x in range(r.x0, r.x1 + 1)]
        return start, target


@dataclass(frozen=True)
class PathResult:
    vertices: tuple[Vertex, ...]
    mode: AdjacencyMode
    colour: Colour


class AccessLog:
    """Records every colour read performed by an extremal-path search."""

    def __init__(self) -> None:
        self.entries: list[tuple[Vertex, Colour]] = []

    def record(self, v: Vertex, c: Colour) -> None:
        self.entries.append((v, c))

    def vertices(self) -> list[Vertex]:
        return [v for v, _ in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


# --- basic searches --------------------------------------------------------


def _bfs_reach(
    seeds: Iterable[Vertex], allowed: set[Vertex], offsets: Sequence[tuple[int, int]]
) -> set[Vertex]:
    """Vertices of ``allowed`` reachable from ``seeds`` (seeds must be allowed)."""
    seen = {s for s in seeds if s in allowed}
    queue = deque(sorted(seen))
    while queue:
        x, y = queue.popleft()
        for dx, dy in offsets:
            w = (x + dx, y + dy)
            if w in allowed and w not in seen:
                seen.add(w)
                queue.append(w)
    return seen


def _bfs_path(
    sources: Iterable[Vertex],
    allowed: set[Vertex],
    offsets: Sequence[tuple[int, int]],
    is_target: Callable[[Vertex], bool],
) -> list[Vertex] | None:
    """Deterministic BFS path from ``sources`` to the target predicate."""
    parent: dict[Vertex, Vertex | None] = {}
    queue: deque[Vertex] = deque()
    for s in sorted(set(sources)):
        if s in allowed:
            parent[s] = None
            queue.append(s)
    while queue:
        v = queue.popleft()
        if is_target(v):
            path = [v]
            while parent[path[-1]] is not None:
                path.append(parent[path[-1]])  # type: ignore[arg-type]
            path.reverse()
            return path
        x, y = v
        for dx, dy in offsets:
            w = (x + dx, y + dy)
            if w in allowed and w not in parent:
                parent[w] = v
                queue.append(w)
    return None


def has_crossing(x: ColourConfig, s: CrossingSpec) -> bool:
    """Does the colouring contain the requested monochromatic crossing?"""
    geom = x.clusters.geometry
    mask = x.black_mask()
    want_black = s.colour is Colour.BLACK
    offsets = neighbor_offsets(x.clusters.topology, s.mode)
    start, target = s.side_sets()
    rect = s.rect

    def coloured(v: Vertex) -> bool:
        return bool(mask[geom.vertex_index(v)]) == want_black

    allowed = {v for v in rect.vertices() if coloured(v)}
    targets = set(target) & allowed
    if not targets:
        return False
    reached = _bfs_reach([v for v in start if v in allowed], allowed, offsets)
    return not targets.isdisjoint(reached)


def crossing_threshold(c: ClusterLabeling, marks: np.ndarray, s: CrossingSpec) -> float:
    """Smallest float ``r`` at which the black crossing ``s`` is present.

    The crossing appears once every cluster on some admissible path is
    black, i.e. at ``r`` strictly above the min-over-paths of the max path
    mark.  The returned value is the successor float of that bottleneck, so
    ``has_crossing(recolour_at(x, r), s) == (r >= crossing_threshold(...))``
    holds exactly for every float ``r`` in [0, 1].
    """
    if s.colour is not Colour.BLACK:
        raise ValueError("thresholds are defined for black (increasing) crossings")
    geom = c.geometry
    rect = s.rect
    members: dict[int, list[Vertex]] = {}
    for v in rect.vertices():
        members.setdefault(int(c.label[geom.vertex_index(v)]), []).append(v)

    order = sorted(members, key=lambda cid: float(marks[cid]))
    offsets = neighbor_offsets(c.topology, s.mode)
    start, target = s.side_sets()
    start_set, target_set = set(start), set(target)

    # Union-find over rect vertices plus two virtual side nodes.
    parent: dict[object, object] = {"S": "S", "T": "T"}

    def find(a: object) -> object:
        while parent[a] is not a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a: object, b: object) -> None:
        ra, rb = find(a), find(b)
        if ra is not rb:
            parent[ra] = rb

    active: set[Vertex] = set()
    for cid in order:
        for v in members[cid]:
            parent[v] = v
            active.add(v)
            if v in start_set:
                union(v, "S")
            if v in target_set:
                union(v, "T")
            vx, vy = v
            for dx, dy in offsets:
                w = (vx + dx, vy + dy)
                if w in active:
                    union(v, w)
        if find("S") is find("T"):
            return float(np.nextafter(float(marks[cid]), 1.0))
    raise RuntimeError("all-black rectangle admits no crossing; rect is degenerate")


def thicken(s: Iterable[Vertex], c: ClusterLabeling) -> set[Vertex]:
    """Union of the full p-clusters meeting the vertex set ``s``."""
    ids = {c.cluster_of(v) for v in s}
    out: set[Vertex] = set()
    for cid in ids:
        out.update(c.vertices_of(cid))
    return out


# --- extremal crossings ----------------------------------------------------


def _region_on_side(
    universe: set[Vertex],
    path_set: set[Vertex],
    is_exit: Callable[[Vertex], bool],
    flood_offsets: Sequence[tuple[int, int]],
) -> frozenset[Vertex]:
    """Vertices *not* reachable from the exit side when the path blocks.

    For "lowest" the exit side is the top edge and the flood is ordinary;
    the result is the on-or-below region of the path.  Colour plays no role:
    the flood runs over all non-path vertices of the universe.
    """
    allowed = universe - path_set
    seeds = [v for v in allowed if is_exit(v)]
    reached = _bfs_reach(seeds, allowed, flood_offsets)
    return frozenset(universe - reached)


def _min_region_path(
    universe: set[Vertex],
    allowed: set[Vertex],
    sources: set[Vertex],
    is_target: Callable[[Vertex], bool],
    path_offsets: Sequence[tuple[int, int]],
    flood_offsets: Sequence[tuple[int, int]],
    is_exit: Callable[[Vertex], bool],
) -> list[Vertex] | None:
    """Crossing within ``allowed`` whose blocked-off region is minimal.

    Works by recursive improvement: given a candidate, try to find a
    crossing confined to its region minus one of its vertices; any success
    strictly shrinks the region, and failure for every vertex certifies
    minimality.  (If a strictly smaller crossing existed, it would avoid
    some vertex of the candidate while staying inside its region.)
    """

    def region(path: list[Vertex]) -> frozenset[Vertex]:
        return _region_on_side(universe, set(path), is_exit, flood_offsets)

    def first_path(avail: set[Vertex]) -> list[Vertex] | None:
        return _bfs_path(sources & avail, avail, path_offsets, is_target)

    def minimize(avail: set[Vertex]) -> tuple[list[Vertex], frozenset[Vertex]] | None:
        best = first_path(avail)
        if best is None:
            return None
        best_region = region(best)
        improved = True
        while improved:
            improved = False
            for v in sorted(set(best)):
                sub = minimize((avail & best_region) - {v})
                if sub is not None and len(sub[1]) < len(best_region):
                    best, best_region = sub
                    improved = True
                    break
        return best, best_region

    found = minimize(allowed)
    if found is None:
        return None
    _, min_region = found
    return _lex_min_path(allowed & min_region, sources, is_target, path_offsets)


def _lex_min_path(
    allowed: set[Vertex],
    sources: set[Vertex],
    is_target: Callable[[Vertex], bool],
    offsets: Sequence[tuple[int, int]],
) -> list[Vertex]:
    """Lexicographically least self-avoiding crossing within ``allowed``.

    Greedy with feasibility look-ahead: extend by the smallest vertex from
    which the target is still reachable without revisiting the prefix.
    """

    def feasible(v: Vertex, used: set[Vertex]) -> bool:
        if is_target(v):
            return True
        return _bfs_path([v], (allowed - used) | {v}, offsets, is_target) is not None

    path: list[Vertex] = []
    used: set[Vertex] = set()
    while True:
        if path and is_target(path[-1]):
            return path
        if path:
            px, py = path[-1]
            options = sorted(
                (px + dx, py + dy)
                for dx, dy in offsets
                if (px + dx, py + dy) in allowed and (px + dx, py + dy) not in used
            )
        else:
            options = sorted(sources & allowed)
        for v in options:
            if feasible(v, used | {v}):
                path.append(v)
                used.add(v)
                break
        else:  # pragma: no cover - guarded by the caller's existence check
            raise RuntimeError("lexicographic completion lost a known crossing")


def lowest_horizontal_star_crossing(
    x: ColourConfig, rect: RectRegion, access_log: AccessLog | None = None
) -> PathResult | None:
    """Lowest white horizontal crossing of ``rect`` in the matching mode.

    Explores only the bottom edge, the black clusters attached to it, and
    their white frontier, so every colour read lies on or below the
    returned path.  Returns None exactly when a black ordinary top-bottom
    crossing blocks the way.
    """
    topology = x.clusters.topology
    path_offsets = neighbor_offsets(topology, AdjacencyMode.STAR)
    block_offsets = neighbor_offsets(topology, AdjacencyMode.ORDINARY)
    path_mode = matching_mode(topology, AdjacencyMode.ORDINARY)

    known: dict[Vertex, bool] = {}

    def is_black(v: Vertex) -> bool:
        if v not in known:
            known[v] = x.is_black(v)
            if access_log is not None:
                access_log.record(v, Colour.BLACK if known[v] else Colour.WHITE)
        return known[v]

    whites: set[Vertex] = set()
    black_seen: set[Vertex] = set()
    queue: deque[Vertex] = deque()
    for xx in range(rect.x0, rect.x1 + 1):
        v = (xx, rect.y0)
        if is_black(v):
            black_seen.add(v)
            queue.append(v)
        else:
            whites.add(v)

    # Flood the bottom-attached black clusters; their white frontier is the
    # only material the lowest dual crossing can be made of.
    while queue:
        vx, vy = queue.popleft()
        if vy == rect.y1:
            return None  # a black ordinary crossing reaches the top
        for dx, dy in block_offsets:
            w = (vx + dx, vy + dy)
            if w in rect and w not in black_seen and w not in whites:
                if is_black(w):
                    black_seen.add(w)
                    queue.append(w)
                else:
                    whites.add(w)

    universe = set(rect.vertices())
    sources = {v for v in whites if v[0] == rect.x0}
    path = _min_region_path(
        universe,
        whites,
        sources,
        lambda v: v[0] == rect.x1,
        path_offsets,
        block_offsets,
        lambda v: v[1] == rect.y1,
    )
    if path is None:
        raise RuntimeError(
            "no dual crossing found although no black crossing blocks; "
            "frontier exploration is incomplete"
        )
    return PathResult(tuple(path), path_mode, Colour.WHITE)


def leftmost_vertical_crossing(
    x: ColourConfig,
    region: Iterable[Vertex],
    top: Iterable[Vertex],
    bottom: Iterable[Vertex],
    access_log: AccessLog | None = None,
) -> PathResult | None:
    """Leftmost black ordinary path from ``top`` to ``bottom`` inside ``region``.

    Mirror image of :func:`lowest_horizontal_star_crossing`: the blocking
    material is the white star clusters attached to the left rim of the
    region, and the path is built from black vertices on the rim or on
    those clusters' frontier.  Reads stay on or left of the returned path.
    """
    topology = x.clusters.topology
    path_offsets = neighbor_offsets(topology, AdjacencyMode.ORDINARY)
    block_offsets = neighbor_offsets(topology, AdjacencyMode.STAR)

    region_set = set(region)
    top_set = set(top)
    bottom_set = set(bottom)
    if not top_set <= region_set or not bottom_set <= region_set:
        raise ValueError("top and bottom must be subsets of the region")

    known: dict[Vertex, bool] = {}

    def is_black(v: Vertex) -> bool:
        if v not in known:
            known[v] = x.is_black(v)
            if access_log is not None:
                access_log.record(v, Colour.BLACK if known[v] else Colour.WHITE)
        return known[v]

    left_rim = sorted(v for v in region_set if (v[0] - 1, v[1]) not in region_set)
    blacks: set[Vertex] = set()
    white_seen: set[Vertex] = set()
    queue: deque[Vertex] = deque()
    for v in left_rim:
        if is_black(v):
            blacks.add(v)
        else:
            white_seen.add(v)
            queue.append(v)
    while queue:
        vx, vy = queue.popleft()
        for dx, dy in block_offsets:
            w = (vx + dx, vy + dy)
            if w in region_set and w not in white_seen and w not in blacks:
                if is_black(w):
                    blacks.add(w)
                else:
                    white_seen.add(w)
                    queue.append(w)

    path = _min_region_path(
        region_set,
        blacks,
        top_set & blacks,
        lambda v: v in bottom_set,
        path_offsets,
        block_offsets,
        lambda v: (v[0] + 1, v[1]) not in region_set,
    )
    if path is None:
        return None
    return PathResult(tuple(path), AdjacencyMode.ORDINARY, Colour.BLACK)


# --- circuits --------------------------------------------------------------


def has_circuit_in_annulus(
    x: ColourConfig, a: AnnulusRegion, colour: Colour, mode: AdjacencyMode
) -> bool:
    """Does a monochromatic circuit separate the hole from the outside?

    Decided through the blocking dual: a circuit of the given colour and
    mode exists iff no opposite-coloured path in the matching mode runs
    through the annulus from a vertex adjacent to the hole to a vertex
    adjacent to the exterior (adjacency taken in the matching mode).
    """
    topology = x.clusters.topology
    dual_offsets = neighbor_offsets(topology, matching_mode(topology, mode))
    geom = x.clusters.geometry
    mask = x.black_mask()
    want_black = colour is not Colour.BLACK  # the dual path takes the other colour

    hole = a.hole_rect
    outer = a.outer_rect

    allowed = {
        v
        for v in a.vertices()
        if bool(mask[geom.vertex_index(v)]) == want_black
    }

    def touches(v: Vertex, inside: Callable[[Vertex], bool]) -> bool:
        return any(inside((v[0] + dx, v[1] + dy)) for dx, dy in dual_offsets)

    seeds = [v for v in allowed if touches(v, lambda w: w in hole)]
    reached = _bfs_reach(seeds, allowed, dual_offsets)
    return not any(touches(v, lambda w: w not in outer) for v in reached)


# --- event evaluation ------------------------------------------------------


def evaluate_crossing_at(
    x: ColourConfig, s: CrossingSpec, r: float
) -> bool:
    """Convenience: re-threshold the colouring at ``r`` and test the crossing."""
    return has_crossing(recolour_at(x, r), s)

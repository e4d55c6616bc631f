"""Shared helpers: hand-built colourings and small brute-force comparators.

The brute-force pieces here are deliberately written from scratch (plain
dict/set BFS and DFS) so that they share no code path with the package --
tests that pin production routines against them are genuine cross-checks,
not reflections.
"""

from collections import deque

import pytest

from dacperc import (
    RectRegion,
    Topology,
    Window,
    assign_colours,
    flip_cluster,
    label_clusters,
    sample_bonds,
)


def colouring_from_blacks(topology, rect, blacks, pad=0):
    """A ColourConfig over ``rect`` whose black set is exactly ``blacks``.

    Uses p=0 so every vertex is its own cluster, then overrides cluster by
    cluster; any vertex pattern is reachable this way.
    """
    w = Window(rect, pad)
    x = assign_colours(label_clusters(sample_bonds(topology, w, 0.0, 1)), 0.5, 1)
    for v in w.full.vertices():
        if x.is_black(v) != (v in blacks):
            x = flip_cluster(x, x.clusters.cluster_of(v))
    return x


def all_saw_crossings(good, starts, is_target, offsets, region_set):
    """Every self-avoiding path over ``good`` from a start to its first
    target contact, as vertex tuples.  Exponential; keep regions small."""
    out = []

    def extend(path, used):
        v = path[-1]
        if is_target(v):
            out.append(tuple(path))
            return
        vx, vy = v
        for dx, dy in offsets:
            w = (vx + dx, vy + dy)
            if w in region_set and w in good and w not in used:
                path.append(w)
                used.add(w)
                extend(path, used)
                path.pop()
                used.discard(w)

    for s in sorted(starts):
        if s in good and s in region_set:
            extend([s], {s})
    return out


def blocked_side_region(universe, path_set, is_exit, flood_offsets):
    """Vertices of ``universe`` cut off from the exit side by ``path_set``."""
    allowed = universe - path_set
    seen = {v for v in allowed if is_exit(v)}
    queue = deque(sorted(seen))
    while queue:
        x, y = queue.popleft()
        for dx, dy in flood_offsets:
            w = (x + dx, y + dy)
            if w in allowed and w not in seen:
                seen.add(w)
                queue.append(w)
    return universe - seen


def brute_components(vertices, edges):
    """Connected components via plain union-find over explicit edge pairs."""
    parent = {v: v for v in vertices}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for u, v in edges:
        ra, rb = find(u), find(v)
        if ra != rb:
            parent[ra] = rb
    comps = {}
    for v in vertices:
        comps.setdefault(find(v), set()).add(v)
    return list(comps.values())


@pytest.fixture(scope="session")
def square():
    return Topology.SQUARE


@pytest.fixture(scope="session")
def triangular():
    return Topology.TRIANGULAR

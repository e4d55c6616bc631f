"""Batched replica engine behind the Monte Carlo estimators.

Replica ``j`` of a run is a pure function of ``(master_seed, j)``: bonds and
marks are drawn from counter-mode streams keyed by the replica seed, and
cluster labels are canonical (min member index), so results are bit-identical
whether replicas are produced one by one through the public API or in bulk
here, in any batch size, on any number of threads.

The workhorse observable is the per-replica *crossing bottleneck*: the
smallest mark level at which a black crossing appears.  Activating clusters
in mark order under a union-find with two virtual side nodes yields it in
near-linear time, and one pass gives the whole curve ``r -> P(crossing)``
for free.  Circuits at fixed ``r`` go through one sparse connected-components
call per batch with per-replica hub nodes instead.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from typing import Callable

import numpy as np
from numba import njit
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .bonds import Window, window_geometry
from .colouring import Colour
from .connectivity import CrossingSpec, Direction
from .events import CircuitEvent, CrossingEvent, EventSpec, VertexBlackEvent
from .lattice import (
    AdjacencyMode,
    AnnulusRegion,
    Topology,
    matching_mode,
    neighbor_offsets,
)
from .rng import STREAM_BONDS, STREAM_MARKS, derive_key, replica_seed, uniform_block

DEFAULT_BATCH = 64


# --- per-batch sampling ----------------------------------------------------


def _batch_bonds(topology: Topology, window: Window, p: float, seed: int, j0: int, j1: int) -> np.ndarray:
    geom = window_geometry(topology, window)
    out = np.empty((j1 - j0, geom.n_edges), dtype=bool)
    for i, j in enumerate(range(j0, j1)):
        key = derive_key(replica_seed(seed, j), STREAM_BONDS)
        out[i] = uniform_block(key, 0, geom.n_edges) < p
    return out


def _batch_marks(seed: int, j0: int, j1: int, n_vertices: int) -> np.ndarray:
    out = np.empty((j1 - j0, n_vertices), dtype=np.float64)
    for i, j in enumerate(range(j0, j1)):
        key = derive_key(replica_seed(seed, j), STREAM_MARKS)
        out[i] = uniform_block(key, 0, n_vertices)
    return out


def _batch_labels(
    topology: Topology, window: Window, p: float, seed: int, j0: int, j1: int
) -> tuple[np.ndarray, np.ndarray]:
    """Canonical cluster labels and boundary-touch flags for replicas j0..j1.

    Returns ``labels`` of shape (B, V) -- per-replica canonical ids, equal to
    what :func:`dacperc.bonds.label_clusters` produces -- and ``touches`` of
    the same shape: True where the vertex's cluster reaches the window edge.
    """
    geom = window_geometry(topology, window)
    B = j1 - j0
    V = geom.n_vertices
    states = _batch_bonds(topology, window, p, seed, j0, j1)
    jj, ee = np.nonzero(states)
    rows = jj * V + geom.edge_u[ee]
    cols = jj * V + geom.edge_v[ee]
    n = B * V
    graph = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    k, comp = connected_components(graph, directed=False)
    reps = np.empty(k, dtype=np.int64)
    reps[comp[::-1]] = np.arange(n - 1, -1, -1, dtype=np.int64)
    labels = (reps[comp] - np.repeat(np.arange(B, dtype=np.int64) * V, V)).reshape(B, V)
    touched = np.zeros(k, dtype=bool)
    boundary = np.tile(geom.boundary_mask, B)
    touched[comp[boundary]] = True
    touches = touched[comp].reshape(B, V)
    return labels, touches


def _run_batches(
    n_replicas: int, threads: int, batch_size: int, worker: Callable[[int, int], None]
) -> None:
    ranges = [
        (s, min(s + batch_size, n_replicas)) for s in range(0, n_replicas, batch_size)
    ]
    if threads <= 1:
        for j0, j1 in ranges:
            worker(j0, j1)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda rg: worker(*rg), ranges))


# --- crossing bottlenecks --------------------------------------------------


class _RectStructure:
    """Local indices, CSR adjacency and side flags of a rect inside a window."""

    def __init__(self, topology: Topology, window: Window, spec: CrossingSpec):
        geom = window_geometry(topology, window)
        rect = spec.rect
        if (rect.x0, rect.y0) not in window.full or (rect.x1, rect.y1) not in window.full:
            raise ValueError("rectangle must lie inside the padded window")
        verts = rect.vertices()
        self.idx = np.array([geom.vertex_index(v) for v in verts], dtype=np.int64)
        local = {v: i for i, v in enumerate(verts)}
        offsets = neighbor_offsets(topology, spec.mode)
        indptr = [0]
        indices: list[int] = []
        for v in verts:
            for dx, dy in offsets:
                w = (v[0] + dx, v[1] + dy)
                if w in local:
                    indices.append(local[w])
            indptr.append(len(indices))
        self.indptr = np.array(indptr, dtype=np.int64)
        self.indices = np.array(indices, dtype=np.int64)
        n = len(verts)
        self.start = np.zeros(n, dtype=np.bool_)
        self.target = np.zeros(n, dtype=np.bool_)
        for v, i in local.items():
            if spec.direction is Direction.HORIZONTAL:
                self.start[i] = v[0] == rect.x0
                self.target[i] = v[0] == rect.x1
            else:
                self.start[i] = v[1] == rect.y1
                self.target[i] = v[1] == rect.y0


@lru_cache(maxsize=32)
def _rect_structure(topology: Topology, window: Window, spec: CrossingSpec) -> _RectStructure:
    return _RectStructure(topology, window, spec)


@njit(cache=True, nogil=True)
def _bottleneck(order, vmark, indptr, indices, start, target):
    """Min over crossings of the max cluster mark along the path.

    Vertices activate in mark order; the two virtual nodes S and T collect
    the start and target sides.  The first activation that joins S to T
    fixes the bottleneck level.
    """
    n = vmark.size
    parent = np.empty(n + 2, dtype=np.int64)
    for i in range(n + 2):
        parent[i] = i
    s_node, t_node = n, n + 1
    active = np.zeros(n, dtype=np.bool_)

    for t in range(order.size):
        v = order[t]
        active[v] = True
        # union v with side nodes and active neighbours (path-halving find)
        a = v
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        if start[v]:
            b = s_node
            while parent[b] != b:
                parent[b] = parent[parent[b]]
                b = parent[b]
            parent[a] = b
            a = b
        if target[v]:
            b = t_node
            while parent[b] != b:
                parent[b] = parent[parent[b]]
                b = parent[b]
            if a != b:
                parent[a] = b
                a = b
        for e in range(indptr[v], indptr[v + 1]):
            w = indices[e]
            if active[w]:
                b = w
                while parent[b] != b:
                    parent[b] = parent[parent[b]]
                    b = parent[b]
                if a != b:
                    parent[a] = b
                    a = b
        sa = s_node
        while parent[sa] != sa:
            parent[sa] = parent[parent[sa]]
            sa = parent[sa]
        ta = t_node
        while parent[ta] != ta:
            parent[ta] = parent[parent[ta]]
            ta = parent[ta]
        if sa == ta:
            return vmark[v]
    return np.float64(2.0)  # no crossing even fully black: degenerate input


def crossing_bottlenecks(
    topology: Topology,
    window: Window,
    spec: CrossingSpec,
    p: float,
    seed: int,
    n_replicas: int,
    *,
    threads: int = 1,
    batch_size: int = DEFAULT_BATCH,
    negate_marks: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-replica bottleneck mark of a black crossing, plus censor flags.

    The black crossing is present at colour density ``r`` iff ``r`` exceeds
    the bottleneck.  With ``negate_marks`` the kernel runs on ``1 - mark``,
    which turns the result into 1 minus the *white* persistence level: a
    white crossing in the same geometry survives at ``r`` iff
    ``r <= 1 - bottleneck``.
    """
    if spec.colour is not Colour.BLACK:
        raise ValueError("bottlenecks are computed for the black version of the spec")
    geom = window_geometry(topology, window)
    struct = _rect_structure(topology, window, spec)
    out = np.empty(n_replicas, dtype=np.float64)
    censored = np.empty(n_replicas, dtype=bool)

    def worker(j0: int, j1: int) -> None:
        labels, touches = _batch_labels(topology, window, p, seed, j0, j1)
        marks = _batch_marks(seed, j0, j1, geom.n_vertices)
        if negate_marks:
            marks = 1.0 - marks
        for i in range(j1 - j0):
            vmark = marks[i][labels[i][struct.idx]]
            order = np.argsort(vmark, kind="stable")
            out[j0 + i] = _bottleneck(
                order, vmark, struct.indptr, struct.indices, struct.start, struct.target
            )
            censored[j0 + i] = bool(touches[i][struct.idx].any())

    _run_batches(n_replicas, threads, batch_size, worker)
    return out, censored


def thresholds_from_bottlenecks(bottlenecks: np.ndarray) -> np.ndarray:
    """Smallest float r at which each replica's crossing is present."""
    return np.nextafter(bottlenecks, np.inf)


# --- fixed-r indicators ----------------------------------------------------


class _AnnulusStructure:
    def __init__(self, topology: Topology, window: Window, a: AnnulusRegion, mode: AdjacencyMode):
        geom = window_geometry(topology, window)
        verts = a.vertices()
        self.idx = np.array([geom.vertex_index(v) for v in verts], dtype=np.int64)
        local = {v: i for i, v in enumerate(verts)}
        offsets = neighbor_offsets(topology, matching_mode(topology, mode))
        eu, ev = [], []
        hole, ext = a.hole_rect, a.outer_rect
        self.from_hole = np.zeros(len(verts), dtype=bool)
        self.to_exterior = np.zeros(len(verts), dtype=bool)
        for v, i in local.items():
            for dx, dy in offsets:
                w = (v[0] + dx, v[1] + dy)
                if w in local and local[w] > i:
                    eu.append(i)
                    ev.append(local[w])
                if w in hole:
                    self.from_hole[i] = True
                if w not in ext:
                    self.to_exterior[i] = True
        self.edge_u = np.array(eu, dtype=np.int64)
        self.edge_v = np.array(ev, dtype=np.int64)


@lru_cache(maxsize=32)
def _annulus_structure(
    topology: Topology, window: Window, a: AnnulusRegion, mode: AdjacencyMode
) -> _AnnulusStructure:
    return _AnnulusStructure(topology, window, a, mode)


def _hub_disconnected(
    occ: np.ndarray, edge_u: np.ndarray, edge_v: np.ndarray, from_a: np.ndarray, to_b: np.ndarray
) -> np.ndarray:
    """Per replica: is there *no* occupied path from flag A to flag B?

    ``occ`` has shape (B, n_local).  Builds one block-diagonal graph with two
    hub nodes per replica and runs a single connected-components pass.
    """
    B, n = occ.shape
    live = occ[:, edge_u] & occ[:, edge_v]
    jj, ee = np.nonzero(live)
    rows = [jj * n + edge_u[ee]]
    cols = [jj * n + edge_v[ee]]
    hub_a = B * n + 2 * np.arange(B, dtype=np.int64)
    hub_b = hub_a + 1
    ja, va = np.nonzero(occ & from_a[None, :])
    rows.append(ja * n + va)
    cols.append(hub_a[ja])
    jb, vb = np.nonzero(occ & to_b[None, :])
    rows.append(jb * n + vb)
    cols.append(hub_b[jb])
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    total = B * n + 2 * B
    graph = csr_matrix((np.ones(len(r), dtype=np.int8), (r, c)), shape=(total, total))
    _, comp = connected_components(graph, directed=False)
    return comp[hub_a] != comp[hub_b]


def circuit_indicators(
    topology: Topology,
    window: Window,
    a: AnnulusRegion,
    colour: Colour,
    mode: AdjacencyMode,
    p: float,
    r: float,
    seed: int,
    n_replicas: int,
    *,
    threads: int = 1,
    batch_size: int = DEFAULT_BATCH,
) -> tuple[np.ndarray, np.ndarray]:
    """Monochromatic-circuit indicators at fixed r, via the blocking dual."""
    geom = window_geometry(topology, window)
    struct = _annulus_structure(topology, window, a, mode)
    out = np.empty(n_replicas, dtype=bool)
    censored = np.empty(n_replicas, dtype=bool)
    dual_is_black = colour is not Colour.BLACK

    def worker(j0: int, j1: int) -> None:
        labels, touches = _batch_labels(topology, window, p, seed, j0, j1)
        marks = _batch_marks(seed, j0, j1, geom.n_vertices)
        black = np.take_along_axis(marks, labels, axis=1)[:, struct.idx] < r
        occ = black if dual_is_black else ~black
        out[j0:j1] = _hub_disconnected(
            occ, struct.edge_u, struct.edge_v, struct.from_hole, struct.to_exterior
        )
        censored[j0:j1] = touches[:, struct.idx].any(axis=1)

    _run_batches(n_replicas, threads, batch_size, worker)
    return out, censored


def event_indicators(
    topology: Topology,
    window: Window,
    event: EventSpec,
    p: float,
    r: float,
    seed: int,
    n_replicas: int,
    *,
    threads: int = 1,
    batch_size: int = DEFAULT_BATCH,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-replica event indicators at fixed (p, r), with censor flags."""
    if isinstance(event, CrossingEvent):
        spec = event.spec
        if spec.colour is Colour.BLACK:
            bn, censored = crossing_bottlenecks(
                topology, window, spec, p, seed, n_replicas,
                threads=threads, batch_size=batch_size,
            )
            return r > bn, censored
        black_twin = CrossingSpec(spec.rect, spec.direction, Colour.BLACK, spec.mode)
        bn, censored = crossing_bottlenecks(
            topology, window, black_twin, p, seed, n_replicas,
            threads=threads, batch_size=batch_size, negate_marks=True,
        )
        return r <= 1.0 - bn, censored
    if isinstance(event, CircuitEvent):
        return circuit_indicators(
            topology, window, event.annulus, event.colour, event.mode, p, r, seed,
            n_replicas, threads=threads, batch_size=batch_size,
        )
    if isinstance(event, VertexBlackEvent):
        geom = window_geometry(topology, window)
        vi = geom.vertex_index(event.v)
        out = np.empty(n_replicas, dtype=bool)
        censored = np.empty(n_replicas, dtype=bool)

        def worker(j0: int, j1: int) -> None:
            labels, touches = _batch_labels(topology, window, p, seed, j0, j1)
            marks = _batch_marks(seed, j0, j1, geom.n_vertices)
            out[j0:j1] = marks[np.arange(j1 - j0), labels[:, vi]] < r
            censored[j0:j1] = touches[:, vi]

        _run_batches(n_replicas, threads, batch_size, worker)
        return out, censored
    raise TypeError(f"unsupported event {event!r}")


# --- cluster geometry observables ------------------------------------------


def dependence_ranges(
    topology: Topology,
    window: Window,
    p: float,
    seed: int,
    n_replicas: int,
    v=(0, 0),
    *,
    threads: int = 1,
    batch_size: int = DEFAULT_BATCH,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-replica L1 reach of the p-cluster at ``v``, with censor flags."""
    geom = window_geometry(topology, window)
    vi = geom.vertex_index(v)
    xs = np.arange(geom.n_vertices, dtype=np.int64) // geom.height + geom.x0
    ys = np.arange(geom.n_vertices, dtype=np.int64) % geom.height + geom.y0
    dist = np.abs(xs - v[0]) + np.abs(ys - v[1])
    out = np.empty(n_replicas, dtype=np.int64)
    censored = np.empty(n_replicas, dtype=bool)

    def worker(j0: int, j1: int) -> None:
        labels, touches = _batch_labels(topology, window, p, seed, j0, j1)
        for i in range(j1 - j0):
            members = labels[i] == labels[i, vi]
            out[j0 + i] = int(dist[members].max())
            censored[j0 + i] = bool(touches[i, vi])

    _run_batches(n_replicas, threads, batch_size, worker)
    return out, censored


def colour_cluster_sizes(
    topology: Topology,
    window: Window,
    p: float,
    r: float,
    seed: int,
    n_replicas: int,
    v=(0, 0),
    *,
    threads: int = 1,
    batch_size: int = DEFAULT_BATCH,
) -> tuple[np.ndarray, np.ndarray]:
    """Size of the black r-cluster at ``v`` (0 when ``v`` is white).

    The r-cluster is the ordinary-adjacency monochromatic component.  A
    replica is censored when that component reaches the window edge, where
    it could continue unseen.
    """
    geom = window_geometry(topology, window)
    vi = geom.vertex_index(v)
    V = geom.n_vertices
    out = np.empty(n_replicas, dtype=np.int64)
    censored = np.empty(n_replicas, dtype=bool)
    boundary = geom.boundary_mask

    def worker(j0: int, j1: int) -> None:
        B = j1 - j0
        labels, _ = _batch_labels(topology, window, p, seed, j0, j1)
        marks = _batch_marks(seed, j0, j1, V)
        black = np.take_along_axis(marks, labels, axis=1) < r
        live = black[:, geom.edge_u] & black[:, geom.edge_v]
        jj, ee = np.nonzero(live)
        rows = jj * V + geom.edge_u[ee]
        cols = jj * V + geom.edge_v[ee]
        n = B * V
        graph = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
        k, comp = connected_components(graph, directed=False)
        sizes = np.bincount(comp, weights=black.ravel(), minlength=k)
        touched = np.zeros(k, dtype=bool)
        bm = np.tile(boundary, B) & black.ravel()
        touched[comp[bm]] = True
        for i in range(B):
            if not black[i, vi]:
                out[j0 + i] = 0
                censored[j0 + i] = False
            else:
                cid = comp[i * V + vi]
                out[j0 + i] = int(sizes[cid])
                censored[j0 + i] = bool(touched[cid])

    _run_batches(n_replicas, threads, batch_size, worker)
    return out, censored

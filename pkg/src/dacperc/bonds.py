"""Bernoulli bond configurations on a padded window, and their p-clusters.

A :class:`Window` is the finite stand-in for the infinite lattice: a core
rectangle of scientific interest plus a padding margin.  All sampling and
cluster labelling happen on the padded ("full") region; anything whose
cluster reaches the full-region boundary is flagged censored rather than
silently truncated.

Edges always follow *ordinary* adjacency (bonds live on the lattice itself;
star adjacency only ever applies to colour connectivity).  The canonical
edge order -- one block per positive offset, sources in x-major vertex order
within each block -- is part of the reproducibility contract: edge ``i`` of a
window is opened iff ``uniform(key, i) < p``, so configurations regenerate
bit-identically from ``(topology, window, p, seed)`` alone, lazily or in
bulk, on any thread layout.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, NamedTuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .lattice import RectRegion, Topology, Vertex
from .rng import STREAM_BONDS, derive_key, uniform_block

# Positive half of the ordinary neighbour offsets (d > (0,0) lexicographically);
# together with their negatives these generate the full adjacency.
POSITIVE_OFFSETS = {
    Topology.SQUARE: ((0, 1), (1, 0)),
    Topology.TRIANGULAR: ((0, 1), (1, 0), (1, 1)),
}


def default_pad(core: RectRegion) -> int:
    """Default padding margin: max(16, longest core side / 4)."""
    return max(16, -(-max(core.width, core.height) // 4))


@dataclass(frozen=True)
class Window:
    """Core rectangle plus padding margin; sampling covers the padded region."""

    core: RectRegion
    pad: int

    def __post_init__(self):
        if self.pad < 0:
            raise ValueError("pad must be >= 0")

    @staticmethod
    def around(core: RectRegion, pad: int | None = None) -> "Window":
        return Window(core, default_pad(core) if pad is None else pad)

    @property
    def full(self) -> RectRegion:
        return self.core.expand(self.pad)


class _WindowGeometry:
    """Precomputed index arithmetic for one (topology, window) pair.

    Vertices are numbered x-major: ``index = (x - x0) * height + (y - y0)``,
    which makes index order and lexicographic (x, y) order coincide -- the
    smallest index in a cluster is its lexicographically minimal member.
    """

    def __init__(self, topology: Topology, window: Window):
        self.topology = topology
        self.window = window
        full = window.full
        self.x0, self.y0 = full.x0, full.y0
        self.width, self.height = full.width, full.height
        self.n_vertices = self.width * self.height

        blocks = []
        offset = 0
        edge_u, edge_v = [], []
        for dx, dy in POSITIVE_OFFSETS[topology]:
            nx, ny = self.width - dx, self.height - dy
            xs = np.repeat(np.arange(nx), ny)
            ys = np.tile(np.arange(ny), nx)
            u = xs * self.height + ys
            edge_u.append(u)
            edge_v.append(u + dx * self.height + dy)
            blocks.append(((dx, dy), offset, ny))
            offset += nx * ny
        self.edge_u = np.concatenate(edge_u)
        self.edge_v = np.concatenate(edge_v)
        self.n_edges = offset
        self._blocks = blocks

        m = np.zeros((self.width, self.height), dtype=bool)
        m[0, :] = m[-1, :] = True
        m[:, 0] = m[:, -1] = True
        self.boundary_mask = m.ravel()

    def vertex_index(self, v: Vertex) -> int:
        x, y = v
        if not (self.x0 <= x < self.x0 + self.width and self.y0 <= y < self.y0 + self.height):
            raise KeyError(f"vertex {v} outside the padded window")
        return (x - self.x0) * self.height + (y - self.y0)

    def vertex_at(self, index: int) -> Vertex:
        return (self.x0 + index // self.height, self.y0 + index % self.height)

    def contains(self, v: Vertex) -> bool:
        return v in self.window.full

    def edge_index(self, u: Vertex, v: Vertex) -> int:
        """Canonical index of the edge {u, v}; KeyError if not a window edge."""
        if v < u:
            u, v = v, u
        d = (v[0] - u[0], v[1] - u[1])
        for (dx, dy), offset, ny in self._blocks:
            if d == (dx, dy):
                if not (self.contains(u) and self.contains(v)):
                    break
                return offset + (u[0] - self.x0) * ny + (u[1] - self.y0)
        raise KeyError(f"({u}, {v}) is not an edge of this window")


@lru_cache(maxsize=64)
def window_geometry(topology: Topology, window: Window) -> _WindowGeometry:
    return _WindowGeometry(topology, window)


@dataclass
class BondConfig:
    """One sampled bond configuration; regenerates bit-identically from its key."""

    topology: Topology
    window: Window
    p: float
    seed: int
    states: np.ndarray  # bool, one entry per canonical edge

    @property
    def geometry(self) -> _WindowGeometry:
        return window_geometry(self.topology, self.window)

    def is_open(self, u: Vertex, v: Vertex) -> bool:
        return bool(self.states[self.geometry.edge_index(u, v)])

    def open_fraction(self) -> float:
        return float(self.states.mean()) if self.states.size else 0.0


def sample_bonds(topology: Topology, window: Window, p: float, seed: int) -> BondConfig:
    """Open each window edge independently with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    geom = window_geometry(topology, window)
    key = derive_key(seed, STREAM_BONDS)
    states = uniform_block(key, 0, geom.n_edges) < p
    return BondConfig(topology, window, p, seed, states)


@dataclass
class ClusterLabeling:
    """p-cluster decomposition of a bond configuration.

    ``label[i]`` is the cluster id of vertex ``i``, where the id is the vertex
    index of the cluster's lexicographically minimal member -- a canonical
    choice that depends only on the configuration, not on traversal order.
    """

    topology: Topology
    window: Window
    label: np.ndarray          # int64 per vertex: canonical cluster id
    comp: np.ndarray           # int32 per vertex: compact 0..k-1 component id
    reps: np.ndarray           # canonical id per compact component
    comp_sizes: np.ndarray     # vertex count per compact component
    comp_touches: np.ndarray   # bool per compact component: reaches window edge

    @property
    def geometry(self) -> _WindowGeometry:
        return window_geometry(self.topology, self.window)

    @property
    def n_clusters(self) -> int:
        return len(self.reps)

    def cluster_ids(self) -> np.ndarray:
        return np.sort(self.reps)

    def cluster_of(self, v: Vertex) -> int:
        return int(self.label[self.geometry.vertex_index(v)])

    def _compact(self, cluster_id: int) -> int:
        if not 0 <= cluster_id < len(self.comp):
            raise KeyError(f"{cluster_id} is not a vertex index of this window")
        c = int(self.comp[cluster_id])
        if int(self.reps[c]) != cluster_id:
            raise KeyError(f"{cluster_id} is not a canonical cluster id")
        return c

    def size(self, cluster_id: int) -> int:
        return int(self.comp_sizes[self._compact(cluster_id)])

    def touches_boundary(self, cluster_id: int) -> bool:
        return bool(self.comp_touches[self._compact(cluster_id)])

    def vertices_of(self, cluster_id: int) -> list[Vertex]:
        geom = self.geometry
        idx = np.flatnonzero(self.label == self._labelcheck(cluster_id))
        return [geom.vertex_at(int(i)) for i in idx]

    def _labelcheck(self, cluster_id: int) -> int:
        self._compact(cluster_id)  # raises on bad ids
        return cluster_id


def label_clusters(b: BondConfig) -> ClusterLabeling:
    """Union the open edges of ``b`` into p-clusters with canonical labels."""
    geom = b.geometry
    n = geom.n_vertices
    open_idx = np.flatnonzero(b.states)
    rows = geom.edge_u[open_idx]
    cols = geom.edge_v[open_idx]
    graph = csr_matrix(
        (np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n)
    )
    k, comp = connected_components(graph, directed=False)
    comp = comp.astype(np.int32, copy=False)

    # First occurrence of each component in index order = minimal member:
    # assign indices in reverse so the earliest (smallest) write wins.
    reps = np.empty(k, dtype=np.int64)
    reps[comp[::-1]] = np.arange(n - 1, -1, -1, dtype=np.int64)
    label = reps[comp]

    comp_sizes = np.bincount(comp, minlength=k)
    comp_touches = np.zeros(k, dtype=bool)
    comp_touches[comp[geom.boundary_mask]] = True
    return ClusterLabeling(b.topology, b.window, label, comp, reps, comp_sizes, comp_touches)


class DependenceRange(NamedTuple):
    value: int
    censored: bool


def dependence_range(c: ClusterLabeling, v: Vertex) -> DependenceRange:
    """Largest L1 distance from ``v`` reached by its p-cluster.

    ``censored`` is set when the cluster touches the full-region boundary, in
    which case the true (unbounded-lattice) range may exceed ``value``.
    """
    geom = c.geometry
    vi = geom.vertex_index(v)
    cid = int(c.label[vi])
    members = np.flatnonzero(c.label == cid)
    xs = members // geom.height + geom.x0
    ys = members % geom.height + geom.y0
    value = int(np.max(np.abs(xs - v[0]) + np.abs(ys - v[1])))
    return DependenceRange(value, c.touches_boundary(cid))


Edge = tuple[Vertex, Vertex]


def _canonical_edge(u: Vertex, v: Vertex) -> Edge:
    return (u, v) if u <= v else (v, u)


def edge_boundary(s: Iterable[Vertex], topology: Topology, window: Window) -> set[Edge]:
    """All lattice edges with exactly one endpoint in ``s``.

    The outer endpoint may lie outside the window; such edges have no sampled
    state and make the set unusable as a closed barrier, which is exactly the
    censoring story told elsewhere.
    """
    sset = set(s)
    out = set()
    for u in sset:
        for dx, dy in POSITIVE_OFFSETS[topology]:
            for w in ((u[0] + dx, u[1] + dy), (u[0] - dx, u[1] - dy)):
                if w not in sset:
                    out.add(_canonical_edge(u, w))
    return out


def is_closed_barrier(edges: set[Edge], b: BondConfig) -> bool:
    """True iff every edge of ``edges`` is closed in ``b`` and their removal
    cuts the window graph into >= 2 parts with exactly one part containing
    the window boundary (the finite surrogate for "exactly one infinite
    component").
    """
    if not edges:
        raise ValueError("empty edge set cannot be a barrier")
    geom = b.geometry
    cut = set()
    for u, v in edges:
        try:
            ei = geom.edge_index(u, v)
        except KeyError:
            return False  # reaches outside the window: state unknown
        if b.states[ei]:
            return False
        cut.add(ei)

    keep = np.ones(geom.n_edges, dtype=bool)
    keep[list(cut)] = False
    rows = geom.edge_u[keep]
    cols = geom.edge_v[keep]
    n = geom.n_vertices
    graph = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    k, comp = connected_components(graph, directed=False)
    if k < 2:
        return False
    return len(np.unique(comp[geom.boundary_mask])) == 1


# --- binary dump -----------------------------------------------------------
#
# Layout (little-endian):
#   magic   4s   b"DACB"
#   version u16  currently 1
#   topo    u8   0 = square, 1 = triangular
#   pad0    u8   reserved, zero
#   core    4 x i64  (x0, x1, y0, y1)
#   pad     i64
#   p       f64
#   seed    u64
#   nedges  u64
#   bits    ceil(nedges / 8) bytes, canonical edge order, LSB-first

_HEADER = struct.Struct("<4sHBBqqqqqdQQ")
_MAGIC = b"DACB"
_TOPO_CODE = {Topology.SQUARE: 0, Topology.TRIANGULAR: 1}
_TOPO_FROM = {v: k for k, v in _TOPO_CODE.items()}


def dump_bonds(b: BondConfig, path) -> None:
    """Write a BondConfig in the documented binary layout."""
    core = b.window.core
    header = _HEADER.pack(
        _MAGIC, 1, _TOPO_CODE[b.topology], 0,
        core.x0, core.x1, core.y0, core.y1,
        b.window.pad, float(b.p), b.seed & (2**64 - 1), b.states.size,
    )
    bits = np.packbits(b.states.view(np.uint8), bitorder="little").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(bits)


def load_bonds(path) -> BondConfig:
    """Read a BondConfig written by :func:`dump_bonds`."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size or raw[:4] != _MAGIC:
        raise ValueError("not a bond configuration dump")
    (_, version, topo, _, x0, x1, y0, y1, pad, p, seed, nedges) = _HEADER.unpack(
        raw[: _HEADER.size]
    )
    if version != 1:
        raise ValueError(f"unsupported dump version {version}")
    window = Window(RectRegion(x0, x1, y0, y1), pad)
    topology = _TOPO_FROM[topo]
    geom = window_geometry(topology, window)
    if nedges != geom.n_edges:
        raise ValueError("edge count does not match the declared window")
    bits = np.frombuffer(raw[_HEADER.size :], dtype=np.uint8)
    states = np.unpackbits(bits, count=nedges, bitorder="little").astype(bool)
    return BondConfig(topology, window, p, seed, states)

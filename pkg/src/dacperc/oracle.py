"""Exact ground truth on small windows.

Everything here is deliberately independent of the production connectivity
code: crossings are re-decided by bitmask floods, circuits by explicit
winding numbers, and probabilities by enumerating all 2^E bond
configurations with rational arithmetic.  Event probabilities come out as
polynomials in ``r`` with exact :class:`fractions.Fraction` coefficients, so
derivative identities and correlation inequalities can be checked with zero
numerical slack.  Float inputs for ``p`` are converted by
``Fraction(float)`` -- i.e. the exact dyadic the caller handed over.

The cost is exponential and the entry points guard their limits (20 edges,
22 support vertices, outer side 9 for circuits) rather than degrade.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .bonds import Window, window_geometry
from .colouring import Colour
from .connectivity import CrossingSpec, Direction
from .events import CircuitEvent, CrossingEvent, EventSpec, VertexBlackEvent
from .lattice import (
    AdjacencyMode,
    AnnulusRegion,
    RectRegion,
    Topology,
    Vertex,
    embed,
    neighbor_offsets,
)

# --- exact polynomials -----------------------------------------------------


@dataclass(frozen=True)
class ExactPoly:
    """Polynomial in r with Fraction coefficients, lowest degree first."""

    coeffs: tuple[Fraction, ...]

    def __post_init__(self):
        c = tuple(Fraction(x) for x in self.coeffs)
        while len(c) > 1 and c[-1] == 0:
            c = c[:-1]
        if not c:
            c = (Fraction(0),)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, r) -> Fraction:
        rr = Fraction(r)
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * rr + c
        return acc

    def derivative(self) -> "ExactPoly":
        if len(self.coeffs) == 1:
            return ExactPoly((Fraction(0),))
        return ExactPoly(tuple(self.coeffs[i] * i for i in range(1, len(self.coeffs))))

    def __add__(self, other: "ExactPoly") -> "ExactPoly":
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        return ExactPoly(tuple(x + y for x, y in zip(a, b)) + a[len(b):])

    def __sub__(self, other: "ExactPoly") -> "ExactPoly":
        return self + other.scale(-1)

    def scale(self, factor) -> "ExactPoly":
        f = Fraction(factor)
        return ExactPoly(tuple(c * f for c in self.coeffs))

    def sup_abs_on_unit(self, samples: int = 64) -> Fraction:
        """Max |value| over a uniform rational grid in [0, 1]."""
        return max(abs(self(Fraction(i, samples))) for i in range(samples + 1))


ZERO_POLY = ExactPoly((Fraction(0),))


@lru_cache(maxsize=None)
def _colour_kernel(k: int, b: int) -> ExactPoly:
    """r^b (1-r)^(k-b): weight of one b-black colouring of k clusters."""
    coeffs = [Fraction(0)] * (k + 1)
    for j in range(k - b + 1):
        coeffs[b + j] = Fraction((-1) ** j * math.comb(k - b, j))
    return ExactPoly(tuple(coeffs))


@lru_cache(maxsize=None)
def _popcounts(k: int) -> np.ndarray:
    return np.array([bin(i).count("1") for i in range(1 << k)], dtype=np.int64)


# --- indicator tables over support colourings ------------------------------


def _bit_flood(adj: Sequence[Sequence[int]], occ: int, starts: Iterable[int], targets: int) -> bool:
    """Is some target bit reachable from a start bit inside ``occ``?"""
    seen = 0
    stack = []
    for s in starts:
        if occ >> s & 1 and not seen >> s & 1:
            seen |= 1 << s
            stack.append(s)
    while stack:
        i = stack.pop()
        if targets >> i & 1:
            return True
        for j in adj[i]:
            if occ >> j & 1 and not seen >> j & 1:
                seen |= 1 << j
                stack.append(j)
    return False


def _support_adjacency(
    support: Sequence[Vertex], topology: Topology, mode: AdjacencyMode
) -> list[list[int]]:
    index = {v: i for i, v in enumerate(support)}
    offsets = neighbor_offsets(topology, mode)
    return [
        [index[(v[0] + dx, v[1] + dy)] for dx, dy in offsets if (v[0] + dx, v[1] + dy) in index]
        for v in support
    ]


def _crossing_table(spec: CrossingSpec, topology: Topology) -> tuple[list[Vertex], np.ndarray]:
    support = sorted(spec.rect.vertices())
    n = len(support)
    if n > 22:
        raise ValueError(f"support of {n} vertices is too large for an exact table")
    adj = _support_adjacency(support, topology, spec.mode)
    index = {v: i for i, v in enumerate(support)}
    r = spec.rect
    if spec.direction is Direction.HORIZONTAL:
        starts = [index[v] for v in support if v[0] == r.x0]
        targets = sum(1 << index[v] for v in support if v[0] == r.x1)
    else:
        starts = [index[v] for v in support if v[1] == r.y1]
        targets = sum(1 << index[v] for v in support if v[1] == r.y0)
    full = (1 << n) - 1
    want_black = spec.colour is Colour.BLACK
    table = np.zeros(1 << n, dtype=bool)
    for mask in range(1 << n):
        occ = mask if want_black else full ^ mask
        table[mask] = _bit_flood(adj, occ, starts, targets)
    return support, table


def _circuit_table(event: CircuitEvent, topology: Topology) -> tuple[list[Vertex], np.ndarray]:
    support = sorted(event.annulus.vertices())
    n = len(support)
    if n > 22:
        raise ValueError(f"support of {n} vertices is too large for an exact table")
    table = np.zeros(1 << n, dtype=bool)
    for mask in range(1 << n):
        blacks = {support[i] for i in range(n) if mask >> i & 1}
        table[mask] = brute_force_circuit(blacks, event.annulus, event.colour, event.mode, topology)
    return support, table


def _event_table(event: EventSpec, topology: Topology) -> tuple[list[Vertex], np.ndarray]:
    if isinstance(event, CrossingEvent):
        return _crossing_table(event.spec, topology)
    if isinstance(event, CircuitEvent):
        return _circuit_table(event, topology)
    if isinstance(event, VertexBlackEvent):
        return [event.v], np.array([False, True])
    raise TypeError(f"unsupported event {event!r}")


def _joint_table(
    t1: tuple[list[Vertex], np.ndarray], t2: tuple[list[Vertex], np.ndarray]
) -> tuple[list[Vertex], np.ndarray]:
    """Indicator of the intersection, over the union of the two supports."""
    s1, tab1 = t1
    s2, tab2 = t2
    union = sorted(set(s1) | set(s2))
    if len(union) > 22:
        raise ValueError("joint support too large for an exact table")
    pos = {v: i for i, v in enumerate(union)}
    masks = np.arange(1 << len(union), dtype=np.int64)
    proj1 = np.zeros_like(masks)
    for i, v in enumerate(s1):
        proj1 |= ((masks >> pos[v]) & 1) << i
    proj2 = np.zeros_like(masks)
    for i, v in enumerate(s2):
        proj2 |= ((masks >> pos[v]) & 1) << i
    return union, tab1[proj1] & tab2[proj2]


# --- exhaustive enumeration over bond configurations -----------------------

EventKey = EventSpec | tuple[EventSpec, EventSpec]


class ExactEnumeration:
    """All 2^E bond configurations of one window, integrated exactly.

    For each requested event (or intersection pair) the constructor
    accumulates integer tables N[o, k, b] = number of (configuration with o
    open edges, b-black colouring of its k support-meeting clusters) pairs
    satisfying the event, and the matching pivotal-cluster counts.  From
    these, :meth:`probability` and :meth:`pivotal_expectation` assemble
    exact polynomials in r.
    """

    def __init__(
        self,
        topology: Topology,
        window: Window,
        p,
        events: Iterable[EventKey],
        max_edges: int = 20,
    ):
        geom = window_geometry(topology, window)
        if geom.n_edges > max_edges:
            raise ValueError(
                f"window has {geom.n_edges} edges; exact enumeration is capped at {max_edges}"
            )
        self.topology = topology
        self.window = window
        self.p = Fraction(p)
        if not 0 <= self.p <= 1:
            raise ValueError(f"p={p} outside [0, 1]")
        self.n_edges = geom.n_edges
        self.n_configs = 0

        keys = list(dict.fromkeys(events))  # de-duplicate, keep order
        tables: list[tuple[list[Vertex], np.ndarray]] = []
        for key in keys:
            if isinstance(key, tuple):
                tables.append(_joint_table(_event_table(key[0], topology), _event_table(key[1], topology)))
            else:
                tables.append(_event_table(key, topology))
        self._keys = keys
        support_idx = [
            np.array([geom.vertex_index(v) for v in sup], dtype=np.int64) for sup, _ in tables
        ]

        counts: list[dict[tuple[int, int], np.ndarray]] = [{} for _ in keys]
        pivots: list[dict[tuple[int, int], np.ndarray]] = [{} for _ in keys]

        eu, ev = geom.edge_u, geom.edge_v
        n = geom.n_vertices
        if self.p == 0:
            config_iter: Iterable[int] = (0,)
        elif self.p == 1:
            config_iter = ((1 << self.n_edges) - 1,)
        else:
            config_iter = range(1 << self.n_edges)

        for cfg in config_iter:
            self.n_configs += 1
            parent = list(range(n))

            def find(a: int) -> int:
                while parent[a] != a:
                    parent[a] = parent[parent[a]]
                    a = parent[a]
                return a

            m = cfg
            while m:
                e = (m & -m).bit_length() - 1
                m &= m - 1
                ra, rb = find(int(eu[e])), find(int(ev[e]))
                if ra != rb:
                    parent[ra] = rb

            o = bin(cfg).count("1")
            for t, (key, (sup, table)) in enumerate(zip(keys, tables)):
                roots: dict[int, int] = {}
                for bit, vi in enumerate(support_idx[t]):
                    roots.setdefault(find(int(vi)), 0)
                    roots[find(int(vi))] |= 1 << bit
                cmasks = list(roots.values())
                k = len(cmasks)
                vm = np.zeros(1 << k, dtype=np.int64)
                for i, cm in enumerate(cmasks):
                    vm[1 << i : 2 << i] = vm[: 1 << i] | cm
                sel = table[vm]
                bits = _popcounts(k)
                nb = np.bincount(bits[sel], minlength=k + 1).astype(np.int64)
                piv = np.zeros(1 << k, dtype=np.int64)
                for cm in cmasks:
                    piv += table[vm] != table[vm ^ cm]
                pb = np.zeros(k + 1, dtype=np.int64)
                np.add.at(pb, bits, piv)
                ck = counts[t].setdefault((o, k), np.zeros(k + 1, dtype=np.int64))
                ck += nb
                pk = pivots[t].setdefault((o, k), np.zeros(k + 1, dtype=np.int64))
                pk += pb

        self._counts = counts
        self._pivots = pivots

    def _index(self, key: EventKey) -> int:
        try:
            return self._keys.index(key)
        except ValueError:
            raise KeyError(f"{key!r} was not part of this enumeration") from None

    def _weight(self, o: int) -> Fraction:
        p, q = self.p, 1 - self.p
        if p == 0:
            return Fraction(1) if o == 0 else Fraction(0)
        if p == 1:
            return Fraction(1) if o == self.n_edges else Fraction(0)
        return p**o * q ** (self.n_edges - o)

    def _assemble(self, tables: dict[tuple[int, int], np.ndarray]) -> ExactPoly:
        acc = ZERO_POLY
        for (o, k), arr in sorted(tables.items()):
            w = self._weight(o)
            if w == 0:
                continue
            for b in range(k + 1):
                if arr[b]:
                    acc = acc + _colour_kernel(k, b).scale(w * int(arr[b]))
        return acc

    def probability(self, key: EventKey) -> ExactPoly:
        """P[event] as an exact polynomial in r."""
        return self._assemble(self._counts[self._index(key)])

    def pivotal_expectation(self, key: EventKey) -> ExactPoly:
        """E[number of pivotal clusters] as an exact polynomial in r."""
        return self._assemble(self._pivots[self._index(key)])


def enumerate_exact(
    topology: Topology,
    window: Window,
    p,
    events: Iterable[EventKey],
    max_edges: int = 20,
) -> ExactEnumeration:
    """Exact joint treatment of several events on one small window."""
    return ExactEnumeration(topology, window, p, events, max_edges)


def exact_polynomial_in_r(
    topology: Topology, window: Window, p, event: EventKey, max_edges: int = 20
) -> ExactPoly:
    """P[event] in the divide-and-colour measure, exact in r."""
    return enumerate_exact(topology, window, p, [event], max_edges).probability(event)


# --- crossing dichotomy, checked to exhaustion -----------------------------


@dataclass
class SelfDualReport:
    topology: Topology
    n_rects: int
    n_colourings: int
    failures: list[tuple[RectRegion, int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def exhaustive_selfdual_check(topology: Topology, max_vertices: int = 12) -> SelfDualReport:
    """Verify the crossing dichotomy on every small rectangle, exhaustively.

    For each rectangle shape with at most ``max_vertices`` vertices and each
    of its 2^V colourings, exactly one of the following must hold: a black
    vertical ordinary crossing, or a white horizontal crossing in the
    matching adjacency.  Returns the count of checks and any violations
    (colour masks for which the dichotomy failed).
    """
    report = SelfDualReport(topology, 0, 0)
    ordinary = AdjacencyMode.ORDINARY
    star = AdjacencyMode.STAR  # identical to ordinary on a self-matching lattice
    for w in range(0, max_vertices):
        for h in range(0, max_vertices):
            if (w + 1) * (h + 1) > max_vertices:
                continue
            rect = RectRegion(0, w, 0, h)
            support = sorted(rect.vertices())
            n = len(support)
            index = {v: i for i, v in enumerate(support)}
            adj_o = _support_adjacency(support, topology, ordinary)
            adj_s = _support_adjacency(support, topology, star)
            top = [index[v] for v in support if v[1] == h]
            bottom = sum(1 << index[v] for v in support if v[1] == 0)
            left = [index[v] for v in support if v[0] == 0]
            right = sum(1 << index[v] for v in support if v[0] == w)
            full = (1 << n) - 1
            report.n_rects += 1
            for mask in range(1 << n):
                black_vertical = _bit_flood(adj_o, mask, top, bottom)
                white_horizontal = _bit_flood(adj_s, full ^ mask, left, right)
                report.n_colourings += 1
                if black_vertical == white_horizontal:
                    report.failures.append((rect, mask))
    return report


# --- circuits by winding number --------------------------------------------


def _plane(topology: Topology, x: float, y: float) -> tuple[float, float]:
    if topology is Topology.TRIANGULAR:
        return (x - 0.5 * y, y * math.sqrt(3.0) / 2.0)
    return (float(x), float(y))


def brute_force_circuit(
    blacks: set[Vertex],
    a: AnnulusRegion,
    colour: Colour,
    mode: AdjacencyMode,
    topology: Topology,
    max_steps: int = 5_000_000,
) -> bool:
    """Decide a circuit by enumerating simple cycles and their winding.

    A monochromatic circuit around the hole exists iff some self-avoiding
    cycle of that colour in the annulus has winding number +-1 about the
    hole centre.  Pure search, no duality -- the independent cross-check for
    the flood-based decision.  Capped at outer side 9.
    """
    if a.outer > 9:
        raise ValueError(f"outer side {a.outer} exceeds the brute-force cap of 9")
    want_black = colour is Colour.BLACK
    vset = {v for v in a.vertices() if (v in blacks) == want_black}
    offsets = neighbor_offsets(topology, mode)

    def degree(v):
        return sum((v[0] + dx, v[1] + dy) in vset for dx, dy in offsets)

    # Strip to the 2-core: vertices of degree <= 1 lie on no cycle, and
    # removing them cannot destroy one.  Purely graph-theoretic, so the
    # search stays independent of the flood-based production route.
    while True:
        dead = [v for v in vset if degree(v) <= 1]
        if not dead:
            break
        vset.difference_update(dead)

    verts = sorted(vset)
    nbrs = {
        v: sorted(
            (v[0] + dx, v[1] + dy) for dx, dy in offsets if (v[0] + dx, v[1] + dy) in vset
        )
        for v in verts
    }
    cx, cy = a.center
    cpx, cpy = _plane(topology, cx, cy)
    ang = {}
    for v in verts:
        px, py = embed(topology, v)
        ang[v] = math.atan2(py - cpy, px - cpx)

    def turn(u: Vertex, v: Vertex) -> float:
        d = ang[v] - ang[u]
        while d > math.pi:
            d -= 2 * math.pi
        while d <= -math.pi:
            d += 2 * math.pi
        return d

    steps = 0
    for start in verts:
        visited = {start}
        path = [start]
        winds = [0.0]

        stack: list[tuple[Vertex, list[Vertex]]] = [(start, list(nbrs[start]))]
        while stack:
            steps += 1
            if steps > max_steps:
                raise RuntimeError("brute-force circuit search exceeded its step budget")
            v, pending = stack[-1]
            if not pending:
                stack.pop()
                visited.discard(path.pop())
                winds.pop()
                continue
            w = pending.pop(0)
            if w == start and len(path) >= 3:
                total = winds[-1] + turn(v, w)
                if abs(total) > math.pi:
                    return True
                continue
            if w <= start or w in visited:
                continue
            visited.add(w)
            path.append(w)
            winds.append(winds[-1] + turn(v, w))
            stack.append((w, list(nbrs[w])))
    return False

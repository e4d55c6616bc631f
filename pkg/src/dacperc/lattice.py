"""Lattice geometry: coordinate systems, adjacency, and region predicates.

Two lattices are supported, both addressed by integer pairs ``(x, y)``:

* the square lattice, with ordinary (degree-4) and star/matching (degree-8,
  diagonals added) adjacency;
* the triangular lattice in skew coordinates, where ``(k, l)`` names the
  plane point ``(k - l/2, sqrt(3)/2 * l)``.  Its six neighbours are the
  offsets (+-1,0), (0,+-1), (1,1), (-1,-1), and the lattice is self-matching:
  star adjacency coincides with ordinary adjacency.

Everything here is integer-exact; Euclidean geometry never enters any
connectivity computation (it is only used for plotting-style embeddings,
e.g. winding numbers in the exhaustive circuit checks).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

Vertex = tuple[int, int]


class Topology(enum.Enum):
    SQUARE = "square"
    TRIANGULAR = "triangular"


class AdjacencyMode(enum.Enum):
    ORDINARY = "ordinary"
    STAR = "star"


# Neighbour offsets, sorted lexicographically so that every traversal that
# expands neighbours in list order is deterministic.
_SQUARE_ORDINARY = ((-1, 0), (0, -1), (0, 1), (1, 0))
_SQUARE_STAR = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))
_TRIANGULAR = ((-1, -1), (-1, 0), (0, -1), (0, 1), (1, 0), (1, 1))


def neighbor_offsets(topology: Topology, mode: AdjacencyMode) -> tuple[tuple[int, int], ...]:
    """Offsets ``d`` such that ``v`` and ``v + d`` are adjacent."""
    if topology is Topology.TRIANGULAR:
        return _TRIANGULAR
    if mode is AdjacencyMode.STAR:
        return _SQUARE_STAR
    return _SQUARE_ORDINARY


def neighbors(topology: Topology, mode: AdjacencyMode, v: Vertex) -> list[Vertex]:
    """Adjacent vertices of ``v``, in lexicographic order."""
    x, y = v
    return [(x + dx, y + dy) for dx, dy in neighbor_offsets(topology, mode)]


def matching_mode(topology: Topology, mode: AdjacencyMode) -> AdjacencyMode:
    """The adjacency dual to ``mode``: star<->ordinary on the square lattice,
    the identity on the (self-matching) triangular lattice."""
    if topology is Topology.TRIANGULAR:
        return mode
    return AdjacencyMode.STAR if mode is AdjacencyMode.ORDINARY else AdjacencyMode.ORDINARY


def embed(topology: Topology, v: Vertex) -> tuple[float, float]:
    """Plane coordinates of a vertex (only used for winding-number checks)."""
    x, y = v
    if topology is Topology.TRIANGULAR:
        return (x - 0.5 * y, 0.8660254037844386 * y)
    return (float(x), float(y))


def l1_ball_boundary(v: Vertex, n: int) -> set[Vertex]:
    """All vertices at L1 distance exactly ``n`` from ``v``."""
    if n < 0:
        raise ValueError("radius must be nonnegative")
    x, y = v
    if n == 0:
        return {v}
    out = set()
    for dx in range(-n, n + 1):
        dy = n - abs(dx)
        out.add((x + dx, y + dy))
        out.add((x + dx, y - dy))
    return out


@dataclass(frozen=True)
class RectRegion:
    """Axis-aligned rectangle of lattice points, both ends inclusive."""

    x0: int
    x1: int
    y0: int
    y1: int

    def __post_init__(self):
        if self.x0 > self.x1 or self.y0 > self.y1:
            raise ValueError(f"degenerate rectangle {self}")

    @staticmethod
    def s_rect(n: int, m: int) -> "RectRegion":
        """The standard rectangle [0,n] x [0,m]."""
        return RectRegion(0, n, 0, m)

    @property
    def width(self) -> int:
        return self.x1 - self.x0 + 1

    @property
    def height(self) -> int:
        return self.y1 - self.y0 + 1

    def __contains__(self, v: Vertex) -> bool:
        return self.x0 <= v[0] <= self.x1 and self.y0 <= v[1] <= self.y1

    def expand(self, margin: int) -> "RectRegion":
        return RectRegion(self.x0 - margin, self.x1 + margin, self.y0 - margin, self.y1 + margin)

    def vertices(self) -> list[Vertex]:
        """All member vertices in lexicographic (x, y) order."""
        return [(x, y) for x in range(self.x0, self.x1 + 1) for y in range(self.y0, self.y1 + 1)]


@dataclass(frozen=True)
class AnnulusRegion:
    """The square annulus with outer box [x0, x0+3m] x [y0, y0+3m] and the
    closed concentric box of side m removed.

    Stored by its lower-left anchor so that all corners stay integral; the
    midpoint (which the surrounded-hole predicate refers to) is available as
    ``center`` and may be half-integral when ``m`` is odd.
    """

    x0: int
    y0: int
    m: int

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("annulus parameter m must be >= 1")

    @property
    def inner(self) -> int:
        return self.m

    @property
    def outer(self) -> int:
        return 3 * self.m

    @property
    def outer_rect(self) -> RectRegion:
        return RectRegion(self.x0, self.x0 + 3 * self.m, self.y0, self.y0 + 3 * self.m)

    @property
    def hole_rect(self) -> RectRegion:
        return RectRegion(
            self.x0 + self.m, self.x0 + 2 * self.m, self.y0 + self.m, self.y0 + 2 * self.m
        )

    @property
    def center(self) -> tuple[float, float]:
        return (self.x0 + 1.5 * self.m, self.y0 + 1.5 * self.m)

    def __contains__(self, v: Vertex) -> bool:
        return v in self.outer_rect and v not in self.hole_rect

    def vertices(self) -> list[Vertex]:
        return [v for v in self.outer_rect.vertices() if v not in self.hole_rect]


Region = RectRegion | AnnulusRegion


def in_region(v: Vertex, region: Region) -> bool:
    """Membership predicate for rectangles and annuli."""
    return v in region

"""Cluster colourings: the second stage of the divide-and-colour measure.

Rather than storing a colour per vertex, every p-cluster carries a uniform
mark in [0,1) and the colouring at density ``r`` is *derived*: a cluster is
black iff its mark is below ``r`` (unless explicitly overridden).  One sampled
configuration therefore yields the whole monotone family of colourings over
``r`` at once -- re-thresholding is free, black sets grow with ``r``, and
crossing events acquire a sharp per-replica threshold.

Marks are keyed on (seed, canonical cluster id), so identical bond
configurations coloured with identical seeds agree exactly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .bonds import ClusterLabeling
from .lattice import Vertex
from .rng import STREAM_MARKS, derive_key, uniform_block


class Colour(enum.Enum):
    BLACK = "black"
    WHITE = "white"

    @property
    def other(self) -> "Colour":
        return Colour.WHITE if self is Colour.BLACK else Colour.BLACK


@dataclass
class ColourConfig:
    """A colouring of the p-clusters of one bond configuration.

    ``marks`` holds one uniform per *vertex index*; only the entries at
    canonical cluster ids are ever consulted, which makes the per-cluster
    draws independent and stable under relabelling.
    """

    clusters: ClusterLabeling
    marks: np.ndarray
    r: float
    overrides: dict[int, bool] = field(default_factory=dict)  # cluster id -> is black

    def cluster_is_black(self, cluster_id: int) -> bool:
        self.clusters._compact(cluster_id)  # validate the id
        if cluster_id in self.overrides:
            return self.overrides[cluster_id]
        return bool(self.marks[cluster_id] < self.r)

    def is_black(self, v: Vertex) -> bool:
        cid = self.clusters.cluster_of(v)
        if cid in self.overrides:
            return self.overrides[cid]
        return bool(self.marks[cid] < self.r)

    def black_mask(self) -> np.ndarray:
        """Boolean per-vertex black indicator over the padded window."""
        label = self.clusters.label
        mask = self.marks[label] < self.r
        for cid, forced in self.overrides.items():
            mask[label == cid] = forced
        return mask


def assign_colours(clusters: ClusterLabeling, r: float, seed: int) -> ColourConfig:
    """Draw independent marks and colour each cluster black with probability r."""
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"r={r} outside [0, 1]")
    key = derive_key(seed, STREAM_MARKS)
    marks = uniform_block(key, 0, clusters.geometry.n_vertices)
    return ColourConfig(clusters, marks, r)


def recolour_at(x: ColourConfig, r: float) -> ColourConfig:
    """Same marks, new threshold: the monotone coupling across r."""
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"r={r} outside [0, 1]")
    return ColourConfig(x.clusters, x.marks, r, dict(x.overrides))


def flip_cluster(x: ColourConfig, cluster_id: int) -> ColourConfig:
    """Toggle the colour of one cluster, leaving all others untouched."""
    flipped = not x.cluster_is_black(cluster_id)  # validates the id
    overrides = dict(x.overrides)
    if bool(x.marks[cluster_id] < x.r) == flipped:
        overrides.pop(cluster_id, None)  # back to the mark-derived colour
    else:
        overrides[cluster_id] = flipped
    return ColourConfig(x.clusters, x.marks, x.r, overrides)


def colour(x: ColourConfig, v: Vertex) -> Colour:
    return Colour.BLACK if x.is_black(v) else Colour.WHITE

"""Colour events: the measurable statements the lab estimates and differentiates.

An event here is always a function of the colouring only (bond randomness
enters through the clusters).  Three kinds cover everything the verification
suite needs: rectangle crossings, annulus circuits, and "this vertex is
black".  Each event is monochromatic, hence monotone in ``r``: black events
are increasing, white events decreasing.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .colouring import Colour, ColourConfig
from .connectivity import CrossingSpec, has_circuit_in_annulus, has_crossing
from .lattice import AdjacencyMode, AnnulusRegion, Vertex


class Monotonicity(enum.Enum):
    INCREASING = "increasing"
    DECREASING = "decreasing"


def _expected_monotonicity(colour: Colour) -> Monotonicity:
    return Monotonicity.INCREASING if colour is Colour.BLACK else Monotonicity.DECREASING


@dataclass(frozen=True)
class CrossingEvent:
    spec: CrossingSpec
    monotonicity: Monotonicity = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        expected = _expected_monotonicity(self.spec.colour)
        if self.monotonicity is None:
            object.__setattr__(self, "monotonicity", expected)
        elif self.monotonicity is not expected:
            raise ValueError(
                f"{self.spec.colour.value} crossings are {expected.value} in r"
            )

    @property
    def colour(self) -> Colour:
        return self.spec.colour

    def support(self) -> set[Vertex]:
        return set(self.spec.rect.vertices())

    def holds(self, x: ColourConfig) -> bool:
        return has_crossing(x, self.spec)


@dataclass(frozen=True)
class CircuitEvent:
    annulus: AnnulusRegion
    colour: Colour
    mode: AdjacencyMode
    monotonicity: Monotonicity = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        expected = _expected_monotonicity(self.colour)
        if self.monotonicity is None:
            object.__setattr__(self, "monotonicity", expected)
        elif self.monotonicity is not expected:
            raise ValueError(
                f"{self.colour.value} circuits are {expected.value} in r"
            )

    def support(self) -> set[Vertex]:
        return set(self.annulus.vertices())

    def holds(self, x: ColourConfig) -> bool:
        return has_circuit_in_annulus(x, self.annulus, self.colour, self.mode)


@dataclass(frozen=True)
class VertexBlackEvent:
    v: Vertex
    monotonicity: Monotonicity = Monotonicity.INCREASING

    def __post_init__(self):
        if self.monotonicity is not Monotonicity.INCREASING:
            raise ValueError("a vertex being black is increasing in r")

    @property
    def colour(self) -> Colour:
        return Colour.BLACK

    def support(self) -> set[Vertex]:
        return {self.v}

    def holds(self, x: ColourConfig) -> bool:
        return x.is_black(self.v)


EventSpec = CrossingEvent | CircuitEvent | VertexBlackEvent

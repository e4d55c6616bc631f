from fractions import Fraction

import pytest

from dacperc import (
    AdjacencyMode,
    Colour,
    CrossingEvent,
    RectRegion,
    Topology,
    VertexBlackEvent,
    Window,
)
from dacperc.connectivity import CrossingSpec, Direction
from dacperc.pivotal import pivotal_clusters, russo_check

from conftest import colouring_from_blacks

F = Fraction


def crossing_event(rect, direction=Direction.VERTICAL):
    return CrossingEvent(
        CrossingSpec(rect, direction, Colour.BLACK, AdjacencyMode.ORDINARY)
    )


def test_pivotal_clusters_by_hand():
    # column pattern: (1,0) and (1,2) black, middle (1,1) white.  Flipping
    # the middle completes the crossing, flipping anything else cannot.
    rect = RectRegion(0, 2, 0, 2)
    x = colouring_from_blacks(Topology.SQUARE, rect, {(1, 0), (1, 2)})
    ev = crossing_event(rect)
    got = pivotal_clusters(x, ev)
    assert got == [x.clusters.cluster_of((1, 1))]


def test_pivotal_when_event_holds():
    # full black column: each of its three singleton clusters is pivotal
    # (whitening any one cuts the only path), the rest are not
    rect = RectRegion(0, 2, 0, 2)
    x = colouring_from_blacks(Topology.SQUARE, rect, {(1, 0), (1, 1), (1, 2)})
    ev = crossing_event(rect)
    want = sorted(x.clusters.cluster_of(v) for v in [(1, 0), (1, 1), (1, 2)])
    assert pivotal_clusters(x, ev) == want


def test_no_pivotal_when_event_is_robust():
    # two disjoint black columns: no single cluster flip can break both
    rect = RectRegion(0, 2, 0, 2)
    cols = {(0, y) for y in range(3)} | {(2, y) for y in range(3)}
    x = colouring_from_blacks(Topology.SQUARE, rect, cols)
    assert pivotal_clusters(x, crossing_event(rect)) == []


def test_vertex_event_pivotal_is_own_cluster():
    rect = RectRegion(0, 2, 0, 2)
    x = colouring_from_blacks(Topology.SQUARE, rect, {(0, 0)})
    ev = VertexBlackEvent((1, 1))
    assert pivotal_clusters(x, ev) == [x.clusters.cluster_of((1, 1))]


@pytest.mark.parametrize("p", [F(0), F(3, 10), F(1, 2)])
def test_oracle_derivative_identity_is_exact(p):
    rect = RectRegion(0, 2, 0, 1)
    w = Window(rect, 0)
    for ev in (crossing_event(rect), crossing_event(rect, Direction.HORIZONTAL)):
        rep = russo_check(
            Topology.SQUARE, w, p, ev, [F(1, 4), F(1, 2), F(3, 4)], method="oracle"
        )
        assert rep.max_abs_gap == 0
        assert all(g == 0 for g in rep.gaps)
        assert rep.within(0)


def test_oracle_identity_for_decreasing_events():
    rect = RectRegion(0, 1, 0, 1)
    w = Window(rect, 0)
    white = CrossingEvent(
        CrossingSpec(rect, Direction.HORIZONTAL, Colour.WHITE, AdjacencyMode.STAR)
    )
    rep = russo_check(Topology.SQUARE, w, F(1, 2), white, [F(1, 2)], method="oracle")
    assert rep.max_abs_gap == 0
    assert rep.derivative[0] < 0, "white events lose probability as r grows"
    assert rep.pivotal[0] < 0, "signed pivotal count carries the minus sign"


def test_mc_identity_within_noise():
    rect = RectRegion(0, 2, 0, 1)
    w = Window(rect, 0)
    rep = russo_check(
        Topology.SQUARE, w, F(3, 10), crossing_event(rect, Direction.HORIZONTAL),
        [0.5], method="mc", seed=3, n_samples=20_000,
    )
    assert rep.stderr is not None
    assert abs(rep.gaps[0]) < 4 * rep.stderr[0]


def test_method_and_h_validation():
    rect = RectRegion(0, 1, 0, 1)
    w = Window(rect, 0)
    with pytest.raises(ValueError):
        russo_check(Topology.SQUARE, w, F(0), crossing_event(rect), [0.5], method="nope")
    with pytest.raises(ValueError):
        russo_check(
            Topology.SQUARE, w, F(0), crossing_event(rect), [0.5], method="mc", h=0.7
        )

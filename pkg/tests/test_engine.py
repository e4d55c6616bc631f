import numpy as np
import pytest

from dacperc import (
    AdjacencyMode,
    AnnulusRegion,
    CircuitEvent,
    Colour,
    CrossingEvent,
    RectRegion,
    Topology,
    VertexBlackEvent,
    Window,
    assign_colours,
    label_clusters,
    recolour_at,
    sample_bonds,
)
from dacperc.connectivity import (
    CrossingSpec,
    Direction,
    crossing_threshold,
    has_circuit_in_annulus,
    has_crossing,
)
from dacperc.engine import (
    circuit_indicators,
    colour_cluster_sizes,
    crossing_bottlenecks,
    dependence_ranges,
    event_indicators,
    thresholds_from_bottlenecks,
)
from dacperc.bonds import dependence_range
from dacperc.rng import replica_seed

RECT = RectRegion(0, 6, 0, 6)
WINDOW = Window(RECT, 3)
SPEC = CrossingSpec(RECT, Direction.VERTICAL, Colour.BLACK, AdjacencyMode.ORDINARY)


def replicas(topo, p, seed, n):
    for j in range(n):
        sj = replica_seed(seed, j)
        c = label_clusters(sample_bonds(topo, WINDOW, p, sj))
        yield c, assign_colours(c, 0.5, sj)


@pytest.mark.parametrize("topo", list(Topology))
def test_bottlenecks_reproduce_single_replica_thresholds(topo):
    bn, cens = crossing_bottlenecks(topo, WINDOW, SPEC, 0.4, 17, 25)
    ts = thresholds_from_bottlenecks(bn)
    for j, (c, x) in enumerate(replicas(topo, 0.4, 17, 25)):
        assert ts[j] == crossing_threshold(c, x.marks, SPEC)


def test_batching_and_threads_do_not_change_results():
    base, cens = crossing_bottlenecks(Topology.SQUARE, WINDOW, SPEC, 0.4, 3, 70)
    for threads, batch in ((1, 7), (4, 16), (3, 64), (2, 1)):
        got, cg = crossing_bottlenecks(
            Topology.SQUARE, WINDOW, SPEC, 0.4, 3, 70, threads=threads, batch_size=batch
        )
        assert np.array_equal(base, got)
        assert np.array_equal(cens, cg)


def test_white_crossing_route_negates_marks():
    white = CrossingSpec(RECT, Direction.HORIZONTAL, Colour.WHITE, AdjacencyMode.STAR)
    ind, _ = event_indicators(Topology.SQUARE, WINDOW, CrossingEvent(white), 0.4, 0.62, 5, 40)
    for j, (c, x) in enumerate(replicas(Topology.SQUARE, 0.4, 5, 40)):
        assert ind[j] == has_crossing(recolour_at(x, 0.62), white)


@pytest.mark.parametrize(
    "event",
    [
        CrossingEvent(SPEC),
        CircuitEvent(AnnulusRegion(1, 1, 1), Colour.BLACK, AdjacencyMode.ORDINARY),
        CircuitEvent(AnnulusRegion(0, 0, 2), Colour.WHITE, AdjacencyMode.STAR),
        VertexBlackEvent((3, 3)),
    ],
)
def test_indicators_match_direct_evaluation(event):
    ind, _ = event_indicators(Topology.SQUARE, WINDOW, event, 0.35, 0.55, 23, 30)
    for j, (c, x) in enumerate(replicas(Topology.SQUARE, 0.35, 23, 30)):
        assert ind[j] == event.holds(recolour_at(x, 0.55))


def test_circuit_indicators_direct_entry_point():
    a = AnnulusRegion(0, 0, 2)
    ind, cens = circuit_indicators(
        Topology.TRIANGULAR, WINDOW, a, Colour.BLACK, AdjacencyMode.ORDINARY,
        0.3, 0.6, 11, 30,
    )
    for j, (c, x) in enumerate(replicas(Topology.TRIANGULAR, 0.3, 11, 30)):
        y = recolour_at(x, 0.6)
        assert ind[j] == has_circuit_in_annulus(y, a, Colour.BLACK, AdjacencyMode.ORDINARY)


def test_dependence_ranges_match_api():
    vals, cens = dependence_ranges(Topology.SQUARE, WINDOW, 0.45, 29, 40, (2, 2))
    for j, (c, x) in enumerate(replicas(Topology.SQUARE, 0.45, 29, 40)):
        want = dependence_range(c, (2, 2))
        assert vals[j] == want.value
        assert cens[j] == want.censored


def test_cluster_sizes_match_bfs():
    from collections import deque

    from dacperc.lattice import neighbor_offsets

    sizes, cens = colour_cluster_sizes(Topology.SQUARE, WINDOW, 0.4, 0.45, 31, 40, (3, 3))
    offsets = neighbor_offsets(Topology.SQUARE, AdjacencyMode.ORDINARY)
    full = WINDOW.full
    for j, (c, x) in enumerate(replicas(Topology.SQUARE, 0.4, 31, 40)):
        y = recolour_at(x, 0.45)
        if not y.is_black((3, 3)):
            assert sizes[j] == 0
            continue
        seen = {(3, 3)}
        q = deque(seen)
        while q:
            vx, vy = q.popleft()
            for dx, dy in offsets:
                w = (vx + dx, vy + dy)
                if w in full and w not in seen and y.is_black(w):
                    seen.add(w)
                    q.append(w)
        assert sizes[j] == len(seen)
        touches = any(
            v[0] in (full.x0, full.x1) or v[1] in (full.y0, full.y1) for v in seen
        )
        assert cens[j] == touches


def test_censoring_flags_whole_window_cluster():
    # p=1 wires the whole window: every replica is censored for any vertex
    _, cens = dependence_ranges(Topology.SQUARE, WINDOW, 1.0, 7, 10, (0, 0))
    assert cens.all()
    _, cens0 = dependence_ranges(Topology.SQUARE, WINDOW, 0.0, 7, 10, (0, 0))
    assert not cens0.any()


def test_black_spec_required_for_bottlenecks():
    white = CrossingSpec(RECT, Direction.VERTICAL, Colour.WHITE, AdjacencyMode.ORDINARY)
    with pytest.raises(ValueError):
        crossing_bottlenecks(Topology.SQUARE, WINDOW, white, 0.3, 1, 4)


def test_rect_outside_window_is_rejected():
    far = CrossingSpec(
        RectRegion(100, 106, 0, 6), Direction.VERTICAL, Colour.BLACK, AdjacencyMode.ORDINARY
    )
    with pytest.raises((ValueError, KeyError)):
        crossing_bottlenecks(Topology.SQUARE, WINDOW, far, 0.3, 1, 4)

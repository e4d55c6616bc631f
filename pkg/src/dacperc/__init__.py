"""Simulation and verification lab for the two-dimensional divide-and-colour model.

Subcritical Bernoulli bonds carve the lattice into clusters; an independent
coin colours each cluster black with probability r.  This package samples
that two-stage measure on finite windows, locates crossing points, fits
decay rates, and -- the part we lean on hardest -- cross-checks every piece
of machinery against exact small-window enumeration and combinatorial
identities that hold configuration by configuration.
"""

from .bonds import (
    BondConfig,
    ClusterLabeling,
    DependenceRange,
    Window,
    default_pad,
    dependence_range,
    dump_bonds,
    edge_boundary,
    is_closed_barrier,
    label_clusters,
    load_bonds,
    sample_bonds,
)
from .colouring import (
    Colour,
    ColourConfig,
    assign_colours,
    colour,
    flip_cluster,
    recolour_at,
)
from .connectivity import (
    AccessLog,
    CrossingSpec,
    Direction,
    PathResult,
    crossing_threshold,
    has_circuit_in_annulus,
    has_crossing,
    leftmost_vertical_crossing,
    lowest_horizontal_star_crossing,
    thicken,
)
from .estimators import (
    P_C,
    CrossingCurve,
    DecayFit,
    Estimate,
    FiniteSizeReport,
    FkgReport,
    MixingReport,
    RcEstimate,
    SupercriticalWarning,
    crossing_curve,
    estimate_event_prob,
    estimate_rc,
    finite_size_criterion,
    fit_cluster_size_decay,
    fit_dependence_decay,
    fkg_check,
    mixing_check,
)
from .events import (
    CircuitEvent,
    CrossingEvent,
    EventSpec,
    Monotonicity,
    VertexBlackEvent,
)
from .lattice import (
    AdjacencyMode,
    AnnulusRegion,
    RectRegion,
    Topology,
    Vertex,
    in_region,
    l1_ball_boundary,
    matching_mode,
    neighbor_offsets,
    neighbors,
)
from .oracle import (
    ExactPoly,
    SelfDualReport,
    brute_force_circuit,
    enumerate_exact,
    exact_polynomial_in_r,
    exhaustive_selfdual_check,
)
from .pivotal import RussoReport, pivotal_clusters, russo_check

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

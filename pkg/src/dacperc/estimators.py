"""Monte Carlo estimators, decay fits and verification checks.

All estimators report the *windowed* quantity -- the probability or law on
the padded window actually sampled -- together with the fraction of replicas
whose relevant clusters touched the window edge.  That censored fraction is
the honest bound on how far the windowed value can sit from its
infinite-lattice counterpart; with subcritical ``p`` and default padding it
is tiny.

Seeds fully determine every number produced here, including bootstrap
resamples, independent of thread count.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import engine
from .bonds import Window
from .colouring import Colour
from .connectivity import CrossingSpec, Direction
from .events import CrossingEvent, EventSpec
from .lattice import AdjacencyMode, RectRegion, Topology
from .oracle import enumerate_exact
from .rng import STREAM_GENERIC, derive_key, uniform_block

#: Bond-percolation critical points of the supported lattices.
P_C = {
    Topology.SQUARE: 0.5,
    Topology.TRIANGULAR: 2.0 * math.sin(math.pi / 18.0),
}


class SupercriticalWarning(UserWarning):
    """Raised when an estimator is asked to run at p above the critical point."""


def check_subcritical(topology: Topology, p: float) -> bool:
    """Warn (and return True) when p exceeds the critical bond density."""
    if p > P_C[topology]:
        warnings.warn(
            f"p={p} exceeds the critical density {P_C[topology]:.6f} of the "
            f"{topology.value} lattice; windowed estimates will not stabilise",
            SupercriticalWarning,
            stacklevel=3,
        )
        return True
    return False


@dataclass
class Estimate:
    value: float
    stderr: float
    n_samples: int
    seed: int
    censored_fraction: float


def _binomial_estimate(ind: np.ndarray, censored: np.ndarray, seed: int) -> Estimate:
    n = len(ind)
    v = float(np.mean(ind)) if n else float("nan")
    se = math.sqrt(v * (1.0 - v) / n) if n else float("nan")
    return Estimate(v, se, n, seed, float(np.mean(censored)) if n else 0.0)


def estimate_event_prob(
    topology: Topology,
    window: Window,
    p: float,
    r: float,
    event: EventSpec,
    n_samples: int,
    seed: int,
    threads: int = 1,
) -> Estimate:
    """P[event] at (p, r) on the given window, with binomial standard error."""
    check_subcritical(topology, p)
    ind, censored = engine.event_indicators(
        topology, window, event, p, r, seed, n_samples, threads=threads
    )
    return _binomial_estimate(ind, censored, seed)


# --- crossing curves and the crossing point --------------------------------


@dataclass
class CrossingCurve:
    rs: np.ndarray
    probs: np.ndarray
    band_low: np.ndarray       # simultaneous confidence band (DKW)
    band_high: np.ndarray
    alpha: float
    n_samples: int
    seed: int
    censored_fraction: float


def _spec_thresholds(
    topology: Topology,
    window: Window,
    spec: CrossingSpec,
    p: float,
    seed: int,
    n_samples: int,
    threads: int,
) -> tuple[np.ndarray, np.ndarray, bool]:
    """Per-replica sharp levels for a crossing spec of either colour.

    For black: crossing present at r iff level < r.  For white: present iff
    r <= level.  The bool return distinguishes the two readings.
    """
    if spec.colour is Colour.BLACK:
        bn, cens = engine.crossing_bottlenecks(
            topology, window, spec, p, seed, n_samples, threads=threads
        )
        return bn, cens, True
    twin = CrossingSpec(spec.rect, spec.direction, Colour.BLACK, spec.mode)
    bn, cens = engine.crossing_bottlenecks(
        topology, window, twin, p, seed, n_samples, threads=threads, negate_marks=True
    )
    return 1.0 - bn, cens, False


def crossing_curve(
    topology: Topology,
    window: Window,
    spec: CrossingSpec,
    p: float,
    rs,
    n_samples: int,
    seed: int,
    threads: int = 1,
    alpha: float = 0.05,
) -> CrossingCurve:
    """Empirical r -> P[crossing] curve with a simultaneous DKW band.

    One threshold pass serves every grid point, so the curve is exactly
    monotone and self-consistent across r.
    """
    check_subcritical(topology, p)
    levels, censored, black = _spec_thresholds(
        topology, window, spec, p, seed, n_samples, threads
    )
    rs = np.asarray(rs, dtype=np.float64)
    if black:
        probs = np.array([np.mean(levels < r) for r in rs])
    else:
        probs = np.array([np.mean(r <= levels) for r in rs])
    eps = math.sqrt(math.log(2.0 / alpha) / (2.0 * n_samples))
    return CrossingCurve(
        rs,
        probs,
        np.clip(probs - eps, 0.0, 1.0),
        np.clip(probs + eps, 0.0, 1.0),
        alpha,
        n_samples,
        seed,
        float(np.mean(censored)),
    )


@dataclass
class RcEstimate:
    topology: Topology
    p: float
    n: int
    aspect: int
    direction: Direction
    mode: AdjacencyMode
    r_hat: float
    ci: tuple[float, float]
    method: str
    n_samples: int
    seed: int
    censored_fraction: float


def estimate_rc(
    topology: Topology,
    p: float,
    n: int,
    n_samples: int,
    seed: int,
    *,
    aspect: int = 1,
    direction: Direction = Direction.VERTICAL,
    mode: AdjacencyMode = AdjacencyMode.ORDINARY,
    threads: int = 1,
    method: str = "threshold-median",
    pad: int | None = None,
    n_bootstrap: int = 199,
) -> RcEstimate:
    """Finite-size crossing point: the r where the crossing curve hits 1/2.

    The rectangle is [0, n] x [0, aspect*n].  The default method takes the
    median of the per-replica crossing thresholds and a percentile bootstrap
    interval; ``method="bisection"`` instead brackets the half-probability
    point with fresh replicas per probe -- slower and coarser, but sharing
    no machinery with the threshold route, which makes it a useful
    cross-check.
    """
    check_subcritical(topology, p)
    rect = RectRegion(0, n, 0, aspect * n)
    window = Window.around(rect, pad)
    spec = CrossingSpec(rect, direction, Colour.BLACK, mode)

    if method == "threshold-median":
        bn, censored = engine.crossing_bottlenecks(
            topology, window, spec, p, seed, n_samples, threads=threads
        )
        thresholds = engine.thresholds_from_bottlenecks(bn)
        r_hat = float(np.median(thresholds))
        key = derive_key(seed, STREAM_GENERIC)
        medians = np.empty(n_bootstrap)
        for b in range(n_bootstrap):
            u = uniform_block(key, b * n_samples, n_samples)
            idx = (u * n_samples).astype(np.int64)
            medians[b] = np.median(thresholds[idx])
        ci = (float(np.quantile(medians, 0.025)), float(np.quantile(medians, 0.975)))
        return RcEstimate(
            topology, p, n, aspect, direction, mode, r_hat, ci, method,
            n_samples, seed, float(np.mean(censored)),
        )

    if method != "bisection":
        raise ValueError(f"unknown method {method!r}")
    lo, hi = 0.0, 1.0
    n_probe = max(n_samples // 16, 500)
    cens_total = 0.0
    probes = 0
    event_rect = CrossingEvent(spec)
    for step in range(14):
        mid = 0.5 * (lo + hi)
        ind, cens = engine.event_indicators(
            topology, window, event_rect, p, mid,
            derive_key(seed, step), n_probe, threads=threads,
        )
        cens_total += float(np.mean(cens))
        probes += 1
        if float(np.mean(ind)) < 0.5:
            lo = mid
        else:
            hi = mid
    return RcEstimate(
        topology, p, n, aspect, direction, mode, 0.5 * (lo + hi), (lo, hi),
        method, n_probe * probes, seed, cens_total / probes,
    )


# --- decay fits ------------------------------------------------------------


@dataclass
class DecayFit:
    ns: np.ndarray
    survival: np.ndarray
    slope: float
    intercept: float
    r_squared: float
    censored_fraction: float
    n_samples: int
    seed: int

    def extrapolate(self, n: float) -> float:
        """Fitted survival probability at (possibly fractional or large) n."""
        return math.exp(self.intercept + self.slope * n)


def _survival_fit(
    values: np.ndarray,
    censored: np.ndarray,
    ns: np.ndarray,
    n_samples: int,
    seed: int,
    n_min_fit: int,
) -> DecayFit:
    kept = values[~censored]
    if kept.size == 0:
        raise ValueError("every replica was censored; enlarge the window")
    surv = np.array([np.mean(kept >= n) for n in ns], dtype=np.float64)
    sel = (surv > 0) & (ns >= n_min_fit)
    if int(sel.sum()) < 3:
        raise ValueError("fewer than 3 usable survival points; decay too fast to fit")
    x = ns[sel].astype(np.float64)
    y = np.log(surv[sel])
    slope, intercept = np.polyfit(x, y, 1)
    fitted = intercept + slope * x
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(
        ns, surv, float(slope), float(intercept), r2,
        float(np.mean(censored)), n_samples, seed,
    )


def fit_dependence_decay(
    topology: Topology,
    p: float,
    n_max: int,
    n_samples: int,
    seed: int,
    *,
    threads: int = 1,
    n_min_fit: int = 2,
    pad: int | None = None,
) -> DecayFit:
    """Log-linear fit of P[the p-cluster of the origin reaches L1 distance n].

    Subcritical theory says this survival decays exponentially; the fitted
    slope is minus the decay rate.  Censored replicas (cluster touching the
    window edge) are dropped from the survival counts and reported.
    """
    check_subcritical(topology, p)
    core = RectRegion(-n_max, n_max, -n_max, n_max)
    window = Window.around(core, pad)
    values, censored = engine.dependence_ranges(
        topology, window, p, seed, n_samples, (0, 0), threads=threads
    )
    ns = np.arange(1, n_max + 1, dtype=np.int64)
    return _survival_fit(values, censored, ns, n_samples, seed, n_min_fit)


def fit_cluster_size_decay(
    topology: Topology,
    p: float,
    r: float,
    n_max: int,
    n_samples: int,
    seed: int,
    *,
    threads: int = 1,
    n_min_fit: int = 2,
    half_width: int = 32,
    pad: int | None = None,
) -> DecayFit:
    """Log-linear fit of P[|black r-cluster of the origin| >= n].

    In the subcritical-p, small-r regime the colour cluster of a vertex is
    finite with exponentially decaying size; this measures that tail up to
    ``n_max`` vertices.
    """
    check_subcritical(topology, p)
    core = RectRegion(-half_width, half_width, -half_width, half_width)
    window = Window.around(core, pad)
    sizes, censored = engine.colour_cluster_sizes(
        topology, window, p, r, seed, n_samples, (0, 0), threads=threads
    )
    ns = np.arange(1, n_max + 1, dtype=np.int64)
    return _survival_fit(sizes, censored, ns, n_samples, seed, n_min_fit)


# --- correlation checks ----------------------------------------------------


@dataclass
class FkgReport:
    method: str
    r_values: tuple[float, ...]
    covariances: list
    stderr: list | None
    min_covariance: float

    @property
    def ok(self) -> bool:
        return all(c >= 0 for c in self.covariances)


def fkg_check(
    topology: Topology,
    window: Window,
    p,
    event_a: EventSpec,
    event_b: EventSpec,
    r_values,
    method: str = "oracle",
    *,
    n_samples: int = 10_000,
    seed: int = 0,
    threads: int = 1,
    max_edges: int = 20,
) -> FkgReport:
    """Positive association of two like-monotone events.

    Exact mode computes Cov(A, B) as rational numbers from the small-window
    enumeration; they must all be >= 0.  Monte Carlo mode estimates the
    covariance on shared replicas.  Events of opposite monotonicity are
    rejected: the inequality simply does not apply to them.
    """
    if event_a.monotonicity is not event_b.monotonicity:
        raise ValueError(
            "events of mixed monotonicity are not positively associated; "
            "complement one of them first"
        )
    rs = tuple(float(r) for r in r_values)
    if method == "oracle":
        enum = enumerate_exact(
            topology, window, p, [event_a, event_b, (event_a, event_b)], max_edges=max_edges
        )
        pa = enum.probability(event_a)
        pb = enum.probability(event_b)
        pab = enum.probability((event_a, event_b))
        covs = [pab(Fraction(r)) - pa(Fraction(r)) * pb(Fraction(r)) for r in r_values]
        return FkgReport("oracle", rs, covs, None, float(min(covs)))

    if method != "mc":
        raise ValueError(f"unknown method {method!r}")
    covs, errs = [], []
    for r in rs:
        ia, _ = engine.event_indicators(topology, window, event_a, float(p), r, seed, n_samples, threads=threads)
        ib, _ = engine.event_indicators(topology, window, event_b, float(p), r, seed, n_samples, threads=threads)
        prod = (ia.astype(np.float64) - ia.mean()) * (ib.astype(np.float64) - ib.mean())
        covs.append(float(prod.mean()))
        errs.append(float(prod.std(ddof=1) / math.sqrt(n_samples)))
    return FkgReport("mc", rs, covs, errs, float(min(covs)))


@dataclass
class MixingReport:
    p_a: float
    p_b: float
    p_joint: float
    covariance: float
    stderr: float
    separation: int
    n_samples: int
    seed: int

    def within(self, z: float = 4.0) -> bool:
        return abs(self.covariance) <= z * self.stderr


def _support_distance(a: EventSpec, b: EventSpec) -> int:
    sa, sb = a.support(), b.support()
    return min(abs(u[0] - v[0]) + abs(u[1] - v[1]) for u in sa for v in sb)


def mixing_check(
    topology: Topology,
    window: Window,
    p: float,
    r: float,
    event_a: EventSpec,
    event_b: EventSpec,
    n_samples: int,
    seed: int,
    threads: int = 1,
) -> MixingReport:
    """Estimate the covariance of two events with well-separated supports.

    Subcritical decoupling predicts a covariance exponentially small in the
    support separation; the report carries the separation so callers can
    judge the comparison.  Shared replicas keep the difference estimate
    tight.
    """
    check_subcritical(topology, p)
    ia, _ = engine.event_indicators(topology, window, event_a, p, r, seed, n_samples, threads=threads)
    ib, _ = engine.event_indicators(topology, window, event_b, p, r, seed, n_samples, threads=threads)
    fa, fb = ia.astype(np.float64), ib.astype(np.float64)
    prod = (fa - fa.mean()) * (fb - fb.mean())
    return MixingReport(
        float(fa.mean()),
        float(fb.mean()),
        float((fa * fb).mean()),
        float(prod.mean()),
        float(prod.std(ddof=1) / math.sqrt(n_samples)),
        _support_distance(event_a, event_b),
        n_samples,
        seed,
    )


# --- the finite-size percolation certificate -------------------------------


@dataclass
class FiniteSizeReport:
    topology: Topology
    p: float
    r: float
    N: int
    eps: float
    range_term: float          # (N+1)(3N+1) * fitted P[D(0) >= N/3]
    range_ok: bool
    crossing: Estimate
    crossing_ok: bool
    decay: DecayFit = field(repr=False)

    @property
    def certified(self) -> bool:
        return self.range_ok and self.crossing_ok


def finite_size_criterion(
    topology: Topology,
    p: float,
    r: float,
    N: int,
    eps: float,
    n_samples: int,
    seed: int,
    *,
    threads: int = 1,
    decay_n_max: int = 16,
    decay_samples: int | None = None,
    z: float = 3.0,
) -> FiniteSizeReport:
    """Two-condition sufficient certificate for an infinite black cluster.

    Condition 1: (N+1)(3N+1) P[D(0) >= N/3] <= eps, evaluated through the
    fitted exponential tail (the raw frequency at N/3 is far below Monte
    Carlo resolution precisely when the condition holds comfortably).
    Condition 2: the vertical black crossing of [0,N] x [0,3N] has
    probability > 1 - eps, demanded at ``z`` standard errors.  When both
    hold, the standard renormalisation argument yields percolation at
    (p, r); the certificate is conservative, never permissive.
    """
    check_subcritical(topology, p)
    decay = fit_dependence_decay(
        topology, p, decay_n_max, decay_samples or max(n_samples, 10_000),
        derive_key(seed, 1), threads=threads,
    )
    m = math.ceil(N / 3)
    range_term = (N + 1) * (3 * N + 1) * decay.extrapolate(m)
    range_ok = decay.slope < 0 and range_term <= eps

    rect = RectRegion(0, N, 0, 3 * N)
    window = Window.around(rect)
    spec = CrossingSpec(rect, Direction.VERTICAL, Colour.BLACK, AdjacencyMode.ORDINARY)
    bn, censored = engine.crossing_bottlenecks(
        topology, window, spec, p, derive_key(seed, 2), n_samples, threads=threads
    )
    ind = r > bn
    est = _binomial_estimate(ind, censored, seed)
    crossing_ok = est.value - z * est.stderr > 1.0 - eps
    return FiniteSizeReport(
        topology, p, r, N, eps, range_term, range_ok, est, crossing_ok, decay
    )

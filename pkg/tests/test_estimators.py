import math
from fractions import Fraction

import numpy as np
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
from dacperc.estimators import (
    P_C,
    SupercriticalWarning,
    check_subcritical,
    crossing_curve,
    estimate_event_prob,
    estimate_rc,
    finite_size_criterion,
    fit_cluster_size_decay,
    fit_dependence_decay,
    fkg_check,
    mixing_check,
)
from dacperc.oracle import exact_polynomial_in_r

UNIT = RectRegion(0, 1, 0, 1)
V_UNIT = CrossingSpec(UNIT, Direction.VERTICAL, Colour.BLACK, AdjacencyMode.ORDINARY)


def test_critical_points():
    assert P_C[Topology.SQUARE] == 0.5
    assert abs(P_C[Topology.TRIANGULAR] - 0.3472963553338607) < 1e-15


def test_supercritical_warning():
    with pytest.warns(SupercriticalWarning):
        assert check_subcritical(Topology.SQUARE, 0.6)
    assert not check_subcritical(Topology.SQUARE, 0.5)
    with pytest.warns(SupercriticalWarning):
        estimate_event_prob(
            Topology.SQUARE, Window(UNIT, 0), 0.7, 0.5, CrossingEvent(V_UNIT), 50, 0
        )


def test_estimate_matches_exact_probability():
    poly = exact_polynomial_in_r(Topology.SQUARE, Window(UNIT, 0), 0.3, CrossingEvent(V_UNIT))
    want = float(poly(Fraction(0.55)))
    est = estimate_event_prob(
        Topology.SQUARE, Window(UNIT, 0), 0.3, 0.55, CrossingEvent(V_UNIT), 20_000, 42
    )
    assert est.n_samples == 20_000
    assert abs(est.value - want) <= 4.0 * est.stderr


def test_crossing_curve_monotone_with_dkw_band():
    rect = RectRegion(0, 8, 0, 8)
    w = Window.around(rect)
    rs = np.linspace(0.1, 0.9, 9)
    spec = CrossingSpec(rect, Direction.VERTICAL, Colour.BLACK, AdjacencyMode.ORDINARY)
    cc = crossing_curve(Topology.SQUARE, w, spec, 0.35, rs, 2000, 3)
    assert np.all(np.diff(cc.probs) >= 0)
    eps = math.sqrt(math.log(2.0 / cc.alpha) / (2.0 * cc.n_samples))
    inner = (cc.probs - eps >= 0) & (cc.probs + eps <= 1)
    assert np.allclose((cc.band_high - cc.band_low)[inner], 2 * eps)
    # a white spec rides the same machinery but decreases in r
    white = CrossingSpec(rect, Direction.HORIZONTAL, Colour.WHITE, AdjacencyMode.STAR)
    cw = crossing_curve(Topology.SQUARE, w, white, 0.35, rs, 2000, 3)
    assert np.all(np.diff(cw.probs) <= 0)


def test_crossing_curve_agrees_with_indicator_estimate():
    rect = RectRegion(0, 6, 0, 6)
    w = Window.around(rect)
    spec = CrossingSpec(rect, Direction.VERTICAL, Colour.BLACK, AdjacencyMode.ORDINARY)
    cc = crossing_curve(Topology.SQUARE, w, spec, 0.3, [0.55], 1500, 9)
    est = estimate_event_prob(Topology.SQUARE, w, 0.3, 0.55, CrossingEvent(spec), 1500, 9)
    assert cc.probs[0] == est.value


def test_estimate_rc_threshold_median():
    rc = estimate_rc(Topology.TRIANGULAR, 0.2, 12, 800, 5)
    again = estimate_rc(Topology.TRIANGULAR, 0.2, 12, 800, 5)
    assert rc == again
    assert abs(rc.r_hat - 0.5) <= 0.05
    assert 0.4 < rc.ci[0] <= rc.ci[1] < 0.6
    assert rc.method == "threshold-median"
    assert rc.censored_fraction < 0.05


def test_estimate_rc_bisection_cross_checks():
    tm = estimate_rc(Topology.TRIANGULAR, 0.2, 12, 800, 5)
    bis = estimate_rc(Topology.TRIANGULAR, 0.2, 12, 800, 5, method="bisection")
    assert abs(bis.r_hat - tm.r_hat) <= 0.05
    lo, hi = bis.ci
    assert hi - lo == 2.0**-14
    with pytest.raises(ValueError):
        estimate_rc(Topology.TRIANGULAR, 0.2, 12, 800, 5, method="golden-section")


def test_dependence_decay_fit():
    fit = fit_dependence_decay(Topology.SQUARE, 0.3, 12, 4000, 17)
    assert fit.slope < 0
    assert fit.r_squared > 0.9
    assert fit.survival[0] > fit.survival[-1]
    assert fit.extrapolate(5) == math.exp(fit.intercept + 5 * fit.slope)
    # the fitted line should track the measured points it was fitted to
    assert abs(fit.extrapolate(4) - fit.survival[3]) < 0.05


def test_survival_fit_failure_modes():
    with pytest.warns(SupercriticalWarning):
        with pytest.raises(ValueError, match="censored"):
            fit_dependence_decay(Topology.SQUARE, 1.0, 4, 100, 1)
    with pytest.raises(ValueError, match="usable"):
        fit_dependence_decay(Topology.SQUARE, 0.0, 6, 100, 1)


def test_cluster_size_decay_fit():
    fit = fit_cluster_size_decay(
        Topology.SQUARE, 0.3, 0.3, 10, 3000, 23, half_width=20, pad=8
    )
    assert fit.slope < 0
    # survival at n=1 is the probability the origin is black, which is r
    assert abs(fit.survival[0] - 0.3) < 0.03


def test_fkg_oracle_and_mc():
    rect = RectRegion(0, 2, 0, 2)
    w = Window(rect, 0)
    a = CrossingEvent(CrossingSpec(rect, Direction.VERTICAL, Colour.BLACK, AdjacencyMode.ORDINARY))
    b = CrossingEvent(CrossingSpec(rect, Direction.HORIZONTAL, Colour.BLACK, AdjacencyMode.ORDINARY))
    rep = fkg_check(Topology.SQUARE, w, Fraction(3, 10), a, b, (0.3, 0.6))
    assert rep.ok and rep.method == "oracle"
    assert all(isinstance(c, Fraction) for c in rep.covariances)
    mc = fkg_check(Topology.SQUARE, w, 0.3, a, b, (0.3, 0.6), method="mc", n_samples=8000, seed=7)
    for c_mc, err, c_ex in zip(mc.covariances, mc.stderr, rep.covariances):
        assert abs(c_mc - float(c_ex)) <= 4.0 * err


def test_fkg_rejects_mixed_monotonicity():
    rect = RectRegion(0, 2, 0, 2)
    a = CrossingEvent(CrossingSpec(rect, Direction.VERTICAL, Colour.BLACK, AdjacencyMode.ORDINARY))
    b = CrossingEvent(CrossingSpec(rect, Direction.HORIZONTAL, Colour.WHITE, AdjacencyMode.STAR))
    with pytest.raises(ValueError, match="monotonicity"):
        fkg_check(Topology.SQUARE, Window(rect, 0), 0.3, a, b, (0.5,))


def test_mixing_of_distant_events():
    core = RectRegion(0, 20, 0, 2)
    rep = mixing_check(
        Topology.SQUARE, Window.around(core), 0.3, 0.5,
        VertexBlackEvent((0, 0)), VertexBlackEvent((20, 0)), 6000, 11,
    )
    assert rep.separation == 20
    assert rep.within(4.0)
    assert abs(rep.p_a - 0.5) < 0.03  # the vertex marginal is r at any p
    assert abs(rep.p_joint - rep.p_a * rep.p_b - rep.covariance) < 1e-12


def test_finite_size_certificate_positive():
    rep = finite_size_criterion(
        Topology.SQUARE, 0.05, 0.95, 24, 0.05, 1200, 31, decay_samples=3000
    )
    assert rep.range_ok and rep.crossing_ok and rep.certified
    m = math.ceil(rep.N / 3)
    assert rep.range_term == (rep.N + 1) * (3 * rep.N + 1) * rep.decay.extrapolate(m)
    assert rep.crossing.value > 1 - rep.eps


def test_finite_size_certificate_negative():
    rep = finite_size_criterion(
        Topology.SQUARE, 0.3, 0.35, 6, 0.01, 400, 13, decay_samples=3000
    )
    assert not rep.range_ok
    assert not rep.certified

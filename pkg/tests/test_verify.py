"""Check plumbing: pass judges, order pooling, report shapes, suite
selection, and the moment trajectory."""

import numpy as np
import pytest

from freeparticle.grid import build_grid, gaussian_packet
from freeparticle.triplets import TripletClass, make_triplet
from freeparticle.verify import (
    ORDER_WINDOW,
    RESIDUAL_FLOOR,
    STENCIL_ORDER,
    SUITE_NAMES,
    TOL_EXACT,
    CheckResult,
    _convergent_check,
    _decaying_check,
    _exact_check,
    ehrenfest_evolution,
    order_estimate,
    run_suites,
)


def test_exact_check_judges_max_residual():
    ok = _exact_check("x", "claim", [(8, 1e-12), (12, 5e-11)])
    bad = _exact_check("x", "claim", [(8, 1e-12), (12, 5e-9)])
    assert ok.passed and not bad.passed
    assert ok.kind == "exact"


def test_convergent_check_window_on_wide_ladder():
    fourth = [(16, 1.0), (24, (16 / 24) ** 4), (32, (16 / 32) ** 4)]
    second = [(16, 1.0), (24, (16 / 24) ** 2), (32, (16 / 32) ** 2)]
    sixth = [(16, 1.0), (24, (16 / 24) ** 6), (32, (16 / 32) ** 6)]
    assert _convergent_check("c", "claim", fourth).passed
    assert not _convergent_check("c", "claim", second).passed
    # on a factor-2 ladder the window is two-sided
    assert not _convergent_check("c", "claim", sixth).passed


def test_convergent_check_one_sided_on_short_ladder():
    # ladders narrower than a factor 2 keep only the lower order bound,
    # since the coarse-rung transient inflates the slope
    fast = [(16, 1.0), (24, (16 / 24) ** 5)]
    assert _convergent_check("c", "claim", fast).passed
    slow = [(16, 1.0), (24, (16 / 24) ** 2)]
    assert not _convergent_check("c", "claim", slow).passed


def test_convergent_check_floor_rule():
    tiny = [(16, 1e-13), (24, 2e-13), (32, 4e-13)]
    res = _convergent_check("c", "claim", tiny)
    assert res.passed and res.order_estimate is None


def test_decaying_check_is_one_sided():
    sixth = [(16, 1.0), (24, (16 / 24) ** 6), (32, (16 / 32) ** 6)]
    assert _decaying_check("d", "claim", sixth).passed
    flat = [(16, 0.5), (24, 0.5), (32, 0.5)]
    assert not _decaying_check("d", "claim", flat).passed


def test_order_estimate_endpoints():
    ns = [16, 32]
    es = [1.0, (16 / 32) ** 4]
    assert order_estimate(ns, es) == pytest.approx(4.0, abs=1e-12)


def test_check_result_serialization():
    c = CheckResult("a:b", "claim", "exact", [(8, 1e-12)], None, True, "note")
    d = c.to_dict()
    assert d["name"] == "a:b" and d["passed"] is True
    assert d["residuals"] == [{"n": 8, "value": 1e-12}]


def test_tolerance_constants_are_coherent():
    assert RESIDUAL_FLOOR < TOL_EXACT
    assert STENCIL_ORDER == 4 and 0 < ORDER_WINDOW < 1


def test_run_suites_unknown_suite_rejected():
    with pytest.raises(ValueError):
        run_suites("massive_plus", [8, 12], 6.0, 1.0, suites=["exact", "nope"])


def test_run_suites_kg_needs_two_block_massive():
    with pytest.raises(ValueError):
        run_suites("massive_plus", [8, 12], 6.0, 1.0, suites=["kg"])


def test_run_suites_exact_report_shape():
    rep = run_suites("massive_plus", [8, 12], 6.0, 1.0, suites=["exact"])
    assert rep.checks and all(c.kind == "exact" for c in rep.checks)
    assert rep.passed
    d = rep.to_dict()
    assert set(d) >= {"triplet_class", "config", "checks", "passed"}


def test_default_suites_skip_kg_for_single_block():
    rep = run_suites("massive_plus", [8], 6.0, 1.0, suites=None)
    assert not any(c.name.startswith("kg:") for c in rep.checks)


def test_ehrenfest_trajectory_columns():
    grid = build_grid(12, 6.0, 1.0)
    t = make_triplet(TripletClass.MASSIVE_PLUS, grid)
    pkt = gaussian_packet(grid, (1.0, 0.0, 0.0), 1.2)
    times = np.linspace(0.0, 1.0, 9)
    traj = ehrenfest_evolution(t, pkt, times)
    assert traj.header == ("t", "q1", "q2", "q3", "p1", "p2", "p3",
                           "energy", "kinetic_energy", "norm")
    rows = list(traj.rows())
    assert len(rows) == 9 and len(rows[0]) == 10
    np.testing.assert_allclose(traj.norm, 1.0, atol=1e-12)
    np.testing.assert_allclose(traj.momentum[0], traj.momentum[0][0], atol=1e-12)
    # positive-energy class: energy column equals the kinetic column
    np.testing.assert_allclose(traj.energy, traj.kinetic_energy, atol=1e-12)
    # the packet drifts forward along axis 1 only
    assert traj.position[0][-1] > traj.position[0][0]
    np.testing.assert_allclose(traj.position[1], 0.0, atol=1e-10)


def test_suite_names_frozen():
    assert SUITE_NAMES == ("exact", "lie", "covariance", "inversion", "group",
                           "ehrenfest", "kg")

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crnkit import fixtures
from crnkit.dynamics import (StepSizeError, Trajectory, dopri5, generic_label, persistence_diagnostic, scan,
                             simulate)
from crnkit.netio import parse_network

LOGISTIC = parse_network("reactions:\nX -> 2 X @ r*X\n2 X -> X @ X^2\n")


def test_exponential_decay():
    tr = dopri5(lambda t, y: -y, [1.0], 1.0)
    assert abs(tr.states[-1, 0] - math.exp(-1)) < 1e-8
    assert tr.times[0] == 0 and tr.times[-1] == 1.0


def test_fixed_step_order_is_five():
    def err(h):
        return abs(dopri5(lambda t, y: -y, [1.0], 1.0, h_fixed=h).states[-1, 0] - math.exp(-1))

    ratio = err(0.1) / err(0.05)
    assert 25 < ratio < 40


def test_dense_output():
    grid = np.linspace(0, 5, 51)
    tr = dopri5(lambda t, y: np.array([y[1], -y[0]]), [0.0, 1.0], 5.0, t_eval=grid)
    np.testing.assert_array_equal(tr.times, grid)
    np.testing.assert_allclose(tr.states[:, 0], np.sin(grid), atol=1e-7)


@pytest.mark.parametrize("grid", [[0.0, 2.0], [1.0, 0.5], [-1.0, 0.5]])
def test_bad_output_grid(grid):
    with pytest.raises(ValueError):
        dopri5(lambda t, y: -y, [1.0], 1.0, t_eval=grid)


def test_blow_up_raises_step_size_error():
    with pytest.raises(StepSizeError, match="stiff"):
        dopri5(lambda t, y: y ** 2, [1.0], 2.0)


def test_sirs_mass_is_conserved():
    net, p = fixtures.load("sirs"), fixtures.params("sirs")
    tr = simulate(net, p, {"S": 0.9, "I": 0.1, "R": 0.0}, 200.0)
    np.testing.assert_allclose(tr.states.sum(axis=1), 1.0, atol=1e-8)


@given(st.lists(st.floats(0.01, 2.0), min_size=4, max_size=4))
@settings(max_examples=20, deadline=None)
def test_ex4_conservation_law(x0):
    # D + E is conserved; its certificate is (1/2, 1/2)
    net = fixtures.load("ex4")
    tr = simulate(net, fixtures.params("ex4"), x0 + [0.3], 50.0)
    d, e = net.index("D"), net.index("E")
    c = tr.states[:, d] + tr.states[:, e]
    assert np.max(np.abs(c - c[0])) <= 10 * 1e-8 * max(1.0, abs(c[0]))


@pytest.mark.parametrize("name", ["si2v", "gk", "gavish", "mayleonard"])
def test_nonnegativity(name):
    net = fixtures.load(name)
    x0 = np.full(net.n_species, 0.5)
    x0[0] = 0.0
    tr = simulate(net, fixtures.params(name), x0, 100.0)
    assert tr.states.min() >= 0.0


def test_simulate_rejects_bad_initial_state():
    net = fixtures.load("sirs")
    with pytest.raises(ValueError, match="nonnegative"):
        simulate(net, fixtures.params("sirs"), [1.0, -0.1, 0.0], 1.0)
    with pytest.raises(ValueError, match="3 values"):
        simulate(net, fixtures.params("sirs"), [1.0], 1.0)


def test_trajectory_csv():
    tr = simulate(LOGISTIC, {"r": 1.0}, [0.5], 1.0, t_eval=[0.0, 0.5, 1.0])
    rows = tr.to_csv().splitlines()
    assert rows[0] == "t,X" and len(rows) == 4
    assert rows[1] == "0.0,0.5"


def test_logistic_is_persistent_like():
    tr = simulate(LOGISTIC, {"r": 1.0}, [0.01], 200.0, t_eval=np.linspace(0, 200, 2001))
    res = persistence_diagnostic(tr)
    assert res.verdict == "persistent-like"
    assert res.final_min == pytest.approx(1.0, rel=1e-8)


def test_decay_is_nonpersistent_like():
    net = parse_network("reactions:\nX -> 0 @ X\n")
    tr = simulate(net, {}, [1.0], 16.0, t_eval=np.linspace(0, 16, 161))
    res = persistence_diagnostic(tr)
    assert res.verdict == "nonpersistent-like"
    assert res.tail_slope == pytest.approx(-1 / math.log(10), rel=1e-3)


def test_slow_transient_is_inconclusive():
    net = parse_network("reactions:\nX -> 0 @ d*X\n")
    tr = simulate(net, {"d": 0.01}, [1.0], 100.0, t_eval=np.linspace(0, 100, 101))
    assert persistence_diagnostic(tr).verdict == "inconclusive"


def test_diagnostic_needs_interior_start():
    tr = Trajectory(np.array([0.0, 1.0]), np.array([[0.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(ValueError, match="interior"):
        persistence_diagnostic(tr)
    with pytest.raises(ValueError):
        persistence_diagnostic(tr, window_fraction=0)


def test_scan_is_deterministic_and_labels_regions():
    net, p = fixtures.load("si2v"), fixtures.params("si2v")
    axis1 = ("be1", [0.5, 3.0])
    axis2 = ("be2", [0.5, 3.0])
    a = scan(net, p, axis1, axis2)
    assert a == scan(net, p, axis1, axis2)
    assert a.cells[0][0] == "DFE stable" and a.cells[1][0] == "E1 stable" and a.cells[0][1] == "E2 stable"
    csv_rows = a.to_csv().splitlines()
    assert csv_rows[0] == "be1,be2,label" and len(csv_rows) == 5
    assert set(a.to_dict()["legend"]) >= {"DFE stable", "error"}


def test_scan_single_cell_and_errors():
    net, p = fixtures.load("si2v"), fixtures.params("si2v")
    one = scan(net, p, ("be1", [2.0]), ("be2", [1.0]))
    assert len(one.cells) == 1 and len(one.cells[0]) == 1
    bad = scan(fixtures.load("gavish"), fixtures.params("gavish"), ("be1", [0.3]), ("be2", [0.25]))
    assert bad.cells == (("error",),)


def test_scan_rejects_unknown_parameter_and_classifier():
    net, p = fixtures.load("si2v"), fixtures.params("si2v")
    with pytest.raises(KeyError):
        scan(net, p, ("nope", [1.0]), ("be2", [1.0]))
    with pytest.raises(ValueError):
        scan(net, p, ("be1", [1.0]), ("be2", [1.0]), classifier="other")


def test_generic_classifier_on_gavish():
    net, p = fixtures.load("gavish"), fixtures.params("gavish")
    res = scan(net, p, ("be1", [0.05, 0.3]), ("be2", [0.05]), classifier="generic")
    assert res.cells[0][0] == "stable: DFE"
    assert res.cells[1][0] == generic_label(net, dict(p, be1=0.3, be2=0.05))
    assert res.cells[1][0].startswith("stable: {i2,i12}=0")


@pytest.mark.parametrize("a1,be,verdict", [(0.5, 0.5, "persistent-like"), (0.8, 1.3, "nonpersistent-like")])
def test_may_leonard_off_the_neutral_line(a1, be, verdict):
    net = fixtures.load("mayleonard")
    tr = simulate(net, {"a1": a1, "be": be}, [0.3, 0.2, 0.1], 2000.0, t_eval=np.linspace(0, 2000, 20001))
    assert persistence_diagnostic(tr).verdict == verdict


def test_may_leonard_neutral_case_keeps_a_first_integral():
    # with a1 + be = 2 the product x1 x2 x3 / (x1 + x2 + x3)^3 tends to a positive constant
    net = fixtures.load("mayleonard")
    tr = simulate(net, {"a1": 0.8, "be": 1.2}, [0.3, 0.2, 0.1], 2000.0, t_eval=np.linspace(0, 2000, 2001))
    q = np.prod(tr.states, axis=1) / np.sum(tr.states, axis=1) ** 3
    assert q[-1] > 1e-3 and abs(q[-1] - q[-500]) < 1e-6

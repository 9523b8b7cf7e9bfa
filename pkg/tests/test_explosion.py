import numpy as np
import pytest

from oracles import FROZEN, disk_bratu_max
from flowexplosion.explosion import (
    BLOWN_UP, CONVERGED, CSV_COLUMNS, ITERATION_LIMIT, centered_gradient, equidistribution_norm, lambda_star,
    minimal_solution, run_record, stability_eigenvalue, threshold_bounds, uniform_bound_check,
)
from flowexplosion.flows import StreamFunction, builtin_flow, flow_from_stream_function
from flowexplosion.grid import disk_grid, rectangle_grid
from flowexplosion.nonlinearity import exponential, power, uniform_bound_constant
from flowexplosion.operators import exit_time, theta

EXP = exponential()


@pytest.fixture(scope="module")
def square():
    return rectangle_grid(1.0, 1.0, 65)


@pytest.fixture(scope="module")
def sinsin_threshold(square):
    return lambda_star(square, builtin_flow("sinsin", square), 64.0, EXP)


def test_disk_bratu_oracle_is_frozen():
    assert disk_bratu_max(1.0) == pytest.approx(FROZEN["disk_bratu_lambda1_max"], abs=1e-9)


def test_lambda_zero_gives_zero(square):
    r = minimal_solution(square, None, 0.0, 0.0, EXP)
    assert r.status == CONVERGED and not r.phi.any()


def test_negative_lambda_rejected(square):
    with pytest.raises(ValueError):
        minimal_solution(square, None, 0.0, -1.0, EXP)


def test_solution_below_supersolution(square):
    flow = builtin_flow("fig2", square)
    tau = exit_time(square, flow, 100.0)
    lam = 0.9 * np.log(2) / (2 * theta(tau))
    r = minimal_solution(square, flow, 100.0, lam, EXP)
    assert r.converged
    assert np.all(r.phi <= 2 * EXP.g0 * lam * tau + 1e-12)
    assert r.monotone_violation <= 1e-12
    assert np.all(np.diff(r.sup_history) >= -1e-14)


def test_disk_bratu_maximum():
    g = disk_grid(1.0, 97)
    r = minimal_solution(g, None, 0.0, 1.0, EXP)
    assert r.sup == pytest.approx(disk_bratu_max(1.0), rel=0.05)
    assert r.residual < 1e-6


def test_flow_free_bounds(square):
    b = threshold_bounds(square, None, 0.0, EXP)
    assert b.lower == pytest.approx(np.log(2) / (2 * FROZEN["torsion_center"]), rel=2e-3)
    assert b.upper == pytest.approx(FROZEN["square_mu1"], rel=0.01)


def test_threshold_sandwiched(square, sinsin_threshold):
    t = sinsin_threshold
    assert t.bound_lower <= t.bracket[0] <= t.lambda_star <= t.bracket[1] <= t.bound_upper
    assert (t.bracket[1] - t.bracket[0]) / t.bracket[0] <= 1e-3
    assert any(p.status == CONVERGED for p in t.records)
    assert any(p.status in (BLOWN_UP, ITERATION_LIMIT) for p in t.records)


def test_power_threshold_sandwiched(square):
    t = lambda_star(square, builtin_flow("shear", square), 32.0, power(2.0))
    assert t.bound_lower <= t.lambda_star <= t.bound_upper


def test_sup_monotone_in_lambda(square, sinsin_threshold):
    flow = builtin_flow("sinsin", square)
    sups = [minimal_solution(square, flow, 64.0, f * sinsin_threshold.lambda_star, EXP).sup for f in (0.2, 0.5, 0.8, 0.95)]
    assert all(b > a for a, b in zip(sups, sups[1:]))


def test_stability_eigenvalue_positive_below_threshold(square, sinsin_threshold):
    flow = builtin_flow("sinsin", square)
    lams = [f * sinsin_threshold.lambda_star for f in (0.3, 0.6, 0.9)]
    kap = []
    for lam in lams:
        r = minimal_solution(square, flow, 64.0, lam, EXP)
        kap.append(stability_eigenvalue(square, flow, 64.0, lam, r.phi, EXP).eigenvalue)
    assert all(k > 0 for k in kap)
    assert all(b < a for a, b in zip(kap, kap[1:]))


def test_uniform_bound(square, sinsin_threshold):
    flow = builtin_flow("sinsin", square)
    rep = uniform_bound_check(square, flow, [64.0], EXP, 0.1, lambda_stars={64.0: sinsin_threshold.lambda_star})
    assert rep.ok
    assert rep.K == pytest.approx(uniform_bound_constant(EXP, 0.1))
    assert len(rep.entries) == 4


def test_equidistribution_vanishes_on_functions_of_psi():
    g = rectangle_grid(1.0, 1.0, 129)
    flow = builtin_flow("sinsin", g)
    X, Y = g.mesh()
    psi = np.sin(np.pi * X) * np.sin(np.pi * Y)
    assert equidistribution_norm(psi**2, flow) < 1e-8
    assert equidistribution_norm(X * (1 - X), flow) > 1e-2


def test_centered_gradient_fourth_order():
    errs = []
    for n in (33, 65):
        g = rectangle_grid(1.0, 1.0, n)
        X, Y = g.mesh()
        gx, gy = centered_gradient(g, np.sin(2 * X) * np.cos(Y))
        inner = (slice(2, -2), slice(2, -2))
        errs.append(np.abs(gx - 2 * np.cos(2 * X) * np.cos(Y))[inner].max())
    assert errs[0] / errs[1] > 12


def test_run_record(square, sinsin_threshold):
    flow = builtin_flow("sinsin", square)
    row = run_record("sinsin", 64.0, 65, sinsin_threshold, square, flow, EXP)
    assert tuple(row) == CSV_COLUMNS
    assert row["kappa1_0.9"] > 0
    assert row["sup_phi_0.9"] > 0
    assert row["probes"].count(":") == len(sinsin_threshold.records)


def test_threshold_grid_refinement():
    vals = []
    for n in (33, 65, 129):
        g = rectangle_grid(1.0, 1.0, n)
        vals.append(lambda_star(g, None, 0.0, EXP, rtol=1e-5).lambda_star)
    assert abs(vals[2] - vals[1]) < 0.5 * abs(vals[1] - vals[0])
    # Bratu threshold on the unit square
    assert vals[2] == pytest.approx(6.808, rel=5e-3)


def test_zero_flow_matches_no_flow(square):
    a = lambda_star(square, builtin_flow("zero", square), 500.0, EXP).lambda_star
    b = lambda_star(square, None, 0.0, EXP).lambda_star
    assert a == b


def test_random_stream_threshold_between_bounds():
    g = rectangle_grid(1.0, 1.0, 33)
    s = StreamFunction("rand", lambda x, y: np.sin(np.pi * x) * np.sin(2 * np.pi * y) + 0.3 * np.sin(3 * np.pi * x) * np.sin(np.pi * y))
    flow = flow_from_stream_function(s, g)
    t = lambda_star(g, flow, 50.0, EXP)
    assert t.bound_lower <= t.lambda_star <= t.bound_upper

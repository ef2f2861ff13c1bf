import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from essint import (
    AffinePiece,
    AffinePiecewiseSystem,
    EmptyTrajectory,
    IntegratorConfig,
    InsufficientPoints,
    ModelValidationError,
    PiecewiseAffineFlow,
    TangentialCrossing,
    affine_flow,
    exact_piecewise_trajectory,
    expm,
    fit_loglog_slope,
    impact_point,
    integrate,
    order_test_affine,
    rms_error,
)
from essint.models import ORDER_TEST_X0

from _systems import order_switch_height


def drift_1d():
    return AffinePiecewiseSystem(
        [[1.0]], [0.0], [AffinePiece([[0.0]], [1.0], (-1,)), AffinePiece([[0.0]], [2.0], (1,))]
    )


# --- matrix exponential and affine flow -----------------------------------


def test_affine_flow_examples():
    assert np.allclose(affine_flow(np.zeros((2, 2)), [1.0, 2.0], [0.0, 0.0], 0.5), [0.5, 1.0], atol=1e-15)
    rot = np.array([[0.0, 1.0], [-1.0, 0.0]])
    assert np.allclose(affine_flow(rot, [0.0, 0.0], [1.0, 0.0], math.pi / 2), [0.0, -1.0], atol=1e-12)
    assert affine_flow([[1.0]], [1.0], [0.0], 1.0)[0] == pytest.approx(math.e - 1, abs=1e-12)


def test_affine_flow_vectorized_times():
    A = np.array([[-0.3, 1.0], [-1.0, -0.1]])
    b = np.array([0.5, -0.2])
    ts = np.linspace(0, 3, 7)
    batch = affine_flow(A, b, [1.0, 2.0], ts)
    for t, row in zip(ts, batch):
        assert np.allclose(row, affine_flow(A, b, [1.0, 2.0], t), rtol=0, atol=1e-14)


def test_expm_matches_eigendecomposition():
    rng = np.random.default_rng(1)
    for _ in range(20):
        V = rng.normal(size=(4, 4))
        lam = rng.uniform(-3, 3, 4)
        M = V @ np.diag(lam) @ np.linalg.inv(V)
        ref = V @ np.diag(np.exp(lam)) @ np.linalg.inv(V)
        assert np.max(np.abs(expm(M) - ref)) <= 1e-10 * max(1.0, np.abs(ref).max())


@settings(max_examples=60, deadline=None)
@given(hnp.arrays(float, (5, 5), elements=st.floats(-20, 20)))
def test_expm_matches_scipy(M):
    ref = scipy.linalg.expm(M)
    assert np.allclose(expm(M), ref, rtol=1e-11, atol=1e-13 * max(1.0, np.abs(ref).max()))


def test_expm_batched_and_zero():
    Ms = np.stack([np.zeros((3, 3)), np.diag([1.0, 2.0, 3.0]), 50 * np.eye(3)])
    out = expm(Ms)
    assert np.allclose(out[0], np.eye(3), rtol=0, atol=1e-15)
    assert np.allclose(out[1], np.diag(np.exp([1.0, 2.0, 3.0])), rtol=1e-14)
    assert np.allclose(out[2], math.exp(50) * np.eye(3), rtol=1e-13)


@settings(max_examples=100, deadline=None)
@given(
    A=hnp.arrays(float, (3, 3), elements=st.floats(-2, 2)),
    b=hnp.arrays(float, 3, elements=st.floats(-2, 2)),
    x=hnp.arrays(float, 3, elements=st.floats(-2, 2)),
    s=st.floats(0, 1), t=st.floats(0, 1),
)
def test_flow_property(A, b, x, s, t):
    lhs = affine_flow(A, b, affine_flow(A, b, x, s), t)
    rhs = affine_flow(A, b, x, s + t)
    assert np.max(np.abs(lhs - rhs)) <= 1e-11 * max(1.0, np.abs(rhs).max())


# --- piecewise-affine systems ---------------------------------------------


def test_missing_orthant_is_rejected():
    with pytest.raises(ModelValidationError, match=r"\(1, -1\)"):
        AffinePiecewiseSystem(np.eye(2), np.zeros(2), [
            AffinePiece(np.zeros((2, 2)), [1, 1], (-1, -1)),
            AffinePiece(np.zeros((2, 2)), [1, 1], (-1, 1)),
            AffinePiece(np.zeros((2, 2)), [1, 1], (1, 1)),
        ])


@pytest.mark.parametrize("bad", [
    dict(A=[[np.nan]], b=[0.0], region=(1,)),
    dict(A=[[0.0]], b=[0.0], region=(0,)),
    dict(A=[[0.0, 1.0]], b=[0.0], region=(1,)),
])
def test_piece_validation(bad):
    with pytest.raises(ModelValidationError):
        AffinePiece(**bad)


def test_zero_event_selects_plus_piece():
    sysm = drift_1d()
    assert sysm.f(np.array([0.0]), np.array([0.0]))[0] == 2.0


def test_single_piece_matches_affine_flow():
    A = np.array([[-0.5, 2.0], [-2.0, -0.5]])
    b = np.array([0.1, 0.2])
    sysm = AffinePiecewiseSystem([[0.0, 0.0]], [-1.0], [AffinePiece(A, b, (-1,)), AffinePiece(A, b, (1,))])
    ts = np.linspace(0, 2, 9)
    got = exact_piecewise_trajectory(sysm, [1.0, 0.0], ts)
    assert np.array_equal(got, affine_flow(A, b, [1.0, 0.0], ts))


def test_drift_crossing_by_hand():
    flow = PiecewiseAffineFlow(drift_1d(), [-1.0])
    assert flow(2.0)[0] == pytest.approx(2.0, abs=1e-12)
    (t_c, guards, x_c), = flow.crossings(2.0)
    assert t_c == pytest.approx(1.0, abs=1e-13) and guards == (0,)
    assert flow(0.5)[0] == pytest.approx(-0.5, abs=1e-15)


def test_order_test_crossings():
    flow = PiecewiseAffineFlow(order_test_affine(), ORDER_TEST_X0)
    events = flow.crossings(0.5)
    assert [g for _, g, _ in events] == [(1,), (2,), (0,)]
    times = [t for t, _, _ in events]
    assert times == pytest.approx([0.2095880783, 0.2623642645, 0.3692071538], abs=1e-9)
    # z above its guard evolves as z' = -z - 1 until the crossing at ln(1.3)
    assert times[1] == pytest.approx(math.log(1.3), abs=1e-13)


def test_oracle_tolerance_refinement():
    ts = np.linspace(0, 0.5, 101)
    coarse = exact_piecewise_trajectory(order_test_affine(), ORDER_TEST_X0, ts, xtol=1e-13)
    fine = exact_piecewise_trajectory(order_test_affine(), ORDER_TEST_X0, ts, xtol=5e-14)
    assert np.max(np.abs(coarse - fine)) < 1e-11


def test_oracle_independent_of_bracket_step():
    ts = np.linspace(0, 0.5, 51)
    a = exact_piecewise_trajectory(order_test_affine(), ORDER_TEST_X0, ts, bracket_step=1e-3)
    b = exact_piecewise_trajectory(order_test_affine(), ORDER_TEST_X0, ts, bracket_step=3.7e-4)
    assert np.max(np.abs(a - b)) < 1e-11


def test_oracle_agrees_with_tight_integration():
    """A very tight ESS run converges on the oracle (explicit max_step replaces the band cap)."""
    cfg = IntegratorConfig(1e-8, 0.0, 0.5, max_step=1e-2, rtol=1e-12, atol=1e-14)
    traj = integrate(order_test_affine().as_hybrid(), ORDER_TEST_X0, cfg)
    exact = exact_piecewise_trajectory(order_test_affine(), ORDER_TEST_X0, traj.t)
    assert rms_error(traj, exact) <= 1e-6


def test_simultaneous_crossing():
    """Starting at the order-switch height the y and z guards are hit at one instant."""
    x0 = ORDER_TEST_X0.copy()
    x0[2] = order_switch_height()
    events = PiecewiseAffineFlow(order_test_affine(), x0).crossings(0.5)
    assert events[0][1] == (1, 2)


def test_tangential_crossing_detected():
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    pieces = [AffinePiece(A, [0.0, 0.0], (s,)) for s in (-1, 1)]
    sysm = AffinePiecewiseSystem([[1.0, 0.0]], [0.0], pieces)
    with pytest.raises(TangentialCrossing):
        PiecewiseAffineFlow(sysm, [-1e-15, 1e-12]).extend(0.1)


def test_impact_point():
    tau, x = impact_point(drift_1d(), np.array([-0.25]), 0)
    assert tau == pytest.approx(0.25, abs=1e-13) and x[0] == pytest.approx(0.0, abs=1e-13)
    with pytest.raises(ValueError):
        impact_point(drift_1d(), np.array([0.5]), 0, t_max=1.0)


# --- error metrics --------------------------------------------------------


def test_rms_examples():
    x = np.random.default_rng(0).normal(size=(10, 3))
    assert rms_error(x, x) == 0.0
    assert rms_error(x + 0.01, x) == pytest.approx(0.01 * math.sqrt(3), rel=1e-9)
    with pytest.raises(EmptyTrajectory):
        rms_error(np.empty((0, 3)), np.empty((0, 3)))


def test_fit_examples():
    xs = np.logspace(-3, 0, 12)
    assert fit_loglog_slope(xs, xs**2, (1e-3, 1.0)) == pytest.approx(2.0, abs=1e-12)
    assert fit_loglog_slope(xs, 3.0 * xs**2.1) == pytest.approx(2.1, abs=1e-10)
    with pytest.raises(InsufficientPoints):
        fit_loglog_slope(xs, xs, (1e-3, 2e-3))


def test_rms_ratio_between_decades():
    """Order-test RMS falls by about two decades per decade of epsilon."""
    flow = PiecewiseAffineFlow(order_test_affine(), ORDER_TEST_X0)
    sysm = order_test_affine().as_hybrid()
    rms = []
    for eps in (1e-2, 1e-3):
        traj = integrate(sysm, ORDER_TEST_X0, IntegratorConfig(eps, 0.0, 0.5))
        rms.append(rms_error(traj, flow(traj.t)))
    assert 1.5 <= math.log10(rms[0] / rms[1]) <= 3.5

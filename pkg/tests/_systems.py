"""Test systems with hand-computable answers, shared by unit and acceptance tests."""

import itertools
import math

import numpy as np

from essint import (
    HopperParams,
    HybridSystem,
    IntegratorConfig,
    PiecewiseAffineFlow,
    StepKind,
    integrate,
    order_test_affine,
)
from essint.models import ORDER_TEST_X0


def identity_events(m: int = 1):
    """System with ``h(x) = x`` and unit drift, so event values can be set directly."""
    return HybridSystem(lambda x, y: np.ones(m), lambda x: np.asarray(x, float), m, m, lambda x: np.eye(m))


def constant_fields(m: int, fields: dict):
    """``h(x) = x`` in ``R^m`` with a constant field per sign pattern."""
    def f(x, y):
        return np.asarray(fields[tuple(1 if v >= 0 else -1 for v in y)], float)
    return HybridSystem(f, lambda x: np.asarray(x, float), m, m, lambda x: np.eye(m))


def random_two_guard(rng, min_rate=0.3):
    """Planar piecewise-constant system with two transverse affine guards.

    Every one of the four constant fields increases both event functions at
    rate ``>= min_rate``, so from a start with both events negative the flow
    crosses each guard exactly once. Returns ``(system, x0, tf, exact_final)``
    where the exact endpoint is composed by hand from the crossing times.
    """
    while True:
        angles = rng.uniform(0, 2 * np.pi, 2)
        if abs(np.sin(angles[1] - angles[0])) > 0.5:
            break
    E = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    c = rng.uniform(-1, 1, 2)
    fields = {}
    for key in itertools.product((-1, 1), repeat=2):
        while True:
            F = rng.uniform(-3, 3, 2)
            if np.all(E @ F >= min_rate):
                break
        fields[key] = F

    def f(x, y):
        return fields[(1 if y[0] >= 0 else -1, 1 if y[1] >= 0 else -1)]

    def h(x):
        return E @ x + c

    system = HybridSystem(f, h, 2, 2, lambda x: E, name="two-guard")
    targets = rng.uniform(-1.5, -0.2, 2)
    x0 = np.linalg.solve(E, targets - c)
    tf = 1.5 / min_rate + 1.0

    # compose the exact piecewise-constant flow
    x, t, region = x0.copy(), 0.0, [-1, -1]
    for _ in range(2):
        F = fields[tuple(region)]
        rates = E @ F
        y = h(x)
        times = np.where(np.array(region) < 0, -y / rates, np.inf)
        k = int(np.argmin(times))
        x = x + times[k] * F
        t += times[k]
        region[k] = 1
    exact = x + (tf - t) * fields[tuple(region)]
    return system, x0, tf, exact


def epochs(traj):
    """Split projection guard indices at re-arming records."""
    out, cur = [], []
    for kind, g in zip(traj.kind, traj.guard):
        if kind == StepKind.PROJECTION:
            cur.append(int(g))
        elif kind == StepKind.REARM:
            out.append(cur)
            cur = []
    out.append(cur)
    return out


def order_switch_height():
    """Initial ``z`` at which the y- and z-guard crossings of the order test coincide."""
    flow = PiecewiseAffineFlow(order_test_affine(), ORDER_TEST_X0)
    t_y = next(t for t, guards, _ in flow.crossings(0.5) if 1 in guards)
    # z' = -z - 1 above the z-guard, so z(t) = (z0 + 1) e^{-t} - 1
    return np.exp(t_y) - 1.0


def lipschitz_ratios(distances=(1e-2, 1e-3, 1e-4), epsilon=1e-4):
    """``|Phi(a) - Phi(b)| / d`` for ICs straddling the y/z crossing-order switch.

    Returns the ratios and the crossing orders of the two integrated runs.
    """
    system = order_test_affine().as_hybrid()
    z_star = order_switch_height()
    cfg = IntegratorConfig(epsilon, 0.0, 0.5)
    ratios, orders = [], []
    for d in distances:
        a, b = ORDER_TEST_X0.copy(), ORDER_TEST_X0.copy()
        a[2], b[2] = z_star - d / 2, z_star + d / 2
        ta, tb = integrate(system, a, cfg), integrate(system, b, cfg)
        ratios.append(np.linalg.norm(ta.final_state - tb.final_state) / d)
        orders.append((ta.crossed_guards(), tb.crossed_guards()))
    return np.array(ratios), orders


def closed_form_bounce(t, p=HopperParams(), z0=2.0):
    """One drop, stance and rebound to the apex, from the ballistic and harmonic formulas."""
    g, w = p.g, math.sqrt(p.k / p.m)
    t1 = math.sqrt(2 * (z0 - p.L0) / g)
    v1 = -g * t1
    z_eq = p.L0 - g * p.m / p.k
    A, B = p.L0 - z_eq, v1 / w
    phi = math.atan2(B, A)
    t2 = t1 + (2 * math.pi + 2 * phi) / w
    if t <= t1:
        return z0 - 0.5 * g * t * t, -g * t
    if t <= t2:
        s = t - t1
        return z_eq + A * math.cos(w * s) + B * math.sin(w * s), -A * w * math.sin(w * s) + B * w * math.cos(w * s)
    s = t - t2
    return p.L0 - v1 * s - 0.5 * g * s * s, -v1 - g * s

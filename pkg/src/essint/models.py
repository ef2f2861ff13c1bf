"""Benchmark systems and the event-rescaling utility."""

from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .core import HybridSystem
from .errors import DegenerateScale
from .oracles import AffinePiece, AffinePiecewiseSystem

# ---------------------------------------------------------------------------
# 3D order-test system
# ---------------------------------------------------------------------------

# (x, y) dynamics per quadrant, keyed by (sign of x, sign of y); x >= 0 and
# y >= 0 are the closed sides.
_XY_PIECES = {
    (-1, -1): ([[0.0, -1.0], [1.0, 0.0]], [1.0, 1.0]),   # x' = -y + 1, y' = x + 1
    (1, -1): ([[0.0, -2.0], [0.5, 0.0]], [1.0, 2.0]),    # x' = -2y + 1, y' = x/2 + 2
    (-1, 1): ([[0.0, 1.0], [-1.0, 0.0]], [1.0, 1.0]),    # x' = y + 1, y' = -x + 1
    (1, 1): ([[10.0, 0.0], [0.0, 1.0]], [1.0, 1.0]),     # x' = 10x + 1, y' = y + 1
}
# z dynamics keyed by the sign of the third event value h3 = -z:
# h3 >= 0 is z <= 0 (z' = 3z - 1), h3 < 0 is z > 0 (z' = -z - 1).
_Z_PIECES = {1: (3.0, -1.0), -1: (-1.0, -1.0)}

ORDER_TEST_X0 = np.array([-0.4, -0.15, 0.3])
ORDER_TEST_TF = 0.5
# the plate events use tan(theta), so the model stops making sense past vertical
MAX_TILT = math.pi / 2


def order_test_affine() -> AffinePiecewiseSystem:
    """The 3D piecewise-affine order-test system with coordinate-plane guards.

    Events are ``h = (x, y, -z)`` so that each guard is crossed with a rising
    event value along the reference trajectory and the closed half-spaces
    ``x >= 0``, ``y >= 0``, ``z <= 0`` are the ``h >= 0`` sides.
    """
    pieces = []
    for sx, sy, sz in itertools.product((-1, 1), repeat=3):
        A = np.zeros((3, 3))
        b = np.zeros(3)
        Axy, bxy = _XY_PIECES[(sx, sy)]
        A[:2, :2] = Axy
        b[:2] = bxy
        A[2, 2], b[2] = _Z_PIECES[sz]
        pieces.append(AffinePiece(A, b, (sx, sy, sz)))
    return AffinePiecewiseSystem(np.diag([1.0, 1.0, -1.0]), np.zeros(3), pieces, name="order-test")


def order_test_system() -> HybridSystem:
    return order_test_affine().as_hybrid()


# ---------------------------------------------------------------------------
# 1D hopper
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HopperParams:
    g: float = 9.81
    k: float = 100.0
    m: float = 1.0
    L0: float = 1.0

    def __post_init__(self):
        if min(self.g, self.k, self.m, self.L0) <= 0:
            raise ValueError("hopper parameters must be positive")


def hopper_system(params: HopperParams = HopperParams()) -> HybridSystem:
    """Undamped vertical hopper on state ``(z, zdot)``.

    Events are ``h1 = z - L0`` (lift-off) and ``h2 = L0 - z`` (touchdown). The
    leg spring acts while ``h2 >= 0``.
    """
    g, k, m, L0 = params.g, params.k, params.m, params.L0
    rows = np.array([[1.0, 0.0], [-1.0, 0.0]])

    def f(x, y):
        acc = -g + k * (L0 - x[0]) / m if y[1] >= 0 else -g
        return np.array([x[1], acc])

    def h(x):
        return np.array([x[0] - L0, L0 - x[0]])

    return HybridSystem(f, h, 2, 2, lambda x: rows, name="hopper")


def hopper_affine(params: HopperParams = HopperParams()) -> AffinePiecewiseSystem:
    """The hopper written as a piecewise-affine system, for the exact oracle."""
    g, k, m, L0 = params.g, params.k, params.m, params.L0
    flight = (np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([0.0, -g]))
    stance = (np.array([[0.0, 1.0], [-k / m, 0.0]]), np.array([0.0, -g + k * L0 / m]))
    pieces = [
        AffinePiece(*(stance if s2 >= 0 else flight), (s1, s2))
        for s1, s2 in itertools.product((-1, 1), repeat=2)
    ]
    return AffinePiecewiseSystem(
        np.array([[1.0, 0.0], [-1.0, 0.0]]), np.array([-L0, L0]), pieces, name="hopper"
    )


def hopper_energy(x, params: HopperParams = HopperParams()) -> np.ndarray:
    """Total mechanical energy, conserved by the exact hopper flow."""
    x = np.atleast_2d(x)
    z, v = x[:, 0], x[:, 1]
    comp = np.maximum(0.0, params.L0 - z)
    return 0.5 * params.m * v**2 + params.m * params.g * z + 0.5 * params.k * comp**2


# ---------------------------------------------------------------------------
# SE(2) plate on a spring bed
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlateParams:
    num_springs: int = 2
    k: float = 100.0
    b: float = 1.0
    mass: float = 1.0
    width: float = 2.0
    L0: float = 1.0
    g: float = 9.81
    inertia: float | None = None  # defaults to a uniform rod of length `width`
    spring_x: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.num_springs < 2:
            raise ValueError("need at least two springs")
        if min(self.k, self.mass, self.width, self.L0, self.g) <= 0 or self.b < 0:
            raise ValueError("plate parameters must be positive")
        if self.inertia is None:
            object.__setattr__(self, "inertia", self.mass * self.width**2 / 12.0)
        half = self.width / 2
        object.__setattr__(self, "spring_x", np.linspace(-half, half, self.num_springs))


def plate_system(params: PlateParams = PlateParams()) -> HybridSystem:
    """Rigid plate ``(x, z, theta, xdot, zdot, thetadot)`` falling onto vertical springs.

    Event ``i < s`` is the touchdown function ``L0 + tan(theta)(x - x_i) - z``
    of spring ``i``; event ``s + i`` is its negative (lift-off). Spring ``i``
    pushes vertically with ``k h_i + b dh_i/dt`` while the supplied touchdown
    value is nonnegative. There is no horizontal force.
    """
    s = params.num_springs
    xs = params.spring_x
    k, c, M, I, L0, g = params.k, params.b, params.mass, params.inertia, params.L0, params.g

    def h(q):
        hi = L0 + np.tan(q[2]) * (q[0] - xs) - q[1]
        return np.concatenate((hi, -hi))

    def Dh(q):
        tan = np.tan(q[2])
        top = np.zeros((s, 6))
        top[:, 0] = tan
        top[:, 1] = -1.0
        top[:, 2] = (q[0] - xs) / np.cos(q[2]) ** 2
        return np.vstack((top, -top))

    def f(q, y):
        x, z, th, vx, vz, om = q
        contact = y[:s] >= 0
        acc_z = -g
        acc_th = 0.0
        if contact.any():
            tan = np.tan(th)
            lever = x - xs[contact]
            depth = L0 + tan * lever - z
            rate = tan * vx - vz + lever * om / np.cos(th) ** 2
            force = k * depth + c * rate
            acc_z += force.sum() / M
            acc_th = -(lever @ force) / I
        return np.array([vx, vz, om, 0.0, acc_z, acc_th])

    def upright(q):
        return abs(q[2]) < MAX_TILT

    return HybridSystem(f, h, 6, 2 * s, Dh, name=f"plate-{s}", domain=upright)


# ---------------------------------------------------------------------------
# Event rescaling
# ---------------------------------------------------------------------------


def rescale_events(system: HybridSystem, epsilon: float, sample_states) -> HybridSystem:
    """Scale each event function so that its rate peaks at ``epsilon`` on the samples.

    ``mu_k`` is the largest ``Dh_k(x) . f(x)`` over ``sample_states`` and event
    ``k`` is multiplied by ``epsilon / mu_k``. Zero sets, and hence guards and
    the signs seen by ``f``, are unchanged.
    """
    samples = [np.asarray(x, dtype=float) for x in sample_states]
    if not samples:
        raise ValueError("need at least one sample state")
    rates = np.array([system.event_rates(x) for x in samples])
    mu = rates.max(axis=0)
    if np.any(mu <= 0):
        bad = np.flatnonzero(mu <= 0).tolist()
        raise DegenerateScale(f"events {bad} never increase on the samples")
    scale = epsilon / mu
    h0, jac = system.h, system.jacobian

    def h(x):
        return scale * np.asarray(h0(x), dtype=float)

    def Dh(x):
        return scale[:, None] * jac(x)

    scaled = dataclasses.replace(system, h=h, Dh=Dh)
    object.__setattr__(scaled, "scale", scale)
    return scaled

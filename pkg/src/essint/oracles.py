"""Exact reference solutions and error metrics.

Piecewise-affine systems ``x' = A_r x + b_r`` (one piece per sign pattern
``r`` of affine event functions) have closed-form flows through the matrix
exponential. :class:`PiecewiseAffineFlow` chains those flows across guard
crossings located by bracketed root finding, which makes it the ground truth
for integration error measurements.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .core import HybridSystem, Trajectory
from .errors import (
    EmptyTrajectory,
    InsufficientPoints,
    ModelValidationError,
    RootNonConvergence,
    TangentialCrossing,
)

# Higham (2005) degree-13 Pade coefficients and the matching scaling threshold.
_PADE13 = np.array(
    [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ]
)
_THETA13 = 5.371920351148152


def _pade13(M):
    b = _PADE13
    eye = np.broadcast_to(np.eye(M.shape[-1]), M.shape)
    M2 = M @ M
    M4 = M2 @ M2
    M6 = M4 @ M2
    U = M @ (M6 @ (b[13] * M6 + b[11] * M4 + b[9] * M2) + b[7] * M6 + b[5] * M4 + b[3] * M2 + b[1] * eye)
    V = M6 @ (b[12] * M6 + b[10] * M4 + b[8] * M2) + b[6] * M6 + b[4] * M4 + b[2] * M2 + b[0] * eye
    return np.linalg.solve(V - U, V + U)


def expm(M) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a degree-13 Pade kernel.

    Accepts a single ``(n, n)`` matrix or a stack ``(..., n, n)``; every matrix
    in a stack gets its own scaling power.
    """
    M = np.asarray(M, dtype=float)
    single = M.ndim == 2
    stack = M.reshape((-1,) + M.shape[-2:])
    norms = np.abs(stack).sum(axis=-2).max(axis=-1)
    with np.errstate(divide="ignore"):
        powers = np.where(norms > _THETA13, np.ceil(np.log2(norms / _THETA13)), 0).astype(int)
    out = np.empty_like(stack)
    for s in np.unique(powers):
        sel = powers == s
        R = _pade13(stack[sel] / 2.0**s)
        for _ in range(s):
            R = R @ R
        out[sel] = R
    return out[0] if single else out.reshape(M.shape)


def affine_flow(A, b, x0, t):
    """Solution of ``x' = A x + b``, ``x(0) = x0`` at time(s) ``t``.

    Uses the exponential of the augmented matrix ``[[A, b], [0, 0]]`` so that
    singular ``A`` needs no special handling. Scalar ``t`` gives an ``(n,)``
    state, an array of times gives ``(len(t), n)``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    aug = np.zeros((n + 1, n + 1))
    aug[:n, :n] = A
    aug[:n, n] = np.asarray(b, dtype=float).reshape(n)
    z0 = np.append(np.asarray(x0, dtype=float).reshape(n), 1.0)
    ts = np.asarray(t, dtype=float)
    flows = expm(ts.reshape(-1, 1, 1) * aug)
    out = (flows @ z0)[:, :n]
    return out[0] if ts.ndim == 0 else out


@dataclass(frozen=True)
class AffinePiece:
    """Dynamics ``x' = A x + b`` on the region where ``sign(h) == region``."""

    A: np.ndarray
    b: np.ndarray
    region: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "A", np.atleast_2d(np.asarray(self.A, dtype=float)))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float).reshape(-1))
        object.__setattr__(self, "region", tuple(int(s) for s in self.region))
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b))):
            raise ModelValidationError(f"non-finite entries in piece {self.region}")
        if any(s not in (-1, 1) for s in self.region):
            raise ModelValidationError(f"region signs must be +1/-1, got {self.region}")
        if self.A.shape != (self.b.size, self.b.size):
            raise ModelValidationError(f"piece {self.region}: A is {self.A.shape}, b has {self.b.size} entries")


def sign_pattern(y) -> tuple[int, ...]:
    """Region key for event values ``y``; zero belongs to the ``+1`` side."""
    return tuple(1 if v >= 0 else -1 for v in y)


@dataclass(frozen=True)
class AffinePiecewiseSystem:
    """Piecewise-affine vector field with affine events ``h(x) = E x + c``."""

    event_rows: np.ndarray
    event_offsets: np.ndarray
    pieces: dict = field(repr=False)
    name: str = ""
    x0: np.ndarray | None = None  # optional suggested initial state

    def __post_init__(self):
        E = np.atleast_2d(np.asarray(self.event_rows, dtype=float))
        c = np.asarray(self.event_offsets, dtype=float).reshape(-1)
        object.__setattr__(self, "event_rows", E)
        object.__setattr__(self, "event_offsets", c)
        if c.size != E.shape[0]:
            raise ModelValidationError(f"{E.shape[0]} event rows but {c.size} offsets")
        pieces = self.pieces
        if not isinstance(pieces, dict):
            pieces = {p.region: p for p in pieces}
        object.__setattr__(self, "pieces", pieces)
        n, m = E.shape[1], E.shape[0]
        if self.x0 is not None:
            x0 = np.asarray(self.x0, dtype=float).reshape(-1)
            if x0.size != n:
                raise ModelValidationError(f"x0 has {x0.size} entries, expected {n}")
            object.__setattr__(self, "x0", x0)
        for region in itertools.product((-1, 1), repeat=m):
            if region not in pieces:
                raise ModelValidationError(f"no piece for sign pattern {region}")
        for region, p in pieces.items():
            if len(region) != m:
                raise ModelValidationError(f"sign pattern {region} has length {len(region)}, expected {m}")
            if p.A.shape != (n, n):
                raise ModelValidationError(f"piece {region}: A is {p.A.shape}, expected {(n, n)}")

    @property
    def dim_state(self) -> int:
        return self.event_rows.shape[1]

    @property
    def num_events(self) -> int:
        return self.event_rows.shape[0]

    def h(self, x):
        return self.event_rows @ x + self.event_offsets

    def Dh(self, x):
        return self.event_rows

    def f(self, x, y):
        p = self.pieces[sign_pattern(y)]
        return p.A @ x + p.b

    def as_hybrid(self) -> HybridSystem:
        return HybridSystem(self.f, self.h, self.dim_state, self.num_events, self.Dh, self.name)


@dataclass(frozen=True)
class Segment:
    t_start: float
    x_start: np.ndarray
    region: tuple[int, ...]
    crossed: tuple[int, ...] = ()  # guards whose crossing opened this segment


class PiecewiseAffineFlow:
    """Exact flow of an :class:`AffinePiecewiseSystem` from one initial state.

    Crossing times are bracketed by sampling the exact flow every
    ``bracket_step`` and refined with Brent's method (bisection/secant hybrid)
    to ``xtol``. The crossing schedule is extended lazily as later times are
    requested.
    """

    def __init__(self, system: AffinePiecewiseSystem, x0, t0: float = 0.0, *,
                 bracket_step: float = 1e-3, xtol: float = 1e-13, min_rate: float = 1e-9,
                 region=None):
        self.system = system
        self.bracket_step = bracket_step
        self.xtol = xtol
        self.min_rate = min_rate
        x0 = np.asarray(x0, dtype=float)
        region = sign_pattern(system.h(x0)) if region is None else tuple(region)
        self.segments = [Segment(float(t0), x0, region)]
        self._horizon = float(t0)  # no crossing in (last segment start, horizon]

    def _piece(self, seg):
        return self.system.pieces[seg.region]

    def _mismatch(self, hs, region):
        return (hs < 0) != (np.asarray(region) < 0)

    def extend(self, t_end: float):
        """Locate every crossing up to ``t_end``."""
        sysm = self.system
        E, c = sysm.event_rows, sysm.event_offsets
        chunk = 64
        while self._horizon < t_end:
            seg = self.segments[-1]
            p = self._piece(seg)
            lo = self._horizon - seg.t_start
            grid = lo + self.bracket_step * np.arange(1, chunk + 1)
            xs = affine_flow(p.A, p.b, seg.x_start, grid)
            hs = xs @ E.T + c
            bad = self._mismatch(hs, seg.region)
            hit = np.flatnonzero(bad.any(axis=1))
            if hit.size == 0:
                self._horizon = seg.t_start + grid[-1]
                continue
            i = hit[0]
            a = lo if i == 0 else grid[i - 1]
            b = grid[i]
            roots = {}
            for k in np.flatnonzero(bad[i]):
                def g(s, k=k):
                    return E[k] @ affine_flow(p.A, p.b, seg.x_start, s) + c[k]
                ga = g(a)
                if (ga < 0) == (seg.region[k] < 0) and ga != 0:
                    try:
                        roots[k] = brentq(g, a, b, xtol=self.xtol, maxiter=200)
                    except (RuntimeError, ValueError) as exc:
                        raise RootNonConvergence(f"guard {k}: {exc}") from exc
                else:
                    roots[k] = a
            tau = min(roots.values())
            if tau <= 0 and len(self.segments) > 1:
                raise TangentialCrossing(f"immediate re-crossing at t={seg.t_start:.17g}")
            flipped = sorted(k for k, r in roots.items() if r <= tau + 10 * self.xtol)
            x_c = affine_flow(p.A, p.b, seg.x_start, tau)
            rates = E @ (p.A @ x_c + p.b)
            for k in flipped:
                if abs(rates[k]) < self.min_rate:
                    raise TangentialCrossing(f"guard {k} crossed with rate {rates[k]:.3g}")
            region = list(seg.region)
            for k in flipped:
                region[k] = -region[k]
            t_c = seg.t_start + tau
            self.segments.append(Segment(t_c, x_c, tuple(region), tuple(flipped)))
            self._horizon = t_c

    def crossings(self, t_end: float) -> list[tuple[float, tuple[int, ...], np.ndarray]]:
        """``(time, guards, state)`` for every crossing before ``t_end``."""
        self.extend(t_end)
        return [(s.t_start, s.crossed, s.x_start) for s in self.segments[1:] if s.t_start <= t_end]

    def __call__(self, times) -> np.ndarray:
        ts = np.asarray(times, dtype=float)
        flat = ts.reshape(-1)
        if flat.size == 0:
            return np.empty((0, self.system.dim_state))
        self.extend(float(flat.max()))
        starts = np.array([s.t_start for s in self.segments])
        idx = np.clip(np.searchsorted(starts, flat, side="right") - 1, 0, None)
        out = np.empty((flat.size, self.system.dim_state))
        for i in np.unique(idx):
            sel = idx == i
            seg = self.segments[i]
            p = self._piece(seg)
            out[sel] = affine_flow(p.A, p.b, seg.x_start, flat[sel] - seg.t_start)
        return out[0] if ts.ndim == 0 else out.reshape(ts.shape + (-1,))


def exact_piecewise_trajectory(system: AffinePiecewiseSystem, x0, sample_times, t0: float = 0.0,
                               **kwargs) -> np.ndarray:
    """Exact states at ``sample_times`` of the flow started at ``(t0, x0)``."""
    return PiecewiseAffineFlow(system, x0, t0, **kwargs)(sample_times)


def impact_point(system: AffinePiecewiseSystem, x, guard: int, t_max: float = 10.0, **kwargs):
    """Exact arrival time and state at ``guard`` following the flow from ``x``.

    Guards crossed on the way switch the vector field as usual. Raises
    ``ValueError`` if ``guard`` is not reached within ``t_max``.
    """
    flow = PiecewiseAffineFlow(system, x, 0.0, **kwargs)
    flow.extend(t_max)
    for seg in flow.segments[1:]:
        if guard in seg.crossed:
            return seg.t_start, seg.x_start
    raise ValueError(f"guard {guard} not reached within t={t_max}")


def rms_error(traj, oracle_states) -> float:
    """Root-mean-square Euclidean state error over all records."""
    states = traj.x if isinstance(traj, Trajectory) else np.asarray(traj, dtype=float)
    ref = np.asarray(oracle_states, dtype=float)
    if states.size == 0:
        raise EmptyTrajectory("cannot compute RMS of an empty trajectory")
    if states.shape != ref.shape:
        raise ValueError(f"shape mismatch {states.shape} vs {ref.shape}")
    diff = states - ref
    return float(np.sqrt(np.mean(np.sum(diff * diff, axis=-1))))


def fit_loglog_slope(xs, ys, window=None) -> float:
    """Least-squares slope of ``log(ys)`` against ``log(xs)`` for ``xs`` in ``window``."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    keep = np.isfinite(xs) & np.isfinite(ys) & (xs > 0) & (ys > 0)
    if window is not None:
        lo, hi = window
        keep &= (xs >= lo) & (xs <= hi)
    if keep.sum() < 3:
        raise InsufficientPoints(f"need at least 3 points in window {window}, have {int(keep.sum())}")
    slope, _ = np.polyfit(np.log(xs[keep]), np.log(ys[keep]), 1)
    return float(slope)

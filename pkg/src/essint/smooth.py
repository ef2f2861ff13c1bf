"""Dormand-Prince 5(4) integration of the smooth phase, stopping on band entry."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import HybridSystem, IntegratorConfig
from .errors import Divergence, LoopBudgetExceeded, StepUnderflow

# Dormand & Prince (1980) tableau, as in Hairer, Norsett & Wanner vol. I, II.5.
C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
# difference between the 5th-order weights and the embedded 4th-order ones
E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 10.0
UNDERFLOW = 1e-14


@dataclass
class SmoothStepResult:
    times: np.ndarray
    states: np.ndarray
    terminated_early: bool
    events: np.ndarray | None = None  # h at the last knot
    rejected: int = 0


def _rms(v):
    return float(np.sqrt(np.mean(v * v)))


def _initial_step(rhs, x0, f0, order, rtol, atol):
    scale = atol + rtol * np.abs(x0)
    d0, d1 = _rms(x0 / scale), _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1, _ = rhs(x0 + h0 * f0)
    d2 = _rms((f1 - f0) / scale) / h0
    big = max(d1, d2)
    h1 = max(1e-6, h0 * 1e-3) if big <= 1e-15 else (0.01 / big) ** (1.0 / (order + 1))
    return min(100 * h0, h1)


def _band_cap(system, x, f, epsilon):
    rates = system.jacobian(x) @ f
    peak = float(np.max(np.abs(rates)))
    return np.inf if peak == 0.0 else epsilon / peak


def smooth_integrate(
    system: HybridSystem,
    x0,
    t0: float,
    tf: float,
    config: IntegratorConfig,
    mask=None,
) -> SmoothStepResult:
    """Integrate ``x' = f(x, h(x))`` from ``t0`` until ``tf`` or band entry.

    Event values are recomputed at every Runge-Kutta stage. The run stops after
    the first accepted step over which some event function rises through
    ``-epsilon``, or over which an uncrossed guard (``mask`` false) rises
    through zero. The second case only arises for guards that started inside
    the band, i.e. ones deferred as non-live. Returned knots exclude the
    starting point.
    """
    x = np.array(x0, dtype=float)
    open_ = None if mask is None else ~np.asarray(mask, dtype=bool)
    if not t0 < tf:
        return SmoothStepResult(np.empty(0), np.empty((0, x.size)), False)

    eps = config.epsilon
    ceiling = config.divergence_ceiling
    rtol, atol = config.rtol, config.atol
    fixed = config.fixed_step
    h_of, f_of = system.h, system.f

    def rhs(z):
        y = np.asarray(h_of(z), dtype=float)
        return np.asarray(f_of(z, y), dtype=float), y

    n = x.size
    K = np.empty((7, n))
    K[0], y = rhs(x)

    span = tf - t0
    min_step = UNDERFLOW * span
    if fixed is not None:
        dt = fixed
    else:
        dt = _initial_step(rhs, x, K[0], 4, rtol, atol)

    times, states = [], []
    t = t0
    rejected = 0
    terminated = False
    last_rejected = False
    while t < tf:
        if config.max_step is not None:
            cap = config.max_step
        else:
            cap = _band_cap(system, x, K[0], eps)
        step = min(fixed if fixed is not None else dt, cap)
        last = t + step >= tf - min_step
        if last:
            step = tf - t
        if step < min_step and not last:
            raise StepUnderflow(f"step {step:.3g} below {min_step:.3g}", t, x)

        for s in range(1, 7):
            xs = x + step * (A[s] @ K[:s])
            K[s], ys = rhs(xs)
        # FSAL: the last stage is the 5th-order solution itself
        x_new, y_new = xs, ys

        if fixed is None:
            err = step * (E @ K)
            scale = atol + rtol * np.maximum(np.abs(x), np.abs(x_new))
            err_norm = _rms(err / scale)
            if not np.isfinite(err_norm):
                err_norm = np.inf
            if err_norm > 1.0:
                rejected += 1
                dt = step * max(FAC_MIN, SAFETY * err_norm ** -0.2)
                last_rejected = True
                if dt < min_step:
                    raise StepUnderflow(f"step {dt:.3g} below {min_step:.3g}", t, x)
                continue
            grow = FAC_MAX if not last_rejected else 1.0
            factor = grow if err_norm == 0 else min(grow, max(FAC_MIN, SAFETY * err_norm ** -0.2))
            dt = step * factor
            last_rejected = False

        t = tf if last else t + step
        if not np.all(np.isfinite(x_new)) or np.max(np.abs(x_new)) > ceiling:
            raise Divergence("state norm exceeded the divergence ceiling", t, x_new)
        if not system.contains(x_new):
            raise Divergence("state left the model's domain", t, x_new)
        times.append(t)
        states.append(x_new)
        if len(times) > config.max_records:
            raise LoopBudgetExceeded(f"smooth segment took more than {config.max_records} steps", t, x_new)
        stop = (y < -eps) & (y_new >= -eps)
        if open_ is not None:
            stop |= open_ & (y < 0) & (y_new >= 0)
        crossed_in = bool(np.any(stop))
        x, y = x_new, y_new
        K[0] = K[6]
        if crossed_in:
            terminated = True
            break

    return SmoothStepResult(np.array(times), np.array(states).reshape(-1, n), terminated, y, rejected)

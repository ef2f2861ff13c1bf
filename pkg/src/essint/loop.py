"""The alternating integrate/project loop.

Away from every candidate guard the state is advanced by the smooth
integrator. Once some candidate's event value rises above ``-epsilon`` the
state is pushed along a straight ray of the current vector field onto the
guard that the ray reaches first, and that guard leaves the candidate pool.
When the pool is empty at the end of a smooth segment, every guard whose event
function is negative becomes a candidate again, which is what lets rhythmic
systems cross the same guard many times.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import HybridSystem, IntegratorConfig, Trajectory, TrajectoryLog, in_band
from .errors import Divergence, IntegrationError, LivenessViolation, LoopBudgetExceeded, NoCandidate
from .smooth import smooth_integrate

_MAX_NUDGES = 16  # rounding repair only


@dataclass(frozen=True)
class ProjectionOutcome:
    dt: float
    guard: int
    x_new: np.ndarray
    eG: float


def project_step(
    system: HybridSystem,
    x,
    t: float,
    mask,
    config: IntegratorConfig,
    y=None,
) -> ProjectionOutcome:
    """First-order impact map onto the uncrossed guard with the earliest estimated impact.

    With ``G = f(x, h(x))`` the impact time of guard ``k`` is estimated as
    ``-h_k(x) / (Dh_k(x) . G)`` and the state moves to ``x + dt_j G`` for the
    smallest estimate. Guards outside the band whose rate is not positive are
    never reached along ``G`` and count as infinitely far. Overshot guards
    (``h_k > 0``) give negative times and are therefore projected back first. If rounding leaves the landed state a
    hair on the uncrossed side, ``dt`` is lengthened by a few ulps so that
    ``h_j(x_new) >= 0`` and ``f`` selects the crossed piece from then on.
    """
    x = np.asarray(x, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if y is None:
        y = system.events(x)
    G = system.field(x, y)
    eG = system.jacobian(x) @ G

    eligible = ~mask & ((y > -config.epsilon) | (eG > 0))
    if config.defer_nonlive:
        eligible &= eG > config.liveness_floor
    candidates = np.flatnonzero(eligible)
    if candidates.size == 0:
        raise NoCandidate("no uncrossed guard inside the band", t, x)
    with np.errstate(divide="ignore", invalid="ignore"):
        times = -y[candidates] / eG[candidates]
    times = np.where(np.isnan(times), -np.inf, times)
    j = int(candidates[np.argmin(times)])
    rate = float(eG[j])
    if not rate > config.liveness_floor:
        raise LivenessViolation(
            f"guard {j}: Dh.f = {rate:.6g} <= liveness floor {config.liveness_floor:g}", t, x
        )

    dt = -float(y[j]) / rate
    if config.liveness_floor > 0 and -dt > config.epsilon / config.liveness_floor:
        raise LivenessViolation(
            f"guard {j}: backward projection of {-dt:.6g} exceeds epsilon / liveness floor", t, x
        )
    x_new = x + dt * G
    nudge = np.spacing(max(abs(dt), np.finfo(float).tiny))
    for _ in range(_MAX_NUDGES):
        if system.events(x_new)[j] >= 0:
            break
        dt += nudge
        nudge *= 2
        x_new = x + dt * G
    return ProjectionOutcome(dt, j, x_new, rate)


def _triggered(system, x, y, mask, config) -> bool:
    if not in_band(system, x, config.epsilon, mask, y):
        return False
    if not config.defer_nonlive:
        return True
    live = system.event_rates(x, y) > config.liveness_floor
    return bool(np.any(live & ~mask & (y > -config.epsilon)))


def integrate(system: HybridSystem, x0, config: IntegratorConfig) -> Trajectory:
    """Integrate ``system`` from ``x0`` over ``[config.t0, config.tf]``.

    Guards with ``h(x0) >= 0`` start out crossed. Re-arming stops once the
    clock reaches ``tf``; projections already pending at that point are still
    carried out, after which the loop ends.
    """
    x = np.array(x0, dtype=float)
    if x.shape != (system.dim_state,):
        raise ValueError(f"initial state has shape {x.shape}, expected ({system.dim_state},)")
    t, tf = float(config.t0), float(config.tf)
    y = system.events(x)
    mask = y >= 0
    log = TrajectoryLog(t, x)
    stats = {"projections": 0, "segments": 0, "rearms": 0, "rejected": 0, "min_eG": np.inf}

    try:
        while True:
            if log.size > config.max_records:
                raise LoopBudgetExceeded(f"more than {config.max_records} records", t, x)
            if not _triggered(system, x, y, mask, config):
                if t >= tf:
                    break
                seg = smooth_integrate(system, x, t, tf, config, mask)
                stats["segments"] += 1
                stats["rejected"] += seg.rejected
                log.extend_smooth(seg.times, seg.states)
                t, x, y = float(seg.times[-1]), seg.states[-1], seg.events
                if mask.all() and t < tf:
                    mask = y >= 0
                    log.mark_rearm()
                    stats["rearms"] += 1
            else:
                out = project_step(system, x, t, mask, config, y)
                t += out.dt
                x = out.x_new
                if not system.contains(x):
                    raise Divergence("projection left the model's domain", t, x)
                y = system.events(x)
                mask[out.guard] = True
                log.append_projection(t, x, out.guard)
                stats["projections"] += 1
                stats["min_eG"] = min(stats["min_eG"], out.eG)
    except IntegrationError as err:
        raise err.annotate(t, x)

    return log.build(**stats)

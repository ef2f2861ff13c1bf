"""Hybrid-system abstraction, integrator settings and trajectory records.

A hybrid system is the triple ``(f, h, Dh)``:

* ``f(x, y)`` is the vector field. It may depend on the event values ``y``
  only through their signs.
* ``h(x)`` returns the ``m`` event-function values; guard ``k`` is the zero
  level set of ``h[k]``.
* ``Dh(x)`` is the ``m x n`` Jacobian of ``h``. When it is omitted a central
  finite difference is used.

An optional ``domain`` predicate marks the states where the model is defined;
the integrator raises :class:`~essint.errors.Divergence` on leaving it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Iterator, NamedTuple

import numpy as np

FD_STEP = 1e-6


def numeric_jacobian(h: Callable, x: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    """Central finite-difference Jacobian of ``h`` at ``x``."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        cols.append((np.asarray(h(x + e), float) - np.asarray(h(x - e), float)) / (2 * step))
    return np.stack(cols, axis=-1)


@dataclass(frozen=True)
class HybridSystem:
    f: Callable[[np.ndarray, np.ndarray], np.ndarray]
    h: Callable[[np.ndarray], np.ndarray]
    dim_state: int
    num_events: int
    Dh: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = ""
    domain: Callable[[np.ndarray], bool] | None = None

    def __post_init__(self):
        if self.dim_state < 1 or self.num_events < 1:
            raise ValueError("dim_state and num_events must be positive")

    def contains(self, x) -> bool:
        return self.domain is None or bool(self.domain(x))

    def events(self, x) -> np.ndarray:
        return np.asarray(self.h(x), dtype=float)

    def jacobian(self, x) -> np.ndarray:
        if self.Dh is None:
            return numeric_jacobian(self.h, x)
        return np.asarray(self.Dh(x), dtype=float).reshape(self.num_events, self.dim_state)

    def field(self, x, y=None) -> np.ndarray:
        """Evaluate ``f(x, h(x))``, or ``f(x, y)`` when event values are given."""
        if y is None:
            y = self.events(x)
        return np.asarray(self.f(x, y), dtype=float)

    def event_rates(self, x, y=None) -> np.ndarray:
        """Directional derivatives ``Dh(x) . f(x, h(x))`` of every event function."""
        return self.jacobian(x) @ self.field(x, y)


@dataclass(frozen=True)
class IntegratorConfig:
    """Settings for one run of :func:`essint.integrate`.

    ``max_step=None`` selects the band-resolving default: at every accepted
    knot the step is capped at ``epsilon / ||Dh(x) f(x)||_inf``, so a single
    smooth step can move no event function by more than ``epsilon``.
    ``fixed_step`` switches the smooth phase to constant steps without error
    control; the band cap above still applies, so ``fixed_step`` acts as the
    largest step taken.

    ``defer_nonlive`` controls candidates inside the band whose rate
    ``Dh_k . f`` does not exceed ``liveness_floor``. By default selecting one
    raises :class:`~essint.errors.LivenessViolation`; when set, such guards
    neither trigger nor receive a projection and are left to the smooth
    integrator until they become live.
    """

    epsilon: float
    t0: float = 0.0
    tf: float = 1.0
    max_step: float | None = None
    rtol: float = 1e-8
    atol: float = 1e-10
    liveness_floor: float = 0.0
    fixed_step: float | None = None
    defer_nonlive: bool = False
    divergence_ceiling: float = 1e12
    max_records: int = 10**7

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.t0 < self.tf:
            raise ValueError(f"need t0 < tf, got [{self.t0}, {self.tf}]")
        if self.max_step is not None and not self.max_step > 0:
            raise ValueError("max_step must be positive")
        if self.fixed_step is not None and not self.fixed_step > 0:
            raise ValueError("fixed_step must be positive")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("rtol and atol must be positive")
        if self.liveness_floor < 0:
            raise ValueError("liveness_floor must be nonnegative")


class StepKind(enum.IntEnum):
    SMOOTH = 0
    PROJECTION = 1
    REARM = 2


class StepRecord(NamedTuple):
    t: float
    x: np.ndarray
    kind: StepKind
    guard: int | None


@dataclass
class Trajectory:
    """Columnar log of one execution; record ``i`` is ``(t[i], x[i], kind[i], guard[i])``.

    ``guard`` holds ``-1`` for records that are not projections.
    """

    t: np.ndarray
    x: np.ndarray
    kind: np.ndarray
    guard: np.ndarray
    stats: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    def __iter__(self) -> Iterator[StepRecord]:
        for i in range(len(self.t)):
            g = int(self.guard[i])
            yield StepRecord(float(self.t[i]), self.x[i], StepKind(int(self.kind[i])), None if g < 0 else g)

    @property
    def records(self) -> list[StepRecord]:
        return list(self)

    @property
    def final_state(self) -> np.ndarray:
        return self.x[-1]

    def projections(self) -> np.ndarray:
        """Indices of projection records."""
        return np.flatnonzero(self.kind == StepKind.PROJECTION)

    def crossed_guards(self) -> list[int]:
        """Guard indices in the order they were projected across."""
        return [int(g) for g in self.guard[self.projections()]]


class TrajectoryLog:
    """Append-only builder for :class:`Trajectory`."""

    def __init__(self, t0: float, x0: np.ndarray):
        self._t = [np.array([t0], float)]
        self._x = [np.array(x0, float)[None, :]]
        self._kind = [np.array([StepKind.SMOOTH], np.int8)]
        self._guard = [np.array([-1], np.int64)]
        self.size = 1

    def extend_smooth(self, times, states):
        n = len(times)
        if n == 0:
            return
        self._t.append(np.asarray(times, float))
        self._x.append(np.asarray(states, float))
        self._kind.append(np.full(n, StepKind.SMOOTH, np.int8))
        self._guard.append(np.full(n, -1, np.int64))
        self.size += n

    def append_projection(self, t, x, guard):
        self._t.append(np.array([t], float))
        self._x.append(np.array(x, float)[None, :])
        self._kind.append(np.array([StepKind.PROJECTION], np.int8))
        self._guard.append(np.array([guard], np.int64))
        self.size += 1

    def mark_rearm(self):
        """Relabel the most recent record as a re-arming point."""
        self._kind[-1] = self._kind[-1].copy()
        self._kind[-1][-1] = StepKind.REARM

    def build(self, **stats) -> Trajectory:
        return Trajectory(
            np.concatenate(self._t),
            np.concatenate(self._x),
            np.concatenate(self._kind),
            np.concatenate(self._guard),
            stats,
        )


def in_band(system: HybridSystem, x, epsilon: float, mask, y=None) -> bool:
    """True iff some guard not yet crossed has ``h_k(x) > -epsilon``."""
    if y is None:
        y = system.events(x)
    return bool(np.any((y > -epsilon) & ~np.asarray(mask, bool)))


def entered_band(system: HybridSystem, x1, x2, epsilon: float, mask=None, y1=None, y2=None) -> bool:
    """True iff any guard went from below ``-epsilon`` to at or above it.

    The mask is deliberately ignored: already-crossed guards re-entering their
    band must still stop the smooth phase, otherwise re-arming never happens.
    """
    if y1 is None:
        y1 = system.events(x1)
    if y2 is None:
        y2 = system.events(x2)
    return bool(np.any((y1 < -epsilon) & (y2 >= -epsilon)))

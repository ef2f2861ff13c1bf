"""Benchmark experiments: order test, hopper calibration run, plate contact scaling.

Each runner returns an :class:`ExperimentResult`, a flat table plus metadata
and a summary dict, which serializes to CSV or JSON.
"""

from __future__ import annotations

import datetime
import json
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import __version__
from .core import HybridSystem, IntegratorConfig, StepKind, Trajectory
from .errors import ESSError
from .loop import integrate
from .models import (
    ORDER_TEST_TF,
    ORDER_TEST_X0,
    HopperParams,
    PlateParams,
    hopper_affine,
    hopper_system,
    order_test_affine,
    plate_system,
)
from .oracles import PiecewiseAffineFlow, fit_loglog_slope, rms_error

HOPPER_X0 = np.array([2.0, 0.0])


@dataclass
class ExperimentResult:
    """One experiment's rows.

    ``rows`` holds one list per row in ``columns`` order. ``meta`` echoes the
    configuration; only its ``timestamp`` entry varies between identical runs.
    """

    experiment: str
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    def to_csv(self) -> str:
        lines = [f"# {k}: {_plain(v)}" for k, v in self.meta.items()]
        lines.append(",".join(self.columns))
        lines += [",".join(_cell(v) for v in row) for row in self.rows]
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        doc = {
            "meta": _jsonable(self.meta),
            "summary": _jsonable(self.summary),
            "rows": [_jsonable(dict(zip(self.columns, r))) for r in self.rows],
        }
        return json.dumps(doc, indent=1, allow_nan=True) + "\n"

    def write(self, path, fmt: str = "csv"):
        text = self.to_csv() if fmt == "csv" else self.to_json()
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _plain(v) -> str:
    if isinstance(v, (list, tuple, np.ndarray)):
        return " ".join(_cell(x) for x in v)
    return _cell(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


def _meta(experiment: str, **config) -> dict:
    meta = {"experiment": experiment, "version": __version__}
    meta.update(config)
    meta["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    return meta


def _config_echo(config: IntegratorConfig) -> dict:
    return {
        "t0": config.t0,
        "tf": config.tf,
        "max_step": "band" if config.max_step is None else config.max_step,
        "fixed_step": "none" if config.fixed_step is None else config.fixed_step,
        "rtol": config.rtol,
        "atol": config.atol,
    }


def _timed(system: HybridSystem, x0, config: IntegratorConfig, integrator) -> tuple[Trajectory, float]:
    start = time.perf_counter()
    traj = integrator(system, x0, config)
    return traj, time.perf_counter() - start


def default_window(eps_grid) -> tuple[float, float]:
    """The two decades centred (geometrically) on the swept range."""
    eps = np.asarray(eps_grid, dtype=float)
    centre = math.sqrt(eps.min() * eps.max())
    return centre / 10, centre * 10


def linear_r2(xs, ys) -> tuple[float, float]:
    """Least-squares slope of ``ys`` on ``xs`` and the coefficient of determination."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 2:
        return math.nan, math.nan
    slope, icpt = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + icpt)
    total = np.sum((ys - ys.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / total if total > 0 else math.nan
    return float(slope), float(r2)


# ---------------------------------------------------------------------------
# order test
# ---------------------------------------------------------------------------


def run_order_test(
    eps_grid=None,
    window=None,
    *,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    max_step: float | None = None,
    fixed_step: float | None = None,
    integrator: Callable = integrate,
) -> ExperimentResult:
    """RMS error of the order-test run against the exact flow, for each epsilon.

    ``integrator`` defaults to :func:`essint.integrate`; any callable with the
    same signature can be swapped in (the harness self-test does this).
    Failures are kept as rows with ``status`` set to the exception name.
    """
    if eps_grid is None:
        eps_grid = np.logspace(-5, -1, 40)
    eps_grid = [float(e) for e in eps_grid]
    if window is None:
        window = default_window(eps_grid)
    affine = order_test_affine()
    system = affine.as_hybrid()
    oracle = PiecewiseAffineFlow(affine, ORDER_TEST_X0)

    result = ExperimentResult("order-test", ["epsilon", "rms", "seconds", "projections", "status"])
    for eps in eps_grid:
        config = IntegratorConfig(eps, 0.0, ORDER_TEST_TF, max_step=max_step, rtol=rtol, atol=atol,
                                  fixed_step=fixed_step)
        try:
            traj, secs = _timed(system, ORDER_TEST_X0, config, integrator)
            rms = rms_error(traj, oracle(traj.t))
            result.rows.append([eps, rms, secs, len(traj.projections()), "ok"])
        except ESSError as exc:
            result.rows.append([eps, math.nan, math.nan, 0, type(exc).__name__])

    eps = result.column("epsilon").astype(float)
    rms = result.column("rms").astype(float)
    try:
        slope = fit_loglog_slope(eps, rms, window)
    except ESSError:
        slope = math.nan
    result.summary = {"slope": slope, "window": list(window),
                      "failures": int(np.sum(result.column("status") != "ok"))}
    result.meta = _meta("order-test", x0=ORDER_TEST_X0, window=list(window),
                        **_config_echo(IntegratorConfig(1.0, 0.0, ORDER_TEST_TF, max_step=max_step,
                                                        rtol=rtol, atol=atol, fixed_step=fixed_step)))
    return result


# ---------------------------------------------------------------------------
# hopper
# ---------------------------------------------------------------------------


def _hopper_config(epsilon, dt_fixed, tf, **kw) -> IntegratorConfig:
    return IntegratorConfig(epsilon, 0.0, tf, fixed_step=dt_fixed, **kw)


def _alternates(guards) -> bool:
    return all(a != b for a, b in zip(guards, guards[1:]))


def run_hopper(
    epsilon: float = 0.13,
    dt_fixed: float | None = 0.002,
    tf: float = 2.0,
    params: HopperParams = HopperParams(),
    **config_kw,
) -> ExperimentResult:
    """Hopper dropped from rest at ``z = 2 L0``, with residuals against the exact flow.

    Rows are the trajectory records; the summary carries the RMS error, the
    guard crossing sequence and the RMS at ``epsilon / 10`` for comparison.
    """
    system = hopper_system(params)
    x0 = HOPPER_X0 * [params.L0, 1.0]
    oracle = PiecewiseAffineFlow(hopper_affine(params), x0)
    config = _hopper_config(epsilon, dt_fixed, tf, **config_kw)
    traj, secs = _timed(system, x0, config, integrate)
    exact = oracle(traj.t)
    resid = traj.x - exact

    cols = ["t", "z", "zdot", "z_exact", "zdot_exact", "z_residual", "zdot_residual", "kind", "guard"]
    result = ExperimentResult("hopper", cols)
    for i in range(len(traj)):
        result.rows.append([
            traj.t[i], traj.x[i, 0], traj.x[i, 1], exact[i, 0], exact[i, 1],
            resid[i, 0], resid[i, 1], StepKind(int(traj.kind[i])).name.lower(), int(traj.guard[i]),
        ])

    finer = _hopper_config(epsilon / 10, dt_fixed, tf, **config_kw)
    traj_fine = integrate(system, x0, finer)
    guards = traj.crossed_guards()
    result.summary = {
        "rms": rms_error(traj, exact),
        "rms_eps_div_10": rms_error(traj_fine, oracle(traj_fine.t)),
        "seconds": secs,
        "crossings": guards,
        "alternating": _alternates(guards),
        "rearms": traj.stats["rearms"],
        "exact_crossing_times": [c[0] for c in oracle.crossings(tf)],
    }
    result.meta = _meta("hopper", epsilon=epsilon, x0=x0, g=params.g, k=params.k, m=params.m,
                        L0=params.L0, **_config_echo(config))
    return result


def run_hopper_sweep(
    eps_values=(0.13, 0.013, 0.0013),
    dt_fixed: float | None = 0.002,
    tf: float = 2.0,
    params: HopperParams = HopperParams(),
    **config_kw,
) -> ExperimentResult:
    """RMS error of the hopper run for each epsilon."""
    system = hopper_system(params)
    x0 = HOPPER_X0 * [params.L0, 1.0]
    oracle = PiecewiseAffineFlow(hopper_affine(params), x0)
    result = ExperimentResult("hopper-sweep", ["epsilon", "rms", "seconds", "crossings", "alternating"])
    for eps in eps_values:
        traj, secs = _timed(system, x0, _hopper_config(eps, dt_fixed, tf, **config_kw), integrate)
        guards = traj.crossed_guards()
        result.rows.append([float(eps), rms_error(traj, oracle(traj.t)), secs, len(guards),
                            _alternates(guards)])
    rms = result.column("rms").astype(float)
    result.summary = {"strictly_decreasing": bool(np.all(np.diff(rms) < 0)),
                      "ratio_last_first": float(rms[-1] / rms[0])}
    result.meta = _meta("hopper-sweep", x0=x0, tf=tf,
                        fixed_step="none" if dt_fixed is None else dt_fixed)
    return result


# ---------------------------------------------------------------------------
# plate contact scaling
# ---------------------------------------------------------------------------


def plate_initial_conditions(num_seeds: int, rng_seed: int = 0) -> np.ndarray:
    """Resting plates centred over the bed, ``z0`` in (2, 3), ``theta0`` in (-0.1, 0.1)."""
    rng = np.random.default_rng(rng_seed)
    z0 = rng.uniform(2.0, 3.0, num_seeds)
    th0 = rng.uniform(-0.1, 0.1, num_seeds)
    x0 = np.zeros((num_seeds, 6))
    x0[:, 1] = z0
    x0[:, 2] = th0
    return x0


@dataclass
class ScalingResult:
    """Raw per-run rows plus the per-count median and marginal-cost series."""

    runs: ExperimentResult
    medians: ExperimentResult
    marginal: ExperimentResult

    @property
    def summary(self) -> dict:
        return self.runs.summary


def mean_marginal(marginal: ExperimentResult, lo: float, hi: float) -> float:
    """Average marginal cost over count intervals lying inside ``[lo, hi]``."""
    a = marginal.column("count_lo").astype(float)
    b = marginal.column("count_hi").astype(float)
    v = marginal.column("marginal_seconds").astype(float)
    sel = (a >= lo) & (b <= hi) & np.isfinite(v)
    return float(v[sel].mean()) if sel.any() else math.nan


def run_plate_scaling(
    contact_counts=None,
    num_seeds: int = 120,
    epsilon: float = 0.13,
    rng_seed: int = 0,
    *,
    tf: float = 2.0,
    fixed_step: float | None = 0.002,
    max_step: float | None = None,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    params: dict | None = None,
    max_records: int = 20_000,
    liveness_floor: float | None = None,
) -> ScalingResult:
    """Time plate drops onto spring beds of increasing size.

    Every count sees the same initial conditions. Guards that sit inside the
    band without being live are deferred rather than treated as errors: right
    after touchdown the lift-off events start inside the band while the
    springs are still compressing. Only the :func:`integrate` call is timed.

    ``liveness_floor`` defaults to ``epsilon / tf``: a guard approaching so
    slowly that it would need longer than the horizon to cross the band is
    deferred instead of projected.

    A typical run logs about a thousand records. ``max_records`` stops runs
    whose steps collapse, e.g. when the plate tips towards vertical, and they
    are kept as failed rows like any other integration error.
    """
    if contact_counts is None:
        contact_counts = range(2, 101, 2)
    counts = [int(c) for c in contact_counts]
    ics = plate_initial_conditions(num_seeds, rng_seed)
    config = IntegratorConfig(epsilon, 0.0, tf, max_step=max_step, rtol=rtol, atol=atol,
                              fixed_step=fixed_step, defer_nonlive=True, max_records=max_records,
                              liveness_floor=epsilon / tf if liveness_floor is None else liveness_floor)
    params = dict(params or {})

    runs = ExperimentResult("plate", ["contacts", "seed", "z0", "theta0", "seconds", "projections",
                                      "records", "status"])
    for count in counts:
        system = plate_system(PlateParams(num_springs=count, **params))
        for seed, x0 in enumerate(ics):
            try:
                traj, secs = _timed(system, x0, config, integrate)
                runs.rows.append([count, seed, x0[1], x0[2], secs, len(traj.projections()), len(traj), "ok"])
            except ESSError as exc:
                runs.rows.append([count, seed, x0[1], x0[2], math.nan, 0, 0, type(exc).__name__])

    medians = ExperimentResult("plate-medians", ["contacts", "median_seconds", "success_rate"])
    col_c = runs.column("contacts").astype(int)
    col_s = runs.column("seconds").astype(float)
    for count in counts:
        secs = col_s[col_c == count]
        ok = secs[np.isfinite(secs)]
        medians.rows.append([count, float(np.median(ok)) if ok.size else math.nan, ok.size / secs.size])

    marginal = ExperimentResult("plate-marginal", ["count_lo", "count_hi", "marginal_seconds"])
    med = medians.column("median_seconds").astype(float)
    for i in range(len(counts) - 1):
        marginal.rows.append([counts[i], counts[i + 1], (med[i + 1] - med[i]) / (counts[i + 1] - counts[i])])

    finite = np.isfinite(med)
    slope, r2 = linear_r2(np.array(counts)[finite], med[finite])
    high, low = mean_marginal(marginal, 80, 100), mean_marginal(marginal, 10, 30)
    runs.summary = {
        "ls_slope": slope,
        "r2": r2,
        "marginal_10_30": low,
        "marginal_80_100": high,
        "marginal_ratio": high / low if low else math.nan,
        "success_rate": float(np.mean(np.isfinite(col_s))) if col_s.size else math.nan,
    }
    meta = _meta("plate", epsilon=epsilon, rng_seed=rng_seed, num_seeds=num_seeds,
                 counts=counts, max_records=max_records, liveness_floor=config.liveness_floor,
                 **_config_echo(config))
    for table in (runs, medians, marginal):
        table.meta = dict(meta, table=table.experiment)
        table.summary = runs.summary
    return ScalingResult(runs, medians, marginal)

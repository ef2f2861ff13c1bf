"""Vertical hopper: flight and stance alternate, guards re-arm between bounces.

Run with ``python demos/hopper.py``.
"""

import numpy as np

from essint import IntegratorConfig, hopper_system, integrate
from essint.harness import run_hopper, run_hopper_sweep
from essint.models import hopper_energy

# dropped from twice the leg length, at the calibrated precision and step
traj = integrate(hopper_system(), np.array([2.0, 0.0]), IntegratorConfig(0.13, tf=2.0, fixed_step=0.002))
names = {0: "lift-off", 1: "touchdown"}
for i in traj.projections():
    print(f"t = {traj.t[i]:.4f}  {names[int(traj.guard[i])]:9s}  z = {traj.x[i, 0]:.4f}  zdot = {traj.x[i, 1]:+.4f}")
print(f"re-armed {traj.stats['rearms']} times")

E = hopper_energy(traj.x)
print(f"energy drift over the run: {np.max(np.abs(E - E[0])):.4f} (exact flow conserves it)")

res = run_hopper()
print(f"RMS vs exact flow: {res.summary['rms']:.4f}, at eps/10: {res.summary['rms_eps_div_10']:.2e}")

sweep = run_hopper_sweep()
for eps, rms in zip(sweep.column("epsilon"), sweep.column("rms")):
    print(f"eps {eps:<7g} rms {rms:.3e}")

"""Rigid plate dropped onto a bed of springs; runtime against number of contacts.

Run with ``python demos/plate.py``. A reduced sweep keeps it under a minute.
"""

import numpy as np

from essint import IntegratorConfig, PlateParams, integrate, plate_system
from essint.harness import run_plate_scaling

system = plate_system(PlateParams(num_springs=20))
x0 = np.array([0.0, 2.5, 0.05, 0, 0, 0])

# the calibrated eps is coarse for a stiff bed: long first-order rays can add energy
for eps in (0.13, 0.0013):
    traj = integrate(system, x0, IntegratorConfig(eps, tf=2.0, fixed_step=0.002, defer_nonlive=True))
    print(f"eps {eps:<7g} {traj.stats['projections']:4d} projections, final height {traj.final_state[1]:.4f}, "
          f"tilt {traj.final_state[2]:+.4f}")

res = run_plate_scaling(range(10, 101, 10), num_seeds=5)
for count, median, ok in res.medians.rows:
    print(f"{count:4d} contacts  median {median * 1e3:7.1f} ms  success {ok:.0%}")
s = res.summary
print(f"least-squares slope {s['ls_slope'] * 1e3:.3f} ms per contact, R^2 {s['r2']:.3f}")

"""Piecewise-affine systems round-trip through model files and feed the exact oracle.

Run with ``python demos/model_file.py``.
"""

from pathlib import Path

import numpy as np

from essint import IntegratorConfig, PiecewiseAffineFlow, integrate, load_model, rms_error

path = Path(__file__).resolve().parent.parent / "models" / "hopper.model"
model = load_model(path)
print(f"{path.name}: {model.dim_state} states, {model.num_events} events, {len(model.pieces)} pieces")

# the same file drives the integrator and the oracle
traj = integrate(model.as_hybrid(), model.x0, IntegratorConfig(0.01, tf=1.5))
exact = PiecewiseAffineFlow(model, model.x0)(traj.t)
print(f"crossed guards {traj.crossed_guards()}, RMS vs exact {rms_error(traj, exact):.3e}")
print(f"final state {np.array2string(traj.final_state, precision=6)}")

"""Order test: three coordinate-plane guards, RMS error against the exact flow.

Run with ``python demos/order_test.py``.
"""

import numpy as np

from essint import IntegratorConfig, PiecewiseAffineFlow, integrate, order_test_affine, rms_error
from essint.harness import run_order_test
from essint.models import ORDER_TEST_TF, ORDER_TEST_X0

affine = order_test_affine()
system = affine.as_hybrid()
oracle = PiecewiseAffineFlow(affine, ORDER_TEST_X0)

# exact crossing times, from matrix exponentials and bracketed roots
for t, guards, x in oracle.crossings(ORDER_TEST_TF):
    print(f"guard {guards} crossed at t = {t:.10f}, x = {np.array2string(x, precision=6)}")

# one integration, with the projections it made
traj = integrate(system, ORDER_TEST_X0, IntegratorConfig(1e-3, 0.0, ORDER_TEST_TF))
for i in traj.projections():
    print(f"projection onto guard {traj.guard[i]} at t = {traj.t[i]:.6f}")
print(f"{len(traj)} records, RMS error {rms_error(traj, oracle(traj.t)):.3e}")

# a short sweep; the fitted slope is the order in epsilon
res = run_order_test(np.logspace(-4, -1, 13))
for eps, rms in zip(res.column("epsilon"), res.column("rms")):
    print(f"eps {eps:9.2e}   rms {rms:9.3e}")
print(f"log-log slope over {res.summary['window']}: {res.summary['slope']:.3f}")

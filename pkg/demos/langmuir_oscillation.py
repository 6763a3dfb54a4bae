"""Cold Langmuir oscillation: the simplest physics check of the solver.

A small density perturbation on a cold electron fluid oscillates at the
plasma frequency omega_p = sqrt(n0) = 1 in normalized units. The run
also demonstrates the conservation diagnostics.
"""

import math

import numpy as np

from hydroclosures import ColdClosure, Grid, run_fluid, single_mode_state

grid = Grid(L=2.0 * math.pi, nx=64)
closure = ColdClosure()
state = single_mode_state(grid, closure, n0=1.0, eps=1e-3)

probe = []
result = run_fluid(state, closure, grid, dt=0.01, t_end=20.0, stride=1,
                   on_record=lambda s, rec: probe.append((s.t, s.rho[0] - 1.0)))

t = np.array([p[0] for p in probe])
y = np.array([p[1] for p in probe])
idx = np.nonzero(np.sign(y[:-1]) != np.sign(y[1:]))[0]
zc = t[idx] - y[idx] * (t[idx + 1] - t[idx]) / (y[idx + 1] - y[idx])
omega = math.pi / float(np.mean(np.diff(zc)))

r0, recs = result.records[0], result.records
print(f"measured frequency : {omega:.6f}  (theory: 1.0)")
print(f"H drift            : {max(abs(r.H - r0.H) for r in recs) / abs(r0.H):.2e}")
print(f"mass drift         : {max(abs(r.C_mass - r0.C_mass) for r in recs):.2e}")
print(f"momentum drift     : {max(abs(r.momentum - r0.momentum) for r in recs):.2e}")

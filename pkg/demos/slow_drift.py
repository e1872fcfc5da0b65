"""Layer formation followed by exponentially slow drift, for eps = 0.07.

The full system forms a layer near the root of the initial datum within a
few time units.  From t = 10 on, the reduced equation d xi/dt = theta(xi)
is started from the PDE value and the two traces are compared.  Takes
about ten seconds.
"""

import numpy as np

from metashock import Grid1D, Params
from metashock.dynamics import (
    ThetaModel,
    evolve,
    reduced_ode_solve,
    reference_initial_datum,
    theta_eval,
)
from metashock.model import BURGERS

eps = 0.07
p = Params(eps=eps)
times = [0.2, 1.0, 10.0, 100.0, 300.0, 1000.0, 3000.0]
run = evolve(p, BURGERS, reference_initial_datum, times[-1], Grid1D(1.0, 800), times,
             keep_states=False)

reduced = reduced_ode_solve(run.trace.at(10.0), times[-1], ThetaModel("projection"), p, BURGERS,
                            t0=10.0, sample_times=times[2:])
ode = dict(zip(reduced.times, reduced.xi))

print(f"initial root of u0: {1 - np.sqrt(2):.5f}")
print(f"{'t':>7} {'xi (PDE)':>10} {'xi (reduced)':>13}")
for t, x in zip(run.trace.times, run.trace.xi):
    r = f"{ode[t]:13.5f}" if t in ode else " " * 13
    print(f"{t:7g} {x:10.5f} {r}")

speed = abs(theta_eval(ThetaModel("projection"), -0.3, p, BURGERS))
print(f"\ndrift speed at xi = -0.3: {speed:.2e} per unit time")

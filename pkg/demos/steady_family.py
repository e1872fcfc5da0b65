"""Approximate steady states for Burgers' flux.

Each family member glues two exact steady solutions at a chosen point xi,
where U vanishes.  The only defect is a kink at xi, and the size of that
kink is exponentially small in 1/eps, which is what makes the layer slow.
"""

import numpy as np

from metashock import Grid1D, Params
from metashock.steady import burgers_family, omega1_asymptotic, residuals, solve_h

print("kink at xi for xi = -0.4, as eps shrinks")
print(f"{'eps':>6} {'k_minus - 1':>12} {'k_plus - 1':>12} {'jump':>12} {'2*Omega1':>12}")
for eps in (0.1, 0.07, 0.05, 0.03):
    p = Params(eps=eps)
    fam = burgers_family(-0.4, p)
    # k - 1 is kept separately since it falls below double precision spacing near 1
    print(f"{eps:6.2f} {solve_h(-0.4, 'left', p):12.3e} {solve_h(-0.4, 'right', p):12.3e} "
          f"{fam.jump:12.3e} {2 * omega1_asymptotic(-0.4, p):12.3e}")

# Away from xi the family solves the second equation exactly.
fam = burgers_family(-0.4, Params(eps=0.05))
fields = residuals(fam, Grid1D(1.0, 1600))
print(f"\nmax |P2| on a 1600-point grid: {np.max(np.abs(fields.P2)):.1e}")

x = np.linspace(-1, 1, 9)
print("\nU(x; -0.4) at eps = 0.05")
for xv, uv in zip(x, fam.U(x)):
    print(f"  x = {xv:5.2f}   U = {uv: .6f}")

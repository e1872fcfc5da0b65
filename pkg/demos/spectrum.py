"""One eigenvalue of the linearised operator is tiny; the rest sit far to the left.

The principal eigenvalue sets the drift time scale.  Here it is computed
with a dense eigensolve and set against the closed formula and the
tail-constant formula.  The dense values agree with the tail formula; the
closed formula is about half the size.
"""

from metashock import Grid1D, Params
from metashock.model import BURGERS
from metashock.numerics import eig_general
from metashock.spectral import (
    assemble,
    classify,
    lambda1_asymptotic_burgers,
    lambda1_asymptotic_general,
)
from metashock.steady import burgers_family

print(f"{'eps':>5} {'lambda1 (dense)':>16} {'closed':>12} {'tail':>12} {'complex Re':>11}")
for eps in (0.1, 0.08, 0.06, 0.05):
    p = Params(eps=eps)
    asm = assemble(burgers_family(0.0, p), Grid1D(1.0, 400))
    s = classify(eig_general(asm.L_jx), eps)
    print(f"{eps:5.2f} {s.lambda1:16.4e} {lambda1_asymptotic_burgers(0.0, p):12.4e} "
          f"{lambda1_asymptotic_general(0.0, p, BURGERS):12.4e} {s.complex_band.real.mean():11.3f}")

print("\nThe complex eigenvalues all have real part -1/(2 eps); the next real one is at most -1/(4 eps).")

"""Metastable shock layers of the Jin-Xin relaxation system on a bounded interval.

Modules
-------
model      flux functions, parameters, piecewise-constant steady states
steady     approximate steady family U(x; xi), V(x; xi) and its residuals
numerics   grids, staggered difference operators, eigenvalues, roots, ODEs
spectral   linearised operators, spectral structure, asymptotic eigenvalues
dynamics   full time integration, shock tracking, reduced position equation
harness    JSON configuration, experiment runner, CSV/JSON output
"""

from .model import BURGERS, QUARTIC, FluxSpec, Params, get_flux, validate_flux
from .numerics import Grid1D
from .steady import matched_family

__all__ = ["BURGERS", "QUARTIC", "FluxSpec", "Params", "Grid1D", "get_flux",
           "matched_family", "validate_flux"]

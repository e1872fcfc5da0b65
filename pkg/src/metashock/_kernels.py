"""Compiled time-stepping loop for the builtin fluxes.

One step is Strang splitting: half a step of exact relaxation
v <- f(u) + (v - f(u)) exp(-dt / (2 eps)), a full SSP-RK3 transport step,
and another relaxation half step.  The transport uses centred differences
in the interior; at the walls u is pinned and v follows its own equation
with a one-sided second-order derivative of u.
"""

import numba
import numpy as np

FLUX_CODES = {"burgers": 0, "quartic": 1}


@numba.njit(cache=True, nogil=True)
def _flux(u, code):
    if code == 0:
        return 0.5 * u * u
    return 0.25 * u * u * u * u


@numba.njit(cache=True, nogil=True)
def _relax(u, v, decay, code):
    for j in range(u.size):
        fu = _flux(u[j], code)
        v[j] = fu + (v[j] - fu) * decay


@numba.njit(cache=True, nogil=True)
def _transport(u, v, du, dv, a2, inv2h):
    m = u.size
    du[0] = 0.0
    du[m - 1] = 0.0
    for j in range(1, m - 1):
        du[j] = -(v[j + 1] - v[j - 1]) * inv2h
        dv[j] = -a2 * (u[j + 1] - u[j - 1]) * inv2h
    dv[0] = -a2 * (-3.0 * u[0] + 4.0 * u[1] - u[2]) * inv2h
    dv[m - 1] = -a2 * (3.0 * u[m - 1] - 4.0 * u[m - 2] + u[m - 3]) * inv2h


@numba.njit(cache=True, nogil=True)
def advance(u, v, nsteps, dt, eps, a2, h, code):
    """Take ``nsteps`` steps in place; return the first step with non-finite data or -1."""
    m = u.size
    inv2h = 0.5 / h
    du = np.zeros(m)
    dv = np.zeros(m)
    u1 = np.empty(m)
    v1 = np.empty(m)
    half = np.exp(-0.5 * dt / eps)
    for s in range(nsteps):
        _relax(u, v, half, code)
        _transport(u, v, du, dv, a2, inv2h)
        for j in range(m):
            u1[j] = u[j] + dt * du[j]
            v1[j] = v[j] + dt * dv[j]
        _transport(u1, v1, du, dv, a2, inv2h)
        for j in range(m):
            u1[j] = 0.75 * u[j] + 0.25 * (u1[j] + dt * du[j])
            v1[j] = 0.75 * v[j] + 0.25 * (v1[j] + dt * dv[j])
        _transport(u1, v1, du, dv, a2, inv2h)
        for j in range(m):
            u[j] = u[j] / 3.0 + 2.0 / 3.0 * (u1[j] + dt * du[j])
            v[j] = v[j] / 3.0 + 2.0 / 3.0 * (v1[j] + dt * dv[j])
        _relax(u, v, half, code)
        if s % 256 == 255 or s == nsteps - 1:
            for j in range(m):
                if not (np.isfinite(u[j]) and np.isfinite(v[j])):
                    return s
    return -1

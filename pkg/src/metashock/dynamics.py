"""Time evolution, shock tracking and the reduced equation for the layer position.

The full system is advanced on the collocated grid x_0 = -ell, ..., x_{n+1} = ell
(see ``_kernels`` for the scheme).  The layer position is read off either as
the zero of u (linear interpolation) or as the minimum of v (parabolic fit).

The reduced model replaces the PDE by the scalar equation d eta / dt = theta(eta).
In projection mode theta is the ratio <psi, F[W]> / <psi, d_xi W> of the
residual and the family tangent tested against the adjoint eigenfunction.
The residual F[W] consists of the point mass of -dV/dx at xi (its weight is
V(xi-) - V(xi+) = eps a^2 [dU/dx]) plus the pointwise remainders.  In
asymptotic mode theta is the closed two-exponential expression for Burgers'
flux.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from . import _kernels
from .errors import (
    BlowUpError,
    CFLViolationError,
    FitError,
    LongHorizonError,
    ParameterError,
    TrackingError,
    TransversalityError,
    UnsupportedParameterError,
)
from .numerics import Grid1D, integrate_ode
from .spectral import adjoint_first_eigenfunction
from .steady import matched_family

CFL = 0.45
LINEAR_DRIFT_BELOW = 1e-8
LONG_HORIZON = 1.0e4


@dataclass(frozen=True)
class GridState:
    """(u, v) on all n + 2 nodes of ``x`` at one instant."""

    time: float
    x: np.ndarray
    u: np.ndarray
    v: np.ndarray

    @property
    def h(self):
        return float(self.x[1] - self.x[0])


def _profile_values(u0, x):
    if callable(u0):
        return np.asarray(u0(x), dtype=float)
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != x.shape:
        raise ParameterError("initial samples must cover every node including the walls")
    return u0.copy()


def initial_state(u0, grid, params, flux):
    """State with u = u0 on ``grid.full_nodes`` and v = f(u0)."""
    x = grid.full_nodes
    u = _profile_values(u0, x)
    if abs(u[0] - params.u_minus) > 1e-8 or abs(u[-1] - params.u_plus) > 1e-8:
        raise ParameterError("initial datum must match the boundary states within 1e-8")
    u[0], u[-1] = params.u_minus, params.u_plus
    return GridState(time=0.0, x=x, u=u, v=np.asarray(flux.f(u), dtype=float))


def max_stable_dt(h, params, cfl=CFL):
    return cfl * h / params.a


def _relax(u, v, tau, eps, flux):
    fu = flux.f(u)
    return fu + (v - fu) * math.exp(-tau / eps)


def relax_source(u, v, tau, eps, flux):
    """Exact solution of v' = (f(u) - v) / eps after time ``tau`` with u frozen."""
    return _relax(np.asarray(u, float), np.asarray(v, float), tau, eps, flux)


def _transport(u, v, a2, h):
    du = np.zeros_like(u)
    dv = np.empty_like(v)
    du[1:-1] = -(v[2:] - v[:-2]) / (2 * h)
    dv[1:-1] = -a2 * (u[2:] - u[:-2]) / (2 * h)
    dv[0] = -a2 * (-3 * u[0] + 4 * u[1] - u[2]) / (2 * h)
    dv[-1] = -a2 * (3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * h)
    return du, dv


def transport_rhs(state, params):
    """Right-hand side of the transport part, u_t = -v_x and v_t = -a^2 u_x."""
    return _transport(state.u, state.v, params.a ** 2, state.h)


def imex_advance(state, dt, params, flux, cfl=CFL):
    """One split step: relaxation half step, SSP-RK3 transport, relaxation half step."""
    h = state.h
    if dt > max_stable_dt(h, params, cfl) * (1 + 1e-12):
        raise CFLViolationError(f"dt = {dt:.3e} exceeds {cfl} h / a = {max_stable_dt(h, params, cfl):.3e}")
    a2, eps = params.a ** 2, params.eps
    u, v = state.u.copy(), _relax(state.u, state.v, 0.5 * dt, eps, flux)
    du, dv = _transport(u, v, a2, h)
    u1, v1 = u + dt * du, v + dt * dv
    du, dv = _transport(u1, v1, a2, h)
    u1, v1 = 0.75 * u + 0.25 * (u1 + dt * du), 0.75 * v + 0.25 * (v1 + dt * dv)
    du, dv = _transport(u1, v1, a2, h)
    u = u / 3.0 + 2.0 / 3.0 * (u1 + dt * du)
    v = v / 3.0 + 2.0 / 3.0 * (v1 + dt * dv)
    v = _relax(u, v, 0.5 * dt, eps, flux)
    t = state.time + dt
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise BlowUpError("non-finite values in the state", t)
    return GridState(time=t, x=state.x, u=u, v=v)


def _advance_many(state, nsteps, dt, params, flux):
    code = _kernels.FLUX_CODES.get(flux.kind)
    if code is None:
        for _ in range(nsteps):
            state = imex_advance(state, dt, params, flux)
        return state
    u, v = state.u.copy(), state.v.copy()
    bad = _kernels.advance(u, v, nsteps, dt, params.eps, params.a ** 2, state.h, code)
    if bad >= 0:
        raise BlowUpError("non-finite values in the state", state.time + (bad + 1) * dt)
    return GridState(time=state.time + nsteps * dt, x=state.x, u=u, v=v)


def step_to(state, t_end, params, flux, cfl=CFL):
    """Advance to ``t_end`` with the largest uniform step allowed by the CFL bound."""
    span = t_end - state.time
    if span < 0:
        raise ValueError("cannot step backwards in time")
    if span == 0:
        return state
    nsteps = math.ceil(span / max_stable_dt(state.h, params, cfl) - 1e-12)
    out = _advance_many(state, nsteps, span / nsteps, params, flux)
    return GridState(time=float(t_end), x=out.x, u=out.u, v=out.v)


def track_shock_zero(u, x):
    """Location of the unique sign change of u, by linear interpolation."""
    u, x = np.asarray(u, float), np.asarray(x, float)
    pos = u > 0
    idx = np.nonzero(pos[:-1] != pos[1:])[0]
    if idx.size != 1:
        raise TrackingError(f"expected one sign change of u, found {idx.size}")
    i = idx[0]
    return float(x[i] - u[i] * (x[i + 1] - x[i]) / (u[i + 1] - u[i]))


def track_shock_vmin(v, x):
    """Location of the interior minimum of v, refined by a parabola through three nodes."""
    v, x = np.asarray(v, float), np.asarray(x, float)
    i = int(np.argmin(v))
    if i == 0 or i == v.size - 1:
        raise TrackingError("minimum of v sits on the boundary")
    curv = v[i - 1] - 2 * v[i] + v[i + 1]
    shift = 0.5 * (v[i - 1] - v[i + 1]) / curv if curv > 0 else 0.0
    return float(x[i] + shift * (x[i + 1] - x[i]))


@dataclass(frozen=True)
class ShockTrace:
    times: np.ndarray
    xi: np.ndarray
    estimator: str
    meta: dict = field(default_factory=dict)
    log_abs_xi: Optional[np.ndarray] = None

    def __post_init__(self):
        t = np.asarray(self.times, float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "xi", np.asarray(self.xi, float))
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("trace times must be strictly increasing")
        ell = self.meta.get("ell")
        if ell is not None and np.any(np.abs(self.xi) >= ell):
            raise ValueError("trace leaves the interval")

    def __len__(self):
        return self.times.size

    def at(self, t):
        i = int(np.argmin(np.abs(self.times - t)))
        if not math.isclose(self.times[i], t, rel_tol=1e-12, abs_tol=1e-12):
            raise KeyError(f"no sample at t = {t}")
        return float(self.xi[i])


@dataclass
class Evolution:
    states: list
    trace: ShockTrace
    vmin_trace: ShockTrace


def evolve(params, flux, u0, T, grid, sample_times, cfl=CFL, allow_long=False,
           keep_states=True, on_sample: Optional[Callable] = None):
    """Run the full system from (u0, f(u0)) and record the layer position.

    Runs longer than 1e4 time units need ``allow_long=True``; the reduced
    equation is the intended tool beyond that horizon.
    """
    if T > LONG_HORIZON and not allow_long:
        raise LongHorizonError(f"T = {T} exceeds {LONG_HORIZON:g}; pass allow_long=True")
    times = np.asarray(sorted(sample_times), float)
    if times.size and (times[0] < 0 or times[-1] > T + 1e-12):
        raise ParameterError("sample times must lie in [0, T]")
    if isinstance(grid, int):
        grid = Grid1D(params.ell, grid)
    state = initial_state(u0, grid, params, flux)
    meta = {"eps": params.eps, "a": params.a, "ell": params.ell, "n": grid.n,
            "h": grid.h, "dt_max": max_stable_dt(grid.h, params, cfl), "cfl": cfl}
    states, xz, tv, xv = [], [], [], []
    for t in times:
        state = step_to(state, float(t), params, flux, cfl)
        xz.append(track_shock_zero(state.u, state.x))
        try:
            xv.append(track_shock_vmin(state.v, state.x))
            tv.append(t)
        except TrackingError:
            pass
        if keep_states:
            states.append(state)
        if on_sample is not None:
            on_sample(state)
    state = step_to(state, T, params, flux, cfl)
    if not keep_states:
        states = [state]
    return Evolution(
        states=states,
        trace=ShockTrace(times, xz, "zero-crossing", meta),
        vmin_trace=ShockTrace(tv, xv, "v-argmin", meta),
    )


def reference_initial_datum(x):
    """u0(x) = x^2/2 - x - 1/2, which takes the values 1 and -1 at x = -1, 1."""
    x = np.asarray(x, float)
    return 0.5 * x * x - x - 0.5


@dataclass
class ThetaModel:
    """Drift law theta(xi) for the reduced equation.

    ``mode`` is "projection" or "asymptotic".  Projection mode caches its
    results per xi since the adaptive integrator revisits nearby points.
    """

    mode: str = "projection"
    n_quad: int = 4001
    dxi_rel: float = 1e-3
    cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.mode not in ("projection", "asymptotic"):
            raise ValueError(f"unknown theta mode {self.mode!r}")


def theta_asymptotic(xi, params):
    """(u*/eps)(e^{-u*(ell+xi)/eps} - e^{-u*(ell-xi)/eps})."""
    if not params.symmetric:
        raise UnsupportedParameterError("closed drift formula needs u_plus = -u_minus")
    us, ell, e = params.u_star, params.ell, params.eps * params.a ** 2
    return us / e * (math.exp(-us * (ell + xi) / e) - math.exp(-us * (ell - xi) / e))


def _integral(y, x):
    return float(np.trapezoid(y, x))


def projection_terms(xi, params, flux, family=None, n_quad=4001, dxi_rel=1e-3):
    """Numerator <psi, F[W]>, normaliser alpha_0 and psi_u(xi) for the drift."""
    fam = family if family is not None else matched_family(xi, params, flux)
    x = np.union1d(np.linspace(-params.ell, params.ell, n_quad), [xi])
    psi_u, psi_v = adjoint_first_eigenfunction(xi, params, x, flux)
    d = dxi_rel * params.eps
    lo, hi = matched_family(xi - d, params, flux), matched_family(xi + d, params, flux)
    dU = (hi.U(x) - lo.U(x)) / (2 * d)
    dV = (hi.V(x) - lo.V(x)) / (2 * d)
    alpha0 = _integral(psi_u * dU + psi_v * dV, x)
    U, V = fam.U(x), fam.V(x)
    P2 = -params.a ** 2 * fam.dU(x) + (flux.f(U) - V) / params.eps
    psi_at = float(adjoint_first_eigenfunction(xi, params, np.array([xi]), flux)[0][0])
    # The regular part of -dV/dx vanishes for every family member, so the
    # first component contributes only through the point mass at xi.
    numerator = psi_at * fam.p1_mass + _integral(psi_v * P2, x)
    return numerator, alpha0, psi_at


def theta_eval(model, xi, params, flux, family=None):
    if model.mode == "asymptotic":
        if flux.kind != "burgers":
            raise UnsupportedParameterError("asymptotic drift is available for Burgers' flux only")
        return theta_asymptotic(xi, params)
    key = (float(xi), params, id(flux))
    if key in model.cache:
        return model.cache[key]
    numerator, alpha0, _ = projection_terms(xi, params, flux, family, model.n_quad, model.dxi_rel)
    if abs(alpha0) < 0.1:
        raise TransversalityError(f"alpha_0 = {alpha0:.3e} is below 0.1")
    value = numerator / alpha0
    if len(model.cache) > 4096:
        model.cache.clear()
    model.cache[key] = value
    return value


def reduced_ode_solve(xi0, T, model, params, flux, t0=0.0, sample_times=None, tol=1e-8):
    """Integrate d eta/dt = theta(eta) from eta(t0) = xi0 up to T.

    For xi0 != 0 the unknown is log|eta|, which keeps full relative
    precision once eta has decayed by hundreds of orders of magnitude.
    """
    if not (-params.ell < xi0 < params.ell):
        raise ParameterError("xi0 must lie inside the interval")
    times = np.linspace(t0, T, 201) if sample_times is None else np.asarray(sample_times, float)
    tag = "reduced-ode" if model.mode == "projection" else "asymptotic-ode"
    meta = {"eps": params.eps, "a": params.a, "ell": params.ell, "theta": model.mode, "t0": t0}
    if xi0 == 0.0:
        zeros = np.zeros_like(times)
        return ShockTrace(times, zeros, tag, meta, log_abs_xi=np.full_like(times, -np.inf))
    sign = math.copysign(1.0, xi0)
    # Below this size the drift is evaluated from its slope at the origin;
    # the projection integrals lose all relative precision near 1e-14.
    eta_lin = LINEAR_DRIFT_BELOW * params.ell
    slope = theta_eval(model, sign * eta_lin, params, flux) / (sign * eta_lin)
    z_lin = math.log(eta_lin)

    def rhs(_, z):
        if z[0] <= z_lin:
            return [slope]
        eta = sign * math.exp(z[0])
        return [theta_eval(model, eta, params, flux) / eta]

    traj = integrate_ode(rhs, [math.log(abs(xi0))], (t0, T), tol=tol, atol=1e-10, t_eval=times)
    log_abs = traj.y[0]
    return ShockTrace(traj.t, sign * np.exp(log_abs), tag, meta, log_abs_xi=log_abs)


def decay_rate_fit(trace, window):
    """Least-squares slope of log|xi| against t on ``window`` = (t_start, t_end)."""
    t_a, t_b = window
    mask = (trace.times >= t_a) & (trace.times <= t_b)
    if np.count_nonzero(mask) < 2:
        raise FitError("fewer than two samples in the window")
    xi = trace.xi[mask]
    if trace.log_abs_xi is not None:
        logs = trace.log_abs_xi[mask]
        signs = np.sign(xi)
    else:
        if np.any(xi == 0):
            raise FitError("trace vanishes inside the window")
        logs, signs = np.log(np.abs(xi)), np.sign(xi)
    if np.any(signs != signs[0]) or signs[0] == 0:
        raise FitError("trace changes sign inside the window")
    slope, _ = np.polyfit(trace.times[mask], logs, 1)
    return float(slope)


def perturbation_norm(state, family):
    """L2 norm over the grid of (u - U, v - V) for the given family member."""
    du = state.u - family.U(state.x)
    dv = state.v - family.V(state.x)
    return math.sqrt(_integral(du * du + dv * dv, state.x))


def perturbation_trace(states, params, flux):
    """Perturbation norms along a run, each against the family at the tracked xi."""
    out = []
    for s in states:
        fam = matched_family(track_shock_zero(s.u, s.x), params, flux)
        out.append(perturbation_norm(s, fam))
    return np.array(out)


def fit_perturbation_bound(times, norms, y0, mus=None):
    """Smallest c1 >= 0 with norms <= c1 t + exp(-mu t) y0, minimised over mu > 0.

    Samples at t = 0 must satisfy norms <= y0 and are otherwise ignored.
    Returns (c1, mu).
    """
    times, norms = np.asarray(times, float), np.asarray(norms, float)
    mus = np.logspace(-4, 2, 241) if mus is None else np.asarray(mus, float)
    pos = times > 0
    best = (np.inf, np.nan)
    for mu in mus:
        excess = np.maximum(norms[pos] - np.exp(-mu * times[pos]) * y0, 0.0)
        c1 = float(np.max(excess / times[pos])) if pos.any() else 0.0
        if c1 < best[0]:
            best = (c1, float(mu))
    return best

"""Approximate steady states U(x; xi), V(x; xi) with an internal layer at xi.

On each side of xi the family solves the first integral

    eps a^2 U' = f(U) + C,        V = -eps a^2 U' + f(U) = -C,

with U equal to the boundary value at the wall and U(xi) = 0.  For Burgers'
flux this gives U = k tanh(k (xi - x) / (2 eps a^2)) with plateau constants
k_minus, k_plus.  Since k - u* is exponentially small in 1/eps, the code
stores h = k / u* - 1 and never forms k - u* by subtraction.

For other convex fluxes the integration constant is written as
C = -f(p) - g, with p the boundary value and g > 0 the gap, and g is found
by shooting.  The travel distance from U = 0 to the wall is an explicit
integral of the first integral, which is what the root finder matches
against the distance between xi and the wall.
"""

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate, optimize
from scipy.special import expit

from .errors import (
    BracketError,
    ConstructionError,
    InvalidFluxError,
    UnsupportedParameterError,
)
from .model import BURGERS, check_location, validate_flux
from .numerics import integrate_ode, newton_safeguarded

# Below this distance from the plateau, f(p) - f(p + s w) is evaluated by
# Simpson's rule on f' to avoid cancellation.
_SIMPSON_SWITCH = 1e-3


def _require_burgers(params, flux=BURGERS):
    if flux.kind != "burgers":
        raise UnsupportedParameterError("closed forms are available for Burgers' flux only")
    if not params.symmetric:
        raise UnsupportedParameterError("closed forms need u_plus = -u_minus")


def _side_distance(xi, side, params):
    if side == "left":
        return params.ell + xi
    if side == "right":
        return params.ell - xi
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def _h_equation(delta, params):
    """Defect G(h) = h - 2 (1 + h) / (1 + e^{2y}) and its derivative."""
    us, scale = params.u_star, 2.0 * params.eps * params.a ** 2

    def G(h):
        y = us * (1.0 + h) * delta / scale
        return h - 2.0 * (1.0 + h) * expit(-2.0 * y)

    def dG(h):
        y = us * (1.0 + h) * delta / scale
        q = expit(-2.0 * y)
        dq = -2.0 * q * (1.0 - q)
        return 1.0 - 2.0 * q - 2.0 * (1.0 + h) * dq * us * delta / scale

    return G, dG


def _solve_h(delta, params):
    G, dG = _h_equation(delta, params)
    guess = 2.0 * np.exp(-params.u_star * delta / (params.eps * params.a ** 2))
    try:
        return newton_safeguarded(G, (0.0, 1.0), tol=1e-14 * max(guess, 1e-300), dfn=dG)
    except BracketError as exc:
        raise BracketError(
            f"layer too wide for the bracket [u*, 2u*] (distance {delta})") from exc


def _dh_ddelta(h, delta, params):
    """Derivative of h with respect to the wall distance, by implicit differentiation."""
    us, scale = params.u_star, 2.0 * params.eps * params.a ** 2
    y = us * (1.0 + h) * delta / scale
    q = expit(-2.0 * y)
    dq = -2.0 * q * (1.0 - q)
    G_h = 1.0 - 2.0 * q - 2.0 * (1.0 + h) * dq * us * delta / scale
    G_delta = -2.0 * (1.0 + h) * dq * us * (1.0 + h) / scale
    return -G_delta / G_h


def solve_h(xi, side, params):
    """Relative plateau excess h = k / u* - 1 on one side of the layer."""
    _require_burgers(params)
    check_location(xi, params)
    return _solve_h(_side_distance(xi, side, params), params)


def solve_k(xi, side, params):
    """Matching constant k solving k tanh(k Delta / (2 eps a^2)) = u*."""
    return params.u_star * (1.0 + solve_h(xi, side, params))


def _h_difference(xi, h_minus, h_plus, params):
    """h_minus - h_plus, kept to relative precision when xi is near 0."""
    eps_a2 = params.eps * params.a ** 2
    if abs(xi) * params.u_star > 1e-3 * eps_a2:
        return h_minus - h_plus
    # Simpson's rule for the integral of dh/dDelta over [ell - xi, ell + xi].
    ell = params.ell
    h_mid = _solve_h(ell, params)
    slopes = [_dh_ddelta(h, d, params) for h, d in
              ((h_plus, ell - xi), (h_mid, ell), (h_minus, ell + xi))]
    return 2.0 * xi * (slopes[0] + 4.0 * slopes[1] + slopes[2]) / 6.0


def _sech2(s):
    e = np.exp(-2.0 * np.abs(s))
    return 4.0 * e / (1.0 + e) ** 2


@dataclass(frozen=True)
class _GeneralSide:
    plateau: float
    sign: float          # U = plateau + sign * w
    gap: float           # g in C = -f(plateau) - g
    distance: float
    profile: object      # dense solution w(s), s = |x - xi|


@dataclass(frozen=True)
class MatchedFamily:
    """One member of the approximate steady family, centred at ``xi``.

    ``k_minus`` and ``k_plus`` are the plateau magnitudes (for Burgers'
    flux, U tends to k_minus on the left and to -k_plus on the right away
    from the walls).  ``gap_minus`` and ``gap_plus`` are V - f(u_-/+) on the
    two sides, stored independently so that their difference keeps its
    relative precision.
    """

    xi: float
    k_minus: float
    k_plus: float
    params: object
    flux: object
    mode: str
    gap_minus: float
    gap_plus: float
    h_minus: Optional[float] = None
    h_plus: Optional[float] = None
    _sides: tuple = field(default=(), repr=False, compare=False)

    @property
    def jump(self):
        """Jump of dU/dx across xi."""
        eps_a2 = self.params.eps * self.params.a ** 2
        if self.mode == "closed-form-burgers":
            us = self.params.u_star
            dh = _h_difference(self.xi, self.h_minus, self.h_plus, self.params)
            return us * us * dh * (2.0 + self.h_minus + self.h_plus) / (2.0 * eps_a2)
        return (self.gap_minus - self.gap_plus) / eps_a2

    @property
    def p1_mass(self):
        """Weight of the point mass of -dV/dx at xi, equal to V(xi-) - V(xi+)."""
        return self.params.eps * self.params.a ** 2 * self.jump

    def U(self, x):
        x = np.clip(np.asarray(x, dtype=float), -self.params.ell, self.params.ell)
        if self.mode == "closed-form-burgers":
            k = np.where(x < self.xi, self.k_minus, self.k_plus)
            return k * np.tanh(k * (self.xi - x) / (2.0 * self.params.eps * self.params.a ** 2))
        flat = np.atleast_1d(x)
        out = np.empty_like(flat)
        for side, mask in zip(self._sides, (flat < self.xi, flat >= self.xi)):
            if not mask.any():
                continue
            w = side.profile(np.abs(flat[mask] - self.xi))[0]
            out[mask] = side.plateau + side.sign * w
        return out.reshape(x.shape)

    def dU(self, x):
        """dU/dx, one-sided at x = xi (left value for x < xi, right otherwise)."""
        x = np.clip(np.asarray(x, dtype=float), -self.params.ell, self.params.ell)
        eps_a2 = self.params.eps * self.params.a ** 2
        if self.mode == "closed-form-burgers":
            k = np.where(x < self.xi, self.k_minus, self.k_plus)
            return -(k * k / (2.0 * eps_a2)) * _sech2(k * (self.xi - x) / (2.0 * eps_a2))
        flat = np.atleast_1d(x)
        out = np.empty_like(flat)
        for side, mask in zip(self._sides, (flat < self.xi, flat >= self.xi)):
            if not mask.any():
                continue
            w = side.profile(np.abs(flat[mask] - self.xi))[0]
            out[mask] = -(_plateau_drop(self.flux, side.plateau, side.sign, w) + side.gap) / eps_a2
        return out.reshape(x.shape)

    def V(self, x):
        x = np.asarray(x, dtype=float)
        left = float(self.flux.f(self.params.u_minus)) + self.gap_minus
        right = float(self.flux.f(self.params.u_plus)) + self.gap_plus
        return np.where(x < self.xi, left, right)

    def shifted(self, xi):
        """Family member of the same kind centred at another location."""
        return matched_family(xi, self.params, self.flux)


def eval_U(family, x):
    return family.U(x)


def eval_V(family, x):
    return family.V(x)


def burgers_family(xi, params):
    _require_burgers(params)
    check_location(xi, params)
    us = params.u_star
    h_minus = _solve_h(params.ell + xi, params)
    h_plus = _solve_h(params.ell - xi, params)
    gaps = [us * us * (h + 0.5 * h * h) for h in (h_minus, h_plus)]
    return MatchedFamily(xi=float(xi), k_minus=us * (1 + h_minus), k_plus=us * (1 + h_plus),
                         params=params, flux=BURGERS, mode="closed-form-burgers",
                         gap_minus=gaps[0], gap_plus=gaps[1],
                         h_minus=h_minus, h_plus=h_plus)


def _plateau_drop(flux, plateau, sign, w):
    """f(p) - f(p + sign * w) for w >= 0, cancellation free for small w."""
    w = np.asarray(w, dtype=float)
    direct = flux.f(plateau) - flux.f(plateau + sign * w)
    simpson = -sign * w * (flux.df(plateau) + 4.0 * flux.df(plateau + 0.5 * sign * w)
                           + flux.df(plateau + sign * w)) / 6.0
    return np.where(w < _SIMPSON_SWITCH, simpson, direct)


def _travel_distance(flux, plateau, sign, gap, eps_a2):
    """Distance over which U moves from 0 to the plateau for a given gap.

    Integrates ds = eps a^2 dw / (f(p) - f(p + sign w) + g) over w in
    (0, |p|], written in the variable tau = log(w / |p|) so the integrand is
    a smooth sigmoid even for gaps far below machine epsilon.
    """
    w0 = abs(plateau)
    nu = abs(float(flux.df(plateau)))
    tau_c = np.log(gap / (nu * w0))
    tau_lo = tau_c - 50.0

    def integrand(tau):
        w = w0 * np.exp(tau)
        return eps_a2 * w / (float(_plateau_drop(flux, plateau, sign, w)) + gap)

    pts = [tau_c] if tau_lo < tau_c < 0 else None
    value, err = integrate.quad(integrand, tau_lo, 0.0, points=pts, limit=400,
                                epsabs=0.0, epsrel=1e-13)
    return value


def _shoot_side(flux, params, xi, side):
    eps_a2 = params.eps * params.a ** 2
    if side == "left":
        plateau, sign = params.u_minus, -1.0
    else:
        plateau, sign = params.u_plus, 1.0
    if plateau == 0.0:
        raise ConstructionError("boundary value must be nonzero", side)
    distance = _side_distance(xi, side, params)
    w0 = abs(plateau)

    def mismatch(log_gap):
        return _travel_distance(flux, plateau, sign, np.exp(log_gap), eps_a2) - distance

    # The travel distance is below eps a^2 w0 / g, so this upper end undershoots.
    hi = np.log(1.01 * eps_a2 * w0 / distance)
    lo = -700.0
    if mismatch(lo) < 0:
        raise ConstructionError("gap underflows double precision (eps too small)", side)
    if mismatch(hi) > 0:
        raise ConstructionError("no sign change in the shooting bracket", side)
    log_gap = optimize.brentq(mismatch, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps)
    gap = float(np.exp(log_gap))

    def rhs(s, w):
        return -(_plateau_drop(flux, plateau, sign, w) + gap) / eps_a2

    profile = integrate_ode(rhs, [w0], (0.0, distance), tol=1e-10, atol=1e-14).dense
    return _GeneralSide(plateau=plateau, sign=sign, gap=gap, distance=distance,
                        profile=profile)


def _plateau_magnitude(flux, plateau, gap):
    """|k| with f(sign(p) |k|) = f(p) + g, the plateau level of V."""
    target = float(flux.f(plateau)) + gap
    slope = abs(float(flux.df(plateau)))
    guess = abs(plateau) + gap / slope
    if gap / slope < 1e-8 * abs(plateau):
        return guess
    s = np.sign(plateau)
    return newton_safeguarded(lambda k: float(flux.f(s * k)) - target,
                              (abs(plateau), 2.0 * guess), tol=1e-14 * max(1.0, abs(target)))


def general_flux_family(xi, params, flux):
    """Matched family for a convex flux, built by shooting on each side."""
    check_location(xi, params)
    report = validate_flux(flux, params)
    if not report.passed:
        raise InvalidFluxError(f"flux fails validation: {report.failures()}")
    left = _shoot_side(flux, params, xi, "left")
    right = _shoot_side(flux, params, xi, "right")
    return MatchedFamily(
        xi=float(xi),
        k_minus=_plateau_magnitude(flux, params.u_minus, left.gap),
        k_plus=_plateau_magnitude(flux, params.u_plus, right.gap),
        params=params, flux=flux, mode="shooting-general",
        gap_minus=left.gap, gap_plus=right.gap, _sides=(left, right))


def matched_family(xi, params, flux=BURGERS):
    """Closed form for symmetric Burgers data, shooting otherwise."""
    if flux.kind == "burgers" and params.symmetric:
        return burgers_family(xi, params)
    return general_flux_family(xi, params, flux)


def layer_width(params):
    return params.eps * params.a ** 2 / params.u_star


def is_resolved(params, h, points=8):
    """At least ``points`` grid spacings per layer width."""
    return h * points <= layer_width(params) * (1 + 1e-12)


@dataclass(frozen=True)
class ResidualFields:
    """Residuals of the family inserted into the steady equations.

    ``P1_smooth`` is -dV/dx away from xi and ``P2`` the residual of the
    second equation, both sampled on ``x``.  The singular part of -dV/dx is
    a point mass at xi of weight ``p1_mass``; ``jump`` is the jump of dU/dx.
    """

    x: np.ndarray
    P1_smooth: np.ndarray
    P2: np.ndarray
    jump: float
    p1_mass: float
    under_resolved: bool


def residuals(family, grid):
    p = family.params
    x = grid.full_nodes
    resolved = is_resolved(p, grid.h)
    if not resolved:
        warnings.warn("grid spacing exceeds 1/8 of the layer width", RuntimeWarning,
                      stacklevel=2)
    U, dU, V = family.U(x), family.dU(x), family.V(x)
    P2 = -p.a ** 2 * dU + (family.flux.f(U) - V) / p.eps
    # V is piecewise constant on both sides of xi for every member of the
    # family, so the regular part of -dV/dx vanishes identically.
    P1_smooth = np.zeros_like(x)
    return ResidualFields(x=x, P1_smooth=P1_smooth, P2=P2, jump=family.jump,
                          p1_mass=family.p1_mass, under_resolved=not resolved)


def omega1_asymptotic(xi, params):
    """Leading-order size of the jump term, (u*^2/eps)(e^{-u*(ell+xi)/eps} - e^{-u*(ell-xi)/eps})."""
    us, ell, e = params.u_star, params.ell, params.eps * params.a ** 2
    return us * us / e * (np.exp(-us * (ell + xi) / e) - np.exp(-us * (ell - xi) / e))

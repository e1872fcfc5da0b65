"""Flux functions, problem parameters and the piecewise-constant steady states.

The relaxation system studied throughout the package is

    u_t + v_x = 0,
    v_t + a^2 u_x = (f(u) - v) / eps,

on (-ell, ell) with u(-ell) = u_minus and u(ell) = u_plus.  A flux is passed
around as a ``FluxSpec`` holding f together with its first two derivatives.
"""

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import (
    DegenerateJumpError,
    DomainError,
    InvalidFluxError,
    ParameterError,
)

# Margin added on both sides of [u_plus, u_minus] when sampling convexity.
CONVEXITY_MARGIN = 0.5


def _burgers_f(u):
    return 0.5 * np.asarray(u, dtype=float) ** 2


def _burgers_df(u):
    return np.asarray(u, dtype=float) * 1.0


def _burgers_d2f(u):
    return np.ones_like(np.asarray(u, dtype=float))


def _quartic_f(u):
    return 0.25 * np.asarray(u, dtype=float) ** 4


def _quartic_df(u):
    return np.asarray(u, dtype=float) ** 3


def _quartic_d2f(u):
    return 3.0 * np.asarray(u, dtype=float) ** 2


def _derivative_mismatch(g, dg, u):
    """Largest relative gap between dg and a centred difference of g."""
    step = 1e-5 * np.maximum(1.0, np.abs(u))
    fd = (g(u + step) - g(u - step)) / (2.0 * step)
    exact = dg(u)
    scale = np.maximum(1.0, np.abs(exact))
    return float(np.max(np.abs(fd - exact) / scale))


@dataclass(frozen=True)
class FluxSpec:
    """Scalar flux f with derivatives df and d2f.

    ``kind`` is "burgers", "quartic" or "user"; the two builtin kinds have
    compiled kernels in the time stepper, user fluxes run on the numpy path.
    The derivatives are cross-checked against centred differences of f on
    [-2, 2] at construction.
    """

    f: Callable
    df: Callable
    d2f: Callable
    kind: str = "user"
    provenance: str = "user-supplied triple"
    check_samples: int = field(default=201, repr=False)

    def __post_init__(self):
        u = np.linspace(-2.0, 2.0, self.check_samples)
        with np.errstate(all="ignore"):
            values = [self.f(u), self.df(u), self.d2f(u)]
        for name, val in zip(("f", "df", "d2f"), values):
            if not np.all(np.isfinite(val)):
                raise InvalidFluxError(f"{name} is not finite on the check interval")
        gap1 = _derivative_mismatch(self.f, self.df, u)
        gap2 = _derivative_mismatch(self.df, self.d2f, u)
        if gap1 > 1e-6 or gap2 > 1e-6:
            raise InvalidFluxError(
                f"derivatives disagree with finite differences "
                f"(df gap {gap1:.2e}, d2f gap {gap2:.2e})")


BURGERS = FluxSpec(_burgers_f, _burgers_df, _burgers_d2f,
                   kind="burgers", provenance="builtin-burgers")
QUARTIC = FluxSpec(_quartic_f, _quartic_df, _quartic_d2f,
                   kind="quartic", provenance="builtin-quartic")

_BUILTIN = {"burgers": BURGERS, "quartic": QUARTIC}


def get_flux(name):
    """Return the builtin flux called ``name`` ("burgers" or "quartic")."""
    try:
        return _BUILTIN[name]
    except KeyError:
        raise InvalidFluxError(
            f"unknown flux {name!r}; choose from {sorted(_BUILTIN)}") from None


@dataclass(frozen=True)
class Params:
    """Physical and geometric parameters of one problem instance."""

    eps: float
    a: float = 1.0
    ell: float = 1.0
    u_minus: float = 1.0
    u_plus: float = -1.0

    def __post_init__(self):
        for name in ("eps", "a", "ell"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be positive, got {value}")
        if not (np.isfinite(self.u_minus) and np.isfinite(self.u_plus)):
            raise ParameterError("boundary states must be finite")
        if not self.u_minus > self.u_plus:
            raise ParameterError("need u_minus > u_plus for an admissible jump")

    @property
    def u_star(self):
        """Half the jump, u* = (u_minus - u_plus) / 2."""
        return 0.5 * (self.u_minus - self.u_plus)

    @property
    def symmetric(self):
        return self.u_plus == -self.u_minus

    def with_eps(self, eps):
        return replace(self, eps=eps)


@dataclass(frozen=True)
class ValidationReport:
    checks: dict
    c0: float

    @property
    def passed(self):
        return all(self.checks.values())

    def failures(self):
        return [name for name, ok in self.checks.items() if not ok]


def validate_flux(flux, params, samples=1000, margin=CONVEXITY_MARGIN):
    """Check convexity, the sign conditions and f(u_plus) = f(u_minus).

    Convexity is tested by sampling d2f on [u_plus - margin, u_minus + margin];
    the reported ``c0`` is the smallest sampled value.
    """
    u = np.linspace(params.u_plus - margin, params.u_minus + margin, samples)
    with np.errstate(all="ignore"):
        d2 = np.asarray(flux.d2f(u), dtype=float)
        fm, fp = float(flux.f(params.u_minus)), float(flux.f(params.u_plus))
        dfm, dfp = float(flux.df(params.u_minus)), float(flux.df(params.u_plus))
    if not (np.all(np.isfinite(d2)) and np.isfinite([fm, fp, dfm, dfp]).all()):
        raise InvalidFluxError("flux evaluation produced non-finite values")
    c0 = float(d2.min())
    checks = {
        "convexity": c0 > 0.0,
        "df_signs": dfp < 0.0 < dfm,
        "equal_flux": abs(fm - fp) <= 1e-12,
        "derivatives": max(_derivative_mismatch(flux.f, flux.df, u),
                           _derivative_mismatch(flux.df, flux.d2f, u)) <= 1e-6,
    }
    return ValidationReport(checks=checks, c0=c0)


def rankine_hugoniot_speed(u_l, u_r, flux):
    """Speed (f(u_r) - f(u_l)) / (u_r - u_l) of a jump from u_l to u_r."""
    if u_l == u_r:
        raise DegenerateJumpError("states on both sides of the jump are equal")
    return float((flux.f(u_r) - flux.f(u_l)) / (u_r - u_l))


def check_location(xi, params):
    if not (-params.ell < xi < params.ell):
        raise DomainError(f"xi = {xi} is not inside (-{params.ell}, {params.ell})")


@dataclass(frozen=True)
class HyperbolicSteady:
    """Piecewise-constant steady state with a single jump at ``xi``."""

    xi: float
    u_left: float
    u_right: float
    v_left: float
    v_right: float

    def u(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < self.xi, self.u_left, self.u_right)

    def v(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < self.xi, self.v_left, self.v_right)


def hyperbolic_steady(xi, params, flux):
    check_location(xi, params)
    return HyperbolicSteady(
        xi=float(xi),
        u_left=params.u_minus,
        u_right=params.u_plus,
        v_left=float(flux.f(params.u_minus)),
        v_right=float(flux.f(params.u_plus)),
    )

"""Linearised operators around a matched family and their spectra.

Two operators are assembled on the staggered grid of ``numerics``:

* the viscous one, L_vsc u = eps a^2 u'' - (b u)',  b = f'(U);
* the relaxation one acting on (u, w) with u on nodes and w on faces,

      u_t = -D_node w
      w_t = (-a^2 D_face + A_face diag(b) / eps) u - w / eps.

Eliminating w from an eigenpair of the second gives eps lam^2 + lam = mu
with mu an eigenvalue of L_vsc.  The block matrix has one further eigenvalue
-1/eps, carried by the constant face mode (u = 0, w = const) which the
elimination divides out.

The second half of the module evaluates the asymptotic formulas for the
principal eigenvalue and the infinite-line quantities (shock profile, tail
constants, Schrodinger potential) that enter them.
"""

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import (
    ProfileInstabilityError,
    StructureViolationError,
    TailConstantError,
    UnsupportedParameterError,
)
from .model import BURGERS, check_location
from .numerics import DiffOps, eig_general, integrate_ode
from .steady import _plateau_drop, is_resolved


@dataclass(frozen=True)
class OperatorAssembly:
    L_vsc: np.ndarray
    L_jx: np.ndarray
    b: np.ndarray
    grid: object
    xi: float
    eps: float
    a: float
    under_resolved: bool


def assemble_coefficient(b, grid, eps, a=1.0, xi=0.0, under_resolved=False):
    """Both operators for a given coefficient b sampled on the interior nodes."""
    b = np.asarray(b, dtype=float)
    n = grid.n
    ops = DiffOps(grid)
    L_vsc = eps * a * a * ops.D2.toarray() - ops.D1.toarray() * b[None, :]
    L_jx = np.zeros((2 * n + 1, 2 * n + 1))
    L_jx[:n, n:] = -ops.D_node.toarray()
    L_jx[n:, :n] = -a * a * ops.D_face.toarray() + ops.A_face.toarray() * (b[None, :] / eps)
    L_jx[n:, n:] = -np.eye(n + 1) / eps
    return OperatorAssembly(L_vsc=L_vsc, L_jx=L_jx, b=b, grid=grid, xi=float(xi),
                            eps=float(eps), a=float(a), under_resolved=under_resolved)


def assemble(family, grid):
    p = family.params
    b = family.flux.df(family.U(grid.nodes))
    return assemble_coefficient(b, grid, p.eps, p.a, family.xi,
                                under_resolved=not is_resolved(p, grid.h))


def map_vsc_to_jx(lambda_vsc, eps):
    """Roots lam_+, lam_- of eps lam^2 + lam = lambda_vsc (principal square root)."""
    root = np.emath.sqrt(1.0 + 4.0 * eps * lambda_vsc)
    return (-1.0 + root) / (2.0 * eps), (-1.0 - root) / (2.0 * eps)


@dataclass(frozen=True)
class SpectralStructure:
    lambda1: float
    real_band: np.ndarray
    complex_band: np.ndarray
    k: int

    @property
    def n_real(self):
        return 1 + self.real_band.size

    @property
    def n_complex(self):
        return self.complex_band.size

    @property
    def complex_band_re(self):
        return float(self.complex_band.real.mean()) if self.complex_band.size else float("nan")

    @property
    def max_real_band(self):
        return float(self.real_band.max()) if self.real_band.size else float("-inf")


def classify(spectrum, eps, imag_tol=1e-8):
    """Split a relaxation-operator spectrum into lambda1, real band and complex band.

    ``k`` counts real eigenvalues in (-1/(2 eps), 0) other than lambda1; each
    comes from a viscous eigenvalue above -1/(4 eps) and has a real partner
    below -1/(2 eps).
    """
    values = np.asarray(getattr(spectrum, "values", spectrum))
    is_real = np.abs(values.imag) <= imag_tol * np.maximum(1.0, np.abs(values))
    real = np.sort(values[is_real].real)[::-1]
    small = real[(real > -1.0 / (4.0 * eps)) & (real < 0.0)]
    if small.size == 0:
        raise StructureViolationError("no real eigenvalue in (-1/(4 eps), 0)")
    lambda1 = float(small[0])
    if small.size > 1 and np.isclose(small[0], small[1], rtol=1e-10, atol=0.0):
        raise StructureViolationError("principal eigenvalue is not simple")
    rest = real[1:] if real[0] == lambda1 else np.delete(real, np.argmax(real == lambda1))
    k = int(np.count_nonzero((rest > -1.0 / (2.0 * eps)) & (rest < 0.0)))
    return SpectralStructure(lambda1=lambda1, real_band=rest, complex_band=values[~is_real], k=k)


def principal_eigenvalues(family, grid):
    """Numerical principal eigenvalues of both operators plus the structure."""
    asm = assemble(family, grid)
    structure = classify(eig_general(asm.L_jx), family.params.eps)
    vsc = eig_general(asm.L_vsc).values
    return {"lambda1_jx": structure.lambda1,
            "lambda1_vsc": float(vsc.real.max()),
            "structure": structure,
            "assembly": asm}


def _require_unit_speed(params):
    if params.a != 1.0:
        raise UnsupportedParameterError("asymptotic eigenvalue formulas assume a = 1")


def _jx_from_vsc(lambda_vsc, eps):
    disc = 1.0 + 4.0 * eps * lambda_vsc
    if disc < 0:
        raise UnsupportedParameterError("eps too large for the asymptotic regime")
    return 2.0 * lambda_vsc / (1.0 + np.sqrt(disc))


def lambda1_vsc_asymptotic_burgers(xi, params):
    """-(u*^2 / (2 eps)) [e^{-u*(ell-xi)/eps} + e^{-u*(ell+xi)/eps}]."""
    _require_unit_speed(params)
    us, ell, eps = params.u_star, params.ell, params.eps
    return -us * us / (2.0 * eps) * (np.exp(-us * (ell - xi) / eps) + np.exp(-us * (ell + xi) / eps))


def lambda1_asymptotic_burgers(xi, params):
    """Principal relaxation eigenvalue from the Burgers closed formula (negative)."""
    return _jx_from_vsc(lambda1_vsc_asymptotic_burgers(xi, params), params.eps)


@dataclass(frozen=True)
class ProfileSamples:
    z: np.ndarray
    u: np.ndarray
    du: np.ndarray
    u_star: float


def shock_profile(flux, u_star, z_range=(-20.0, 20.0), num=801, tol=1e-10):
    """Infinite-line profile u' = f(u) - f(u*), u(0) = 0, sampled on ``z_range``."""
    z_lo, z_hi = z_range
    z = np.linspace(z_lo, z_hi, num)
    fs = float(flux.f(u_star))

    def rhs(_, u):
        return flux.f(u) - fs

    u = np.zeros_like(z)
    for mask, end in ((z > 0, z_hi), (z < 0, z_lo)):
        if end == 0 or not mask.any():
            continue
        traj = integrate_ode(rhs, [0.0], (0.0, end), tol=tol, atol=1e-13)
        u[mask] = traj(z[mask])[0]
    slack = 1e-9 * u_star
    if np.any(np.abs(u) >= u_star + slack):
        raise ProfileInstabilityError("profile left the interval (-u*, u*)")
    return ProfileSamples(z=z, u=u, du=flux.f(u) - fs, u_star=u_star)


@dataclass(frozen=True)
class TailConstants:
    """Tail data of the infinite-line profile.

    Far from the centre u_s(z) ~ -u* + z_plus e^{-nu_plus z} as z -> +inf
    and u_s(z) ~ u* - z_minus e^{nu_minus z} as z -> -inf.  The prefactors
    of the eigenvalue formula are taken equal to these tail amplitudes.
    """

    nu_minus: float
    nu_plus: float
    z_minus: float
    z_plus: float
    a_minus: float
    a_plus: float
    a_convention: str = "a = z (tail amplitude)"


def tail_constants(flux, u_star, tol=1e-10):
    fs = float(flux.f(u_star))
    nu_plus = -float(flux.df(-u_star))
    nu_minus = float(flux.df(u_star))
    if nu_plus <= 0 or nu_minus <= 0:
        raise TailConstantError("tail rates must be positive")

    def gap(eta, plateau, sign):
        # f(eta) - f(u*) written as a plateau drop so it stays accurate near +-u*.
        w = sign * (eta - plateau)
        return -_plateau_drop(flux, plateau, sign, w) + (float(flux.f(plateau)) - fs)

    def integrand_plus(eta):
        return 1.0 / gap(eta, -u_star, 1.0) + 1.0 / (nu_plus * (eta + u_star))

    def integrand_minus(eta):
        return 1.0 / gap(eta, u_star, -1.0) - 1.0 / (nu_minus * (eta - u_star))

    out = []
    for fn, upper in ((integrand_plus, -u_star), (integrand_minus, u_star)):
        value, err = integrate.quad(fn, 0.0, upper, epsabs=tol, epsrel=tol, limit=200)
        if not np.isfinite(value) or err > 100 * tol * max(1.0, abs(value)):
            raise TailConstantError(f"quadrature error estimate {err:.2e}")
        out.append(value)
    z_plus = u_star * np.exp(nu_plus * out[0])
    z_minus = u_star * np.exp(-nu_minus * out[1])
    return TailConstants(nu_minus=nu_minus, nu_plus=nu_plus, z_minus=z_minus, z_plus=z_plus,
                         a_minus=z_minus, a_plus=z_plus)


def lambda1_vsc_asymptotic_general(xi, params, flux, tails=None):
    """Principal viscous eigenvalue from the two tail exponentials.

    -(1 / (2 u* eps)) [a_+ nu_+^2 e^{-nu_+(ell-xi)/eps} + a_- nu_-^2 e^{-nu_-(ell+xi)/eps}]
    """
    _require_unit_speed(params)
    check_location(xi, params)
    t = tails or tail_constants(flux, params.u_star)
    us, ell, eps = params.u_star, params.ell, params.eps
    bracket = (t.a_plus * t.nu_plus ** 2 * np.exp(-t.nu_plus * (ell - xi) / eps)
               + t.a_minus * t.nu_minus ** 2 * np.exp(-t.nu_minus * (ell + xi) / eps))
    return -bracket / (2.0 * us * eps)


def lambda1_asymptotic_general(xi, params, flux, tails=None):
    return _jx_from_vsc(lambda1_vsc_asymptotic_general(xi, params, flux, tails), params.eps)


def schrodinger_potential(flux, profile):
    """V(z) = f'(u_s)^2 / 4 + f''(u_s) u_s' / 2 on the profile samples."""
    return 0.25 * flux.df(profile.u) ** 2 + 0.5 * flux.d2f(profile.u) * profile.du


def adjoint_first_eigenfunction(xi, params, x, flux=BURGERS):
    """Closed-form adjoint eigenfunction (psi_u, psi_v) for the step coefficient.

    The coefficient jumps from b_- = f'(u_minus) to b_+ = f'(u_plus) at xi;
    psi_u vanishes at both walls, is continuous at xi and psi_v = eps psi_u'.
    """
    check_location(xi, params)
    x = np.asarray(x, dtype=float)
    ell, ea2, a2 = params.ell, params.eps * params.a ** 2, params.a ** 2
    bm, bp = float(flux.df(params.u_minus)), float(flux.df(params.u_plus))
    right_factor = -np.expm1(bp * (ell - xi) / ea2)
    left_factor = -np.expm1(-bm * (ell + xi) / ea2)
    left = x < xi
    e_left = np.exp(-bm * (ell + np.where(left, x, xi)) / ea2)
    e_right = np.exp(bp * (ell - np.where(left, xi, x)) / ea2)
    psi_u = np.where(left, right_factor * (1.0 - e_left), left_factor * (1.0 - e_right))
    psi_v = np.where(left, bm / a2 * right_factor * e_left, bp / a2 * left_factor * e_right)
    return psi_u, psi_v


def assumption_surrogates(families, c0=10.0, C0=1.0, n=4001):
    """Computable stand-ins for the coefficient hypotheses, one row per family.

    For b = f'(U) on a fine grid this reports
      A0: |b|_inf + eps |b'|_inf,
      A2: max |b - b0| / eps and max eps |b'| over |x - xi| >= c0 eps,
      A3: eps |b'(xi -/+)|,
    and a flag per item: A0 values within a factor 1.5 of each other, A2
    quantities below C0, A3 values bounded below by 0.1.
    """
    rows = []
    for fam in families:
        p, flux = fam.params, fam.flux
        x = np.linspace(-p.ell, p.ell, n)
        U = fam.U(x)
        b = flux.df(U)
        db = flux.d2f(U) * fam.dU(x)
        b0 = np.where(x < fam.xi, flux.df(p.u_minus), flux.df(p.u_plus))
        outer = np.abs(x - fam.xi) >= c0 * p.eps
        xi_pair = np.array([fam.xi - 1e-14, fam.xi])
        slopes = p.eps * np.abs(flux.d2f(fam.U(xi_pair)) * fam.dU(xi_pair))
        rows.append({
            "eps": p.eps,
            "A0": float(np.abs(b).max() + p.eps * np.abs(db).max()),
            "A2_offset": float(np.abs(b - b0)[outer].max() / p.eps),
            "A2_slope": float(p.eps * np.abs(db)[outer].max()),
            "A3": float(slopes.min()),
        })
    a0 = [r["A0"] for r in rows]
    flags = {
        "A0": max(a0) <= 1.5 * min(a0),
        "A2": all(r["A2_offset"] <= C0 and r["A2_slope"] <= C0 for r in rows),
        "A3": all(r["A3"] >= 0.1 for r in rows),
    }
    return rows, flags

"""Grids, difference operators, eigenvalues, root finding and ODE integration.

Difference operators live on a staggered layout.  The unknown u sits on the
n interior nodes x_j = -ell + j h (homogeneous Dirichlet values at the walls)
and the flux-like unknown on the n + 1 faces halfway between nodes.  With

    D_face : nodes -> faces,  (u_{j+1} - u_j) / h
    D_node : faces -> nodes,  (w_{j+1/2} - w_{j-1/2}) / h
    A_face : nodes -> faces,  (u_j + u_{j+1}) / 2

the node operators D2 = D_node D_face (three-point Laplacian) and
D1 = D_node A_face (centred first difference) are both compositions of face
maps.  Eliminating the face unknown from a block system built from D_face,
A_face and D_node therefore reproduces D1 and D2 exactly, which is what makes
the eigenvalue correspondence between the two linearised operators hold to
rounding error.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from .errors import BracketError, ConvergenceError, PartialSpectrumError, StiffnessError


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid with ``n`` interior nodes on (-ell, ell)."""

    ell: float
    n: int

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("need at least three interior nodes")
        if self.ell <= 0:
            raise ValueError("ell must be positive")

    @property
    def h(self):
        return 2.0 * self.ell / (self.n + 1)

    @cached_property
    def full_nodes(self):
        """All n + 2 nodes including both walls."""
        x = -self.ell + self.h * np.arange(self.n + 2)
        x[-1] = self.ell
        return x

    @property
    def nodes(self):
        return self.full_nodes[1:-1]

    @cached_property
    def faces(self):
        return 0.5 * (self.full_nodes[:-1] + self.full_nodes[1:])


class DiffOps:
    """Sparse staggered difference operators for one grid."""

    def __init__(self, grid):
        self.grid = grid
        n, h = grid.n, grid.h
        ones = np.ones(n)
        # (n+1) x n: face j+1/2 sees nodes j and j+1; walls carry zeros.
        self.D_face = sp.diags([ones / h, -ones / h], [0, -1], shape=(n + 1, n), format="csr")
        self.A_face = sp.diags([0.5 * ones, 0.5 * ones], [0, -1], shape=(n + 1, n), format="csr")
        self.D_node = sp.diags([-np.ones(n + 1) / h, np.ones(n + 1) / h], [0, 1],
                               shape=(n, n + 1), format="csr")

    @cached_property
    def D1(self):
        return (self.D_node @ self.A_face).tocsr()

    @cached_property
    def D2(self):
        return (self.D_node @ self.D_face).tocsr()


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted by decreasing real part, with residual norms."""

    values: np.ndarray
    residuals: np.ndarray
    matrix_norm: float

    def __len__(self):
        return self.values.size

    @property
    def max_relative_residual(self):
        return float(self.residuals.max() / self.matrix_norm) if self.values.size else 0.0


def eig_general(A):
    """All eigenvalues of a dense real square matrix.

    LAPACK's geev (Hessenberg reduction followed by the implicitly shifted QR
    iteration) does the work.  Residuals ||A phi - lambda phi|| are computed
    for unit eigenvectors so callers can audit every reported value.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    try:
        values, vectors = scipy.linalg.eig(A, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise PartialSpectrumError(f"QR iteration failed: {exc}") from exc
    residuals = np.linalg.norm(A @ vectors - vectors * values, axis=0)
    residuals /= np.linalg.norm(vectors, axis=0)
    order = np.lexsort((-values.imag, -values.real))
    return Spectrum(values=values[order], residuals=residuals[order],
                    matrix_norm=float(np.linalg.norm(A, 1)))


def newton_safeguarded(fn, bracket, tol, dfn=None, maxiter=200):
    """Root of ``fn`` inside ``bracket`` by Newton steps with bisection fallback.

    The iterate never leaves the current bracket.  Without ``dfn`` the
    derivative is replaced by a centred difference.  Iteration stops when
    |fn| <= tol or when the Newton correction drops below the floating point
    resolution of the iterate.
    """
    lo, hi = map(float, bracket)
    f_lo, f_hi = fn(lo), fn(hi)
    if abs(f_lo) <= tol:
        return lo
    if abs(f_hi) <= tol:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise BracketError(f"no sign change on [{lo}, {hi}]")
    if f_lo > 0:
        lo, hi = hi, lo  # keep fn(lo) < 0 < fn(hi)

    x = 0.5 * (lo + hi)
    for _ in range(maxiter):
        fx = fn(x)
        if abs(fx) <= tol:
            return x
        if fx < 0:
            lo = x
        else:
            hi = x
        if dfn is not None:
            slope = dfn(x)
        else:
            step = 1e-7 * max(1.0, abs(x))
            slope = (fn(x + step) - fn(x - step)) / (2 * step)
        a, b = min(lo, hi), max(lo, hi)
        x_new = x - fx / slope if slope != 0 else np.nan
        if not (a < x_new < b):
            x_new = 0.5 * (a + b)
        if abs(x_new - x) <= 2 * np.finfo(float).eps * abs(x) or b - a <= np.finfo(float).tiny:
            return x_new
        x = x_new
    raise ConvergenceError(f"no convergence in {maxiter} iterations (last defect {fx:.3e})")


@dataclass
class Trajectory:
    """Sampled solution of an initial value problem with dense output."""

    t: np.ndarray
    y: np.ndarray
    dense: object
    nfev: int

    def __call__(self, t):
        return self.dense(t)


def integrate_ode(rhs, y0, t_span, tol=1e-9, atol=None, t_eval=None, method="RK45"):
    """Integrate y' = rhs(t, y) with an embedded Runge-Kutta pair.

    ``tol`` is the relative local error target; ``atol`` defaults to
    ``tol * 1e-3``.  A failed step-size selection is reported as a
    ``StiffnessError``.
    """
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    result = solve_ivp(rhs, t_span, y0, method=method, rtol=tol,
                       atol=tol * 1e-3 if atol is None else atol,
                       t_eval=t_eval, dense_output=True)
    if result.status < 0:
        raise StiffnessError(result.message)
    return Trajectory(t=result.t, y=result.y, dense=result.sol, nfev=result.nfev)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment

from metashock.errors import StructureViolationError, UnsupportedParameterError
from metashock.model import BURGERS, QUARTIC, Params
from metashock.numerics import Grid1D, eig_general
from metashock.spectral import (
    adjoint_first_eigenfunction,
    assemble,
    assemble_coefficient,
    assumption_surrogates,
    classify,
    lambda1_asymptotic_burgers,
    lambda1_asymptotic_general,
    lambda1_vsc_asymptotic_burgers,
    lambda1_vsc_asymptotic_general,
    map_vsc_to_jx,
    principal_eigenvalues,
    schrodinger_potential,
    shock_profile,
    tail_constants,
)
from metashock.steady import matched_family


def multiset_distance(a, b):
    cost = np.abs(np.asarray(a)[:, None] - np.asarray(b)[None, :])
    rows, cols = linear_sum_assignment(cost)
    return cost[rows, cols].max()


def mapped_union(L_vsc, eps):
    mu = eig_general(L_vsc).values
    plus, minus = map_vsc_to_jx(mu, eps)
    # the constant face mode (u = 0, v = const) is an extra eigenvalue -1/eps
    return np.concatenate([plus, minus, [-1.0 / eps]])


class TestAssembly:
    def test_pure_diffusion_spectrum(self):
        eps, grid = 0.1, Grid1D(1.0, 400)
        asm = assemble_coefficient(np.zeros(grid.n), grid, eps)
        lam = np.sort(eig_general(asm.L_vsc).values.real)[::-1][:5]
        k = np.arange(1, 6)
        np.testing.assert_allclose(lam, -eps * (k * np.pi / 2.0) ** 2, rtol=0.01)

    def test_burgers_coefficient_is_odd_at_centre(self):
        asm = assemble(matched_family(0.0, Params(eps=0.05)), Grid1D(1.0, 401))
        np.testing.assert_allclose(asm.b, -asm.b[::-1], atol=1e-14)
        assert asm.L_jx.shape == (2 * 401 + 1, 2 * 401 + 1)
        assert not asm.under_resolved

    def test_under_resolution_flag(self):
        asm = assemble(matched_family(0.0, Params(eps=0.01)), Grid1D(1.0, 100))
        assert asm.under_resolved


class TestMapping:
    def test_scalar_cases(self):
        eps = 0.1
        plus, minus = map_vsc_to_jx(0.0, eps)
        assert (plus, minus) == (0.0, pytest.approx(-1 / eps))
        plus, minus = map_vsc_to_jx(-1 / (4 * eps), eps)
        assert plus == pytest.approx(-1 / (2 * eps)) and minus == pytest.approx(-1 / (2 * eps))
        plus, minus = map_vsc_to_jx(-1 / (2 * eps), eps)
        assert plus == pytest.approx(-1 / (2 * eps) + 1j / (2 * eps))
        assert minus == pytest.approx(-1 / (2 * eps) - 1j / (2 * eps))

    @given(st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False),
           st.floats(0.01, 1.0))
    def test_roots_solve_the_quadratic(self, mu, eps):
        for lam in map_vsc_to_jx(mu, eps):
            assert abs(eps * lam * lam + lam - mu) <= 1e-9 * max(1.0, abs(mu), abs(lam))

    @settings(max_examples=8, deadline=None)
    @given(st.floats(-0.5, 0.5), st.sampled_from([0.05, 0.08, 0.1]),
           st.sampled_from([BURGERS, QUARTIC]))
    def test_matrix_level_exactness(self, xi, eps, flux):
        grid = Grid1D(1.0, 100)
        asm = assemble(matched_family(xi, Params(eps=eps), flux), grid)
        jx = eig_general(asm.L_jx).values
        assert multiset_distance(jx, mapped_union(asm.L_vsc, eps)) <= 1e-8 / eps


@pytest.fixture(scope="module")
def structure():
    return principal_eigenvalues(matched_family(0.0, Params(eps=0.05)), Grid1D(1.0, 400))


class TestClassify:
    def test_one_small_eigenvalue(self, structure):
        s = structure["structure"]
        assert -1e-3 < s.lambda1 < 0
        assert s.max_real_band <= -1 / (4 * 0.05)
        assert s.k == 0

    def test_complex_band_on_the_line(self, structure):
        s = structure["structure"]
        assert s.n_complex > 0
        assert np.max(np.abs(s.complex_band.real + 10.0)) <= 1e-6 * 10.0

    def test_two_operators_agree_on_the_principal_eigenvalue(self, structure):
        lam = structure["lambda1_jx"]
        # absolute accuracy of a dense eigensolve is about 1e-16 ||L|| ~ 1e-11 here
        assert 0.05 * lam * lam + lam == pytest.approx(structure["lambda1_vsc"], rel=1e-3)

    def test_violation(self):
        with pytest.raises(StructureViolationError):
            classify(np.array([-100.0, -200.0, -10 + 3j, -10 - 3j]), eps=0.05)


class TestBurgersAsymptotics:
    def test_value(self):
        lam = lambda1_asymptotic_burgers(0.0, Params(eps=0.1))
        assert lam < 0
        assert abs(lam) == pytest.approx(10 * math.exp(-10), rel=2e-3)
        assert abs(lam) == pytest.approx(4.54e-4, rel=1e-3)

    def test_grows_with_distance_from_centre(self):
        p = Params(eps=0.1)
        vals = [abs(lambda1_asymptotic_burgers(x, p)) for x in np.linspace(0, 0.9, 10)]
        assert np.all(np.diff(vals) > 0)

    def test_needs_unit_speed(self):
        with pytest.raises(UnsupportedParameterError):
            lambda1_asymptotic_burgers(0.0, Params(eps=0.1, a=2.0))

    def test_tail_formula_is_twice_the_closed_formula(self):
        p = Params(eps=0.08)
        for xi in (-0.3, 0.0, 0.2):
            assert lambda1_vsc_asymptotic_general(xi, p, BURGERS) == pytest.approx(
                2 * lambda1_vsc_asymptotic_burgers(xi, p), rel=1e-9)


class TestProfileAndTails:
    def test_burgers_profile(self):
        prof = shock_profile(BURGERS, 1.0)
        assert prof.u[np.argmin(np.abs(prof.z))] == 0.0
        assert np.max(np.abs(prof.u + np.tanh(prof.z / 2))) <= 1e-8

    def test_quartic_profile_is_odd(self):
        prof = shock_profile(QUARTIC, 1.0)
        assert np.max(np.abs(prof.u + prof.u[::-1])) <= 1e-9

    def test_burgers_tails(self):
        t = tail_constants(BURGERS, 1.0)
        assert t.nu_plus == t.nu_minus == 1.0
        assert t.a_plus == pytest.approx(2.0, rel=1e-9)
        assert t.a_minus == pytest.approx(2.0, rel=1e-9)

    def test_quartic_tails_match_the_profile(self):
        t = tail_constants(QUARTIC, 1.0)
        assert t.nu_plus == t.nu_minus == 1.0
        prof = shock_profile(QUARTIC, 1.0, z_range=(0.0, 16.0), num=161)
        far = prof.z >= 12
        amp = (prof.u[far] + 1.0) * np.exp(prof.z[far])
        np.testing.assert_allclose(amp, t.z_plus, rtol=1e-4)

    def test_symmetric_flux_gives_equal_terms(self):
        t = tail_constants(QUARTIC, 1.0)
        assert t.a_plus == pytest.approx(t.a_minus, rel=1e-10)

    def test_general_formula_is_negative(self):
        assert lambda1_asymptotic_general(0.1, Params(eps=0.1), QUARTIC) < 0

    def test_schrodinger_potential(self):
        prof = shock_profile(BURGERS, 1.0)
        pot = schrodinger_potential(BURGERS, prof)
        np.testing.assert_allclose(pot, prof.u ** 2 / 2 - 0.25, atol=1e-12)
        assert pot[np.argmin(np.abs(prof.z))] == pytest.approx(-0.25)
        assert pot[0] == pytest.approx(0.25, abs=1e-7)
        assert pot[-1] == pytest.approx(0.25, abs=1e-7)


class TestAdjoint:
    @pytest.mark.parametrize("xi", [-0.4, 0.0, 0.3])
    def test_walls_and_continuity(self, xi):
        p = Params(eps=0.05)
        x = np.array([-1.0, xi - 1e-15, xi, 1.0])
        psi_u, _ = adjoint_first_eigenfunction(xi, p, x)
        assert psi_u[0] == 0.0 and abs(psi_u[-1]) <= 1e-15
        assert abs(psi_u[1] - psi_u[2]) <= 1e-12

    def test_second_component_is_scaled_derivative(self):
        p = Params(eps=0.05)
        x = np.linspace(-1, 1, 20001)
        psi_u, psi_v = adjoint_first_eigenfunction(-0.2, p, x)
        d = np.gradient(psi_u, x)
        away = np.abs(x + 0.2) > 1e-3
        np.testing.assert_allclose(psi_v[away], p.eps * d[away], atol=2e-3)

    @pytest.mark.parametrize("eps", [0.05, 0.03, 0.02])
    def test_close_to_constant_away_from_walls(self, eps):
        p, delta = Params(eps=eps), 0.2
        x = np.linspace(-1 + delta, 1 - delta, 2001)
        psi_u, psi_v = adjoint_first_eigenfunction(0.1, p, x)
        dist = max(np.abs(psi_u - 1).max(), np.abs(psi_v).max())
        assert dist <= 3 * math.exp(-delta / eps)


def test_assumption_surrogates_hold_for_burgers():
    fams = [matched_family(0.2, Params(eps=e)) for e in (0.1, 0.05, 0.025)]
    rows, flags = assumption_surrogates(fams)
    assert len(rows) == 3
    assert all(flags.values()), (rows, flags)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metashock.errors import BracketError, StiffnessError
from metashock.numerics import DiffOps, Grid1D, eig_general, integrate_ode, newton_safeguarded


class TestGrid:
    def test_spacing_and_walls(self):
        g = Grid1D(1.0, 9)
        assert g.h == pytest.approx(0.2)
        assert g.full_nodes[0] == -1.0 and g.full_nodes[-1] == 1.0
        assert g.nodes.size == 9 and g.faces.size == 10

    @given(st.integers(3, 400).filter(lambda n: n % 2 == 1), st.floats(0.1, 5.0))
    def test_odd_grids_are_symmetric(self, n, ell):
        x = Grid1D(ell, n).nodes
        assert np.all(np.diff(x) > 0)
        np.testing.assert_allclose(x, -x[::-1], atol=1e-12 * ell)

    def test_too_small(self):
        with pytest.raises(ValueError):
            Grid1D(1.0, 2)


class TestDiffOps:
    def test_first_difference_is_exact_on_lines(self):
        g = Grid1D(1.0, 50)
        slope = DiffOps(g).D1 @ (3.0 * g.nodes + 0.5)
        np.testing.assert_allclose(slope[1:-1], 3.0, rtol=1e-12)

    def test_first_difference_is_skew(self):
        D1 = DiffOps(Grid1D(1.0, 30)).D1.toarray()
        np.testing.assert_allclose(D1, -D1.T, atol=1e-12)

    def test_composition_identities(self):
        ops = DiffOps(Grid1D(1.0, 40))
        assert (abs(ops.D_node @ ops.A_face - ops.D1)).max() == 0
        assert (abs(ops.D_node @ ops.D_face - ops.D2)).max() == 0

    def test_laplacian_spectrum(self):
        g = Grid1D(1.0, 60)
        lam = np.sort(np.linalg.eigvalsh(DiffOps(g).D2.toarray()))
        j = np.arange(1, g.n + 1)
        exact = np.sort(-4.0 / g.h ** 2 * np.sin(j * np.pi / (2 * (g.n + 1))) ** 2)
        np.testing.assert_allclose(lam, exact, rtol=1e-10)


class TestEigGeneral:
    def test_diagonal(self):
        np.testing.assert_allclose(np.sort(eig_general(np.diag([1.0, 2.0, 3.0])).values.real),
                                   [1, 2, 3])

    def test_rotation_generator(self):
        spec = eig_general(np.array([[0.0, 1.0], [-1.0, 0.0]]))
        np.testing.assert_allclose(spec.values, [1j, -1j], atol=1e-14)

    def test_companion_matrix(self):
        # z^3 - 6 z^2 + 11 z - 6 = (z - 1)(z - 2)(z - 3)
        C = np.array([[6.0, -11.0, 6.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        spec = eig_general(C)
        np.testing.assert_allclose(spec.values.real, [3, 2, 1], rtol=1e-10)
        np.testing.assert_allclose(spec.values.imag, 0, atol=1e-10)

    def test_sorted_by_real_part(self):
        rng = np.random.default_rng(3)
        spec = eig_general(rng.standard_normal((40, 40)))
        assert np.all(np.diff(spec.values.real) <= 1e-12)
        assert spec.max_relative_residual <= 1e-8

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_permutation_invariance(self, seed):
        rng = np.random.default_rng(seed)
        A = rng.standard_normal((25, 25))
        P = np.eye(25)[rng.permutation(25)]
        a = eig_general(A).values
        b = eig_general(P @ A @ P.T).values
        # match each eigenvalue to its nearest partner
        dist = np.abs(a[:, None] - b[None, :])
        assert dist.min(axis=1).max() <= 1e-8 * max(1.0, np.abs(a).max())

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            eig_general(np.ones((2, 3)))
        with pytest.raises(ValueError):
            eig_general(np.array([[np.nan]]))


class TestNewton:
    def test_sqrt_two(self):
        root = newton_safeguarded(lambda x: x * x - 2, (1.0, 2.0), 1e-14, dfn=lambda x: 2 * x)
        assert root == pytest.approx(math.sqrt(2), rel=1e-14)

    def test_tanh_against_bisection(self):
        from scipy.optimize import bisect
        fn = lambda x: math.tanh(x) - 0.5  # noqa: E731
        oracle = bisect(fn, 0.0, 2.0, xtol=1e-15)
        assert newton_safeguarded(fn, (0.0, 2.0), 1e-14) == pytest.approx(oracle, abs=1e-13)
        assert oracle == pytest.approx(math.atanh(0.5), abs=1e-14)

    def test_linear_needs_one_evaluation_at_the_midpoint(self):
        calls = []

        def fn(x):
            calls.append(x)
            return x - 1.0

        assert newton_safeguarded(fn, (0.0, 2.0), 1e-15, dfn=lambda x: 1.0) == 1.0
        assert len(calls) == 3  # two bracket ends and the first iterate

    def test_no_sign_change(self):
        with pytest.raises(BracketError):
            newton_safeguarded(lambda x: x * x + 1, (-1.0, 1.0), 1e-12)

    @given(st.floats(-50, 50))
    def test_stays_in_bracket(self, c):
        fn = lambda x: math.atan(x - c)  # noqa: E731  Newton alone diverges here
        root = newton_safeguarded(fn, (-60.0, 60.0), 1e-12)
        assert -60 <= root <= 60 and abs(fn(root)) <= 1e-12


class TestIntegrateODE:
    def test_constant(self):
        traj = integrate_ode(lambda t, y: [0.0], [5.0], (0.0, 3.0), t_eval=[0, 1, 3])
        np.testing.assert_array_equal(traj.y[0], 5.0)

    def test_exponential(self):
        traj = integrate_ode(lambda t, y: -y, [1.0], (0.0, 1.0), tol=1e-11, t_eval=[1.0])
        assert traj.y[0, -1] == pytest.approx(math.exp(-1), abs=1e-9)

    @settings(max_examples=15, deadline=None)
    @given(st.floats(0.05, 3.0))
    def test_cubic_decay_closed_form(self, y0):
        t = np.linspace(0, 5, 11)
        traj = integrate_ode(lambda _, y: -y ** 3, [y0], (0.0, 5.0), tol=1e-10, t_eval=t)
        np.testing.assert_allclose(traj.y[0], y0 / np.sqrt(1 + 2 * y0 * y0 * t), rtol=1e-7)

    def test_dense_output(self):
        traj = integrate_ode(lambda t, y: -y, [1.0], (0.0, 2.0), tol=1e-10)
        assert traj(0.5)[0] == pytest.approx(math.exp(-0.5), rel=1e-7)

    def test_blow_up_is_reported(self):
        with pytest.raises(StiffnessError):
            integrate_ode(lambda t, y: y ** 2, [1.0], (0.0, 2.0))

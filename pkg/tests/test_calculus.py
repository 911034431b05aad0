import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermolyap import (
    Dual2,
    DomainError,
    EvaluationError,
    StateFields,
    fd_derivative,
    gateaux_first,
    gateaux_second,
)
from thermolyap.calculus import exp, log, perturbed, sin, sqrt
from thermolyap.fields import Grid1D, integrate


class TestFdDerivative:
    def test_square_first_order(self):
        est = fd_derivative(lambda x: x * x, 3.0, order=1)
        assert est.value == pytest.approx(6.0, abs=1e-9)
        assert est.error < 1e-8

    def test_square_second_order_at_zero(self):
        est = fd_derivative(lambda x: x * x, 0.0, order=2)
        assert est.value == pytest.approx(2.0, abs=1e-6)

    def test_exponential_first_order(self):
        # independent analytic oracle: d exp/dx at 1 is e
        est = fd_derivative(math.exp, 1.0, order=1)
        assert abs(est.value - math.e) < 1e-8

    def test_non_finite_raises(self):
        with pytest.raises(EvaluationError):
            fd_derivative(lambda x: float("nan"), 0.0, order=1)

    def test_bad_order_rejected(self):
        with pytest.raises(ValueError):
            fd_derivative(lambda x: x, 0.0, order=3)


class TestDual2:
    def test_value_only_construction_has_zero_derivatives(self):
        d = Dual2(3.5)
        assert d.d1 == 0.0 and d.d2 == 0.0 and d.d11 == 0.0

    def test_polynomial_exact(self):
        x = Dual2.seed(2.0)
        y = 3.0 * x * x * x - x * x + 5.0 * x - 7.0
        assert y.val == pytest.approx(3 * 8 - 4 + 10 - 7)
        assert y.d1 == pytest.approx(3 * 3 * 4 - 2 * 2 + 5)
        assert y.d11 == pytest.approx(18 * 2 - 2)

    def test_mixed_partials(self):
        # f(x, y) = x^2 y^3 + sin(x y)
        x0, y0 = 0.7, 1.3
        x, y = Dual2.seed_pair(x0, y0)
        f = x * x * y * y * y + sin(x * y)
        assert f.d1 == pytest.approx(2 * x0 * y0**3 + y0 * math.cos(x0 * y0))
        assert f.d2 == pytest.approx(3 * x0**2 * y0**2 + x0 * math.cos(x0 * y0))
        d12 = (6 * x0 * y0**2 + math.cos(x0 * y0)
               - x0 * y0 * math.sin(x0 * y0))
        assert f.d12 == pytest.approx(d12, rel=1e-14)

    def test_nested_seed_differentiates_derived_function(self):
        # g(x) = d/du [u^3] at u = x  is 3 x^2; its x-derivative is 6x
        def slope_of_cube(x):
            u = Dual2.seed(x)
            return (u * u * u).d1

        outer = Dual2.seed(1.5)
        g = slope_of_cube(outer)
        assert g.val == pytest.approx(3 * 1.5**2)
        assert g.d1 == pytest.approx(6 * 1.5)

    def test_array_components(self):
        x = Dual2.seed(np.array([1.0, 2.0, 4.0]))
        y = log(x) * x
        np.testing.assert_allclose(y.d1, np.log([1.0, 2.0, 4.0]) + 1.0)
        np.testing.assert_allclose(y.d11, 1.0 / np.array([1.0, 2.0, 4.0]))

    @settings(max_examples=60, deadline=None)
    @given(st.floats(min_value=0.2, max_value=3.0),
           st.floats(min_value=-1.5, max_value=1.5))
    def test_composition_matches_fd(self, a, b):
        def f(x):
            return math.exp(b * x) * math.log(x) + math.sqrt(x) - a * x * x

        def fdual(x):
            return exp(b * x) * log(x) + sqrt(x) - a * x * x

        x0 = a + 0.5
        jet = fdual(Dual2.seed(x0))
        est1 = fd_derivative(f, x0, order=1)
        est2 = fd_derivative(f, x0, order=2)
        assert abs(jet.d1 - est1.value) <= est1.error + 1e-7 * (1 + abs(jet.d1))
        assert abs(jet.d11 - est2.value) <= est2.error + 1e-5 * (1 + abs(jet.d11))

    def test_division_and_rdivision(self):
        x = Dual2.seed(2.0)
        y = (1.0 / x) + x / 4.0
        assert y.val == pytest.approx(1.0)
        assert y.d1 == pytest.approx(-0.25 + 0.25)
        assert y.d11 == pytest.approx(2.0 / 8.0)


class TestGateaux:
    def _mass_functional(self, grid):
        return lambda w: integrate(grid, w.rho)

    def test_linear_functional_gives_integral_of_direction(self, rng):
        grid = Grid1D(2.0, 16)
        base = StateFields.uniform(16, 1.0, 0.0, 1.0)
        direction = StateFields(rng.uniform(-1, 1, 16), np.zeros(16),
                                np.zeros(16))
        value = gateaux_first(self._mass_functional(grid), base, direction)
        assert value == pytest.approx(integrate(grid, direction.rho), abs=1e-10)

    def test_kinetic_energy_stationary_at_rest(self, rng):
        grid = Grid1D(1.0, 16)
        base = StateFields.uniform(16, 2.0, 0.0, 1.0)

        def kinetic(w):
            return integrate(grid, 0.5 * w.rho * w.v * w.v)

        direction = StateFields(rng.uniform(-1, 1, 16),
                                rng.uniform(-1, 1, 16), np.zeros(16))
        assert gateaux_first(kinetic, base, direction) == pytest.approx(0.0, abs=1e-10)

    @pytest.mark.parametrize("alpha", [-2.0, 0.5, 3.0])
    def test_first_derivative_linear_in_direction(self, rng, alpha):
        grid = Grid1D(1.0, 12)
        base = StateFields.uniform(12, 1.0, 0.2, 1.0)

        def functional(w):
            return integrate(grid, w.rho * w.theta + 0.5 * w.rho * w.v * w.v)

        direction = StateFields(rng.uniform(-1, 1, 12), rng.uniform(-1, 1, 12),
                                rng.uniform(-1, 1, 12))
        scaled = StateFields(alpha * direction.rho, alpha * direction.v,
                             alpha * direction.theta)
        g1 = gateaux_first(functional, base, direction)
        g2 = gateaux_first(functional, base, scaled)
        assert g2 == pytest.approx(alpha * g1, rel=1e-9, abs=1e-12)

    def test_second_derivative_of_affine_functional_vanishes(self, rng):
        # The 3-point stencil carries an eps*|F|/h^2 roundoff floor, so the
        # 1e-9 absolute claim is checked at a representative O(0.1) scale.
        grid = Grid1D(1.0, 12)
        base = StateFields.uniform(12, 1.0, 0.0, 1.0)

        def affine(w):
            return integrate(grid, 0.2 * w.rho - 0.3 * w.theta + 0.1 * w.v) + 0.05

        direction = StateFields(rng.uniform(-1, 1, 12), rng.uniform(-1, 1, 12),
                                rng.uniform(-1, 1, 12))
        assert gateaux_second(affine, base, direction) == pytest.approx(0.0, abs=1e-9)

    def test_second_derivative_of_kinetic_energy(self, rng):
        # F = int rho |v|^2 / 2 at (rho_hat, v=0): expanding in s gives
        # int rho_hat |v~|^2 as the exact second derivative.
        grid = Grid1D(1.0, 16)
        rho_hat = 1.7
        base = StateFields.uniform(16, rho_hat, 0.0, 1.0)

        def kinetic(w):
            return integrate(grid, 0.5 * w.rho * w.v * w.v)

        v_tilde = rng.uniform(-1, 1, 16)
        direction = StateFields(np.zeros(16), v_tilde, np.zeros(16))
        expected = integrate(grid, rho_hat * v_tilde * v_tilde)
        value = gateaux_second(kinetic, base, direction)
        assert value == pytest.approx(expected, rel=1e-7)

    def test_step_shrinks_near_admissibility_boundary(self):
        grid = Grid1D(1.0, 8)
        base = StateFields.uniform(8, 1e-7, 0.0, 1e-7)

        def functional(w):
            return integrate(grid, w.rho * w.theta)

        direction = StateFields(np.ones(8), np.zeros(8), np.ones(8))
        value = gateaux_first(functional, base, direction)
        assert math.isfinite(value)

    def test_unreachable_admissible_step_raises(self):
        grid = Grid1D(1.0, 8)
        base = StateFields.uniform(8, 1e-300, 0.0, 1.0)

        def functional(w):
            return integrate(grid, w.rho)

        direction = StateFields(np.ones(8), np.zeros(8), np.zeros(8))
        with pytest.raises(DomainError):
            gateaux_first(functional, base, direction)

    def test_perturbed_helper(self):
        base = StateFields.uniform(4, 1.0, 0.0, 1.0)
        direction = StateFields.uniform(4, 1.0, 2.0, -1.0)
        probe = perturbed(base, direction, 0.5)
        np.testing.assert_allclose(probe.rho, 1.5)
        np.testing.assert_allclose(probe.v, 1.0)
        np.testing.assert_allclose(probe.theta, 0.5)

"""Energies, gradients, the Hardy gate and the first-eigenvalue estimate."""

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import brentq

from maxminpass import (
    ConvergenceError,
    GridFunction,
    GridMismatchError,
    NonlinearitySpec,
    ProblemSpec,
    ValidationError,
    build_radial_grid,
    estimate_mu_p,
    eval_F,
    eval_T,
    eval_U,
    grad_T,
    grad_U,
    hardy_constant,
    inner,
    norm,
    problem_from_config,
    problem_to_config,
)
from maxminpass.functionals import Preconditioner, _mu_p_dense, edge_geometry

RNG = np.random.default_rng(20240817)


def gaussian(grid, width=1.0, amp=1.0):
    return GridFunction(grid, amp * np.exp(-((grid.nodes / width) ** 2)))


def hardy_spec(mu=0.0, p=2.0, m=200, R=30.0, q=8.0 / 3.0):
    grid = build_radial_grid(5, R, m, 50.0 ** (1.0 / m))
    return ProblemSpec(
        variant="hardy-subcritical",
        p=p,
        n=5,
        mu=mu,
        nonlinearity=NonlinearitySpec(1.0, q),
        grid=grid,
    )


def critical_spec(mu=3.0, m=120, p=2.0):
    grid = build_radial_grid(5, 1.0, m, 1.0)
    return ProblemSpec(variant="critical-bounded", p=p, n=5, mu=mu, grid=grid)


class TestHardyConstant:
    def test_known_values(self):
        assert hardy_constant(2.0, 4) == pytest.approx(1.0)
        assert hardy_constant(2.0, 3) == pytest.approx(0.25)
        assert hardy_constant(2.0, 6) == pytest.approx(4.0)


class TestNonlinearity:
    def test_g_and_primitive(self):
        nl = NonlinearitySpec(1.0, 3.0)
        assert nl.g(2.0) == pytest.approx(-2.0 + 4.0)
        assert nl.G(2.0) == pytest.approx(-2.0 + 8.0 / 3.0)
        assert nl.G(nl.xi0) > 0

    def test_oddness(self):
        nl = NonlinearitySpec(2.0, 2.7)
        s = np.linspace(-5, 5, 101)
        assert np.allclose(nl.g(-s), -nl.g(s))

    def test_growth_gate_accepts_subcritical(self):
        NonlinearitySpec(1.0, 8.0 / 3.0).check_growth_conditions(2.0, 10.0 / 3.0)

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValidationError):
            NonlinearitySpec(0.0, 3.0)
        with pytest.raises(ValidationError):
            NonlinearitySpec(1.0, 2.0)
        with pytest.raises(ValidationError):
            NonlinearitySpec(1.0, 4.0).check_growth_conditions(2.0, 10.0 / 3.0)


class TestEvalT:
    def test_zero_function_is_zero(self):
        spec = hardy_spec()
        zero = GridFunction(spec.grid, np.zeros(spec.grid.m))
        assert eval_T(spec, zero) == 0.0
        assert eval_U(spec, zero) == 0.0

    def test_gaussian_against_fine_quadrature(self):
        # mu = 0, p = 2, n = 3: T(u) = (1/2) int |grad u|^2 over R^3
        grid = build_radial_grid(3, 8.0, 2000, 1.0)
        spec = ProblemSpec(
            variant="hardy-subcritical",
            p=2.0,
            n=3,
            mu=0.0,
            nonlinearity=NonlinearitySpec(1.0, 4.0),
            grid=grid,
        )
        u = gaussian(grid)
        du = lambda r: -2.0 * r * np.exp(-(r**2))
        oracle = 0.5 * 4.0 * math.pi * quad(lambda r: du(r) ** 2 * r**2, 0, 8.0)[0]
        assert eval_T(spec, u) == pytest.approx(oracle, rel=1e-4)

    def test_hardy_inequality_per_sample(self):
        # with mu at half the Hardy constant, T keeps at least half the
        # gradient energy, sample by sample
        spec = hardy_spec(mu=0.5 * hardy_constant(2.0, 5))
        dr, we = edge_geometry(spec.grid)
        for _ in range(50):
            width = RNG.uniform(0.2, 5.0)
            amp = RNG.uniform(0.1, 10.0)
            u = gaussian(spec.grid, width, amp)
            grad_energy = float(np.dot(we, (np.diff(u.values) / dr) ** 2))
            assert eval_T(spec, u) >= 0.5 * 0.5 * grad_energy - 1e-12


class TestEvalU:
    def test_critical_amplitude_homogeneity_exact(self):
        spec = critical_spec()
        u = gaussian(spec.grid, width=0.3)
        beta = 1.7
        expected = beta**spec.pstar * eval_U(spec, u)
        assert eval_U(spec, beta * u) == pytest.approx(expected, rel=1e-14)

    def test_hardy_small_amplitude_is_negative(self):
        spec = hardy_spec()
        u = gaussian(spec.grid, amp=1e-3)
        assert eval_U(spec, u) < 0.0

    def test_grid_mismatch(self):
        spec = hardy_spec(m=200)
        other = build_radial_grid(5, 30.0, 100, 1.02)
        with pytest.raises(GridMismatchError):
            eval_U(spec, gaussian(other))


class TestEvalF:
    def test_f_is_t_minus_u_exactly(self):
        spec = hardy_spec()
        for _ in range(10):
            u = gaussian(spec.grid, RNG.uniform(0.3, 3.0), RNG.uniform(0.5, 5.0))
            assert eval_F(spec, u) == eval_T(spec, u) - eval_U(spec, u)

    def test_critical_large_amplitude_diverges_below(self):
        spec = critical_spec()
        u = gaussian(spec.grid, width=0.3)
        vals = [eval_F(spec, beta * u) for beta in (1.0, 10.0, 100.0)]
        assert vals[2] < vals[1]
        assert vals[2] < -1e2


def fd_gradient_error(spec, energy, gradient, u, h, eps):
    """Central-difference defect of the weighted-pairing gradient."""
    lhs = inner(spec, gradient(spec, u), h)
    rhs = (energy(spec, u + eps * h) - energy(spec, u - eps * h)) / (2.0 * eps)
    return abs(lhs - rhs)


class TestGradients:
    def test_grad_t_zero_at_origin(self):
        spec = hardy_spec()
        zero = GridFunction(spec.grid, np.zeros(spec.grid.m))
        assert norm(spec, grad_T(spec, zero)) == 0.0

    def test_grad_t_linear_for_p2(self):
        spec = hardy_spec()
        u = gaussian(spec.grid)
        a = 3.7
        assert np.allclose(
            grad_T(spec, a * u).values, a * grad_T(spec, u).values, rtol=1e-12
        )

    @pytest.mark.parametrize(
        "make_spec", [lambda: hardy_spec(mu=1.0), lambda: hardy_spec(p=2.5, q=3.5),
                      lambda: critical_spec()],
    )
    @pytest.mark.parametrize("which", ["T", "U"])
    def test_finite_difference_second_order(self, make_spec, which):
        spec = make_spec()
        energy, gradient = (eval_T, grad_T) if which == "T" else (eval_U, grad_U)
        u = gaussian(spec.grid, 1.2, 1.5)
        h = gaussian(spec.grid, 0.8, 0.6)
        scale = 1.0 + abs(energy(spec, u))
        errs = {
            eps: fd_gradient_error(spec, energy, gradient, u, h, eps)
            for eps in (1e-3, 1e-4)
        }
        # second order: error at eps is O(eps^2), with a constant of modest size
        assert errs[1e-3] <= 50.0 * scale * 1e-6
        assert errs[1e-4] <= 50.0 * scale * 1e-8

    def test_toy_gradients(self):
        from maxminpass import ToyProblem

        spec = ProblemSpec(variant="toy", toy=ToyProblem(3, 4.0))
        u = np.array([1.0, 2.0, 2.0])
        assert np.allclose(grad_T(spec, u), 2.0 * u)
        assert np.allclose(grad_U(spec, u), 4.0 * 9.0 * u)


class TestPreconditioner:
    def test_positive_definite_on_gradients(self):
        spec = hardy_spec()
        prec = Preconditioner(spec.grid, dirichlet=False)
        for _ in range(5):
            u = gaussian(spec.grid, RNG.uniform(0.5, 2.0))
            g = grad_T(spec, u)
            assert inner(spec, g, prec.apply(g)) > 0.0

    def test_linearity(self):
        spec = critical_spec()
        prec = Preconditioner(spec.grid, dirichlet=True)
        g1 = grad_T(spec, gaussian(spec.grid, 0.4))
        g2 = grad_U(spec, gaussian(spec.grid, 0.3))
        lhs = prec.apply(g1 + 2.0 * g2)
        rhs = prec.apply(g1) + 2.0 * prec.apply(g2)
        assert np.allclose(lhs.values, rhs.values, rtol=1e-10)


class TestMuP:
    def test_matches_dense_oracle(self):
        grid = build_radial_grid(5, 1.0, 200, 1.0)
        spec = ProblemSpec(variant="critical-bounded", p=2.0, n=5, mu=3.0, grid=grid)
        est = estimate_mu_p(spec)
        dense = _mu_p_dense(grid)
        assert abs(est - dense) / dense <= 1e-6

    def test_refinement_study(self):
        # the scheme is second order: each halving of the spacing should
        # shrink the continuum error by about 4
        # first Dirichlet eigenvalue of the unit 5-ball: square of the first
        # zero of the Bessel function of order 3/2, the root of tan x = x
        exact = brentq(lambda x: math.sin(x) - x * math.cos(x), 4.0, 4.7) ** 2
        errs = []
        for m in (100, 200, 400):
            grid = build_radial_grid(5, 1.0, m, 1.0)
            spec = ProblemSpec(
                variant="critical-bounded", p=2.0, n=5, mu=3.0, grid=grid
            )
            errs.append(abs(estimate_mu_p(spec) - exact))
        assert errs[1] < errs[0] / 3.0
        assert errs[2] < errs[1] / 3.0

    def test_radius_scaling(self):
        # continuum scaling: the eigenvalue on the R-ball is R^-p times the
        # unit-ball value
        for p in (2.0, 1.8):
            vals = {}
            for R in (1.0, 2.0):
                grid = build_radial_grid(5, R, 150, 1.0)
                spec = ProblemSpec(
                    variant="critical-bounded", p=p, n=5, mu=1.0, mu_limit=np.inf,
                    grid=grid,
                )
                vals[R] = estimate_mu_p(spec)
            assert vals[2.0] == pytest.approx(vals[1.0] * 2.0**-p, rel=1e-3)


class TestProblemSpecValidation:
    def test_mu_at_hardy_constant_rejected(self):
        with pytest.raises(ValidationError):
            hardy_spec(mu=hardy_constant(2.0, 5))

    def test_mu_above_first_eigenvalue_rejected(self):
        grid = build_radial_grid(5, 1.0, 60, 1.0)
        with pytest.raises(ValidationError):
            ProblemSpec(variant="critical-bounded", p=2.0, n=5, mu=100.0, grid=grid)

    def test_p_range(self):
        with pytest.raises(ValidationError):
            hardy_spec(p=5.0)
        with pytest.raises(ValidationError):
            critical_spec(p=2.3)  # p^2 > n

    def test_unknown_variant(self):
        with pytest.raises(ValidationError):
            ProblemSpec(variant="mystery")


class TestConfigRoundtrip:
    def test_hardy_roundtrip(self):
        spec = hardy_spec(mu=1.125, m=50)
        back = problem_from_config(problem_to_config(spec))
        assert back.variant == spec.variant
        assert back.mu == spec.mu
        assert back.nonlinearity.q == spec.nonlinearity.q
        assert back.grid.same_as(spec.grid)

    def test_mu_fraction_of_limit(self):
        cfg = {
            "variant": "hardy-subcritical",
            "p": 2.0,
            "n": 5,
            "mu_fraction_of_limit": 0.5,
            "grid": {"n": 5, "R": 30.0, "m": 50, "stretch": 1.02},
        }
        spec = problem_from_config(cfg)
        assert spec.mu == pytest.approx(0.5 * hardy_constant(2.0, 5))

    def test_toy_roundtrip(self):
        from maxminpass import ToyProblem

        spec = ProblemSpec(variant="toy", toy=ToyProblem(2, 4.0))
        back = problem_from_config(problem_to_config(spec))
        assert back.toy.q == 4.0

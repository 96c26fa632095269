import math

import numpy as np
import pytest

from gkcs import model
from gkcs.model import Gauge, SpectrumMode, derive_params


@pytest.fixture
def unit():
    return derive_params(E_field=1.0)


class TestParams:
    def test_unit_reduction(self, unit):
        assert (unit.omega_c, unit.lam, unit.kappa) == (1.0, 1.0, 1.0)

    def test_no_electric_field(self):
        assert derive_params().lam == 0.0

    def test_substitution(self):
        p = derive_params(m=2.0, B=3.0, c=1.0, e_charge=1.0, hbar=1.0, E_field=5.0)
        assert np.isclose(p.omega_c, 1.5)
        assert np.isclose(p.lam, 10.0 / 3.0)
        assert np.isclose(p.kappa, 1.5)

    @pytest.mark.parametrize("name", ["m", "hbar", "e_charge", "B", "c"])
    def test_positivity(self, name):
        with pytest.raises(ValueError, match=name):
            derive_params(**{name: 0.0})

    def test_negative_field(self):
        with pytest.raises(ValueError, match="E_field"):
            derive_params(E_field=-1.0)

    def test_basis_validation(self):
        assert model.TruncatedBasis(3, 4).dim == 12
        with pytest.raises(ValueError):
            model.TruncatedBasis(1, 4)
        with pytest.raises(ValueError):
            model.TruncatedBasis(3, 0)


class TestSpectrum:
    def test_examples(self, unit):
        assert model.discrete_energy("shifted", 0, unit) == 0.0
        assert model.discrete_energy("unshifted", 0, unit) == 0.5
        assert model.discrete_energy("shifted", 7, derive_params(B=2.0)) == 14.0

    def test_shift_is_half_quantum(self):
        p = derive_params(B=1.7, hbar=0.3)
        n = np.arange(30)
        diff = model.discrete_energy("unshifted", n, p) - model.discrete_energy("shifted", n, p)
        assert np.allclose(diff, 0.5 * p.kappa, rtol=0, atol=1e-15)

    def test_negative_level(self, unit):
        with pytest.raises(ValueError):
            model.discrete_energy("shifted", -1, unit)

    def test_epsilon(self, unit):
        assert model.epsilon_of_alpha("shifted", 0.0, unit) == 0.0
        assert model.epsilon_of_alpha("shifted", -1.0, unit) == -1.0
        p = derive_params(E_field=2.0, hbar=0.5)
        assert np.isclose(model.epsilon_of_alpha("unshifted", -p.lam / (2 * p.hbar), p), 0.0, atol=1e-15)

    @pytest.mark.parametrize("mode", list(SpectrumMode))
    def test_epsilon_affine(self, mode):
        p = derive_params(m=1.3, B=0.7, E_field=0.4)
        slope = p.lam / (p.m * p.omega_c)
        e0, e1 = (model.epsilon_of_alpha(mode, a, p) for a in (-0.25, 0.75))
        assert np.isclose(e1 - e0, slope, rtol=1e-14)

    def test_alpha_bound(self, unit):
        assert model.alpha_bound("shifted", unit) == 0.0
        assert model.alpha_bound("unshifted", unit) == -0.5
        p = derive_params(m=1.0, c=1.0, B=1.0, E_field=2.0, hbar=0.5)
        assert p.lam == 2.0
        assert model.alpha_bound("unshifted", p) == -2.0
        with pytest.raises(ValueError, match="lam"):
            model.alpha_bound("unshifted", derive_params())

    @pytest.mark.parametrize("mode", list(SpectrumMode))
    def test_continuous_energy_sign_at_bound(self, mode, unit):
        bound = model.alpha_bound(mode, unit)
        assert np.isclose(model.continuous_energy(mode, bound, unit), 0.0, atol=1e-15)
        assert model.continuous_energy(mode, bound - 0.1, unit) > 0
        assert model.continuous_energy(mode, bound + 0.1, unit) < 0

    def test_tensor_energy(self, unit):
        assert model.tensor_energy(0, 0, unit) == (0.5, 0.5)
        assert model.tensor_energy(2, 5, unit) == (2.5, 5.5)
        assert model.tensor_energy(3, 1, unit) == model.tensor_energy(1, 3, unit)[::-1]
        with pytest.raises(ValueError):
            model.tensor_energy(-1, 0, unit)


class TestOperators:
    def test_ladder_n2(self):
        b = model.ladder_matrix("b_prime", 2)
        assert np.array_equal(b, np.array([[0, 1], [0, 0]], dtype=complex))

    def test_number_operator(self):
        N = 12
        b = model.ladder_matrix("b_prime", N)
        bd = model.ladder_matrix("b_prime_dag", N)
        assert np.allclose(np.diag(bd @ b).real, np.arange(N), rtol=0, atol=1e-13)

    def test_adjoint(self, unit):
        b = model.ladder_matrix("b", 6, derive_params(m=2.0, B=1.5))
        bd = model.ladder_matrix("b_dag", 6, derive_params(m=2.0, B=1.5))
        assert np.array_equal(bd, b.conj().T)

    @pytest.mark.parametrize("N", [3, 5, 20, 40])
    def test_truncation_law(self, N):
        b = model.ladder_matrix("b_prime", N, dtype=np.clongdouble)
        bd = model.ladder_matrix("b_prime_dag", N, dtype=np.clongdouble)
        comm = (b @ bd - bd @ b).astype(complex)
        assert np.array_equal(comm[:N - 1, :N - 1], np.eye(N - 1))
        assert comm[N - 1, N - 1] == 1 - N

    def test_scaled_commutator(self):
        p = derive_params(m=2.0, B=3.0)
        N = 10
        b = model.ladder_matrix("b", N, p)
        bd = model.ladder_matrix("b_dag", N, p)
        block = model.commutator(b, bd)[:N - 1, :N - 1]
        assert np.allclose(block, 2 * p.m * p.hbar * p.omega_c * np.eye(N - 1), rtol=0, atol=1e-13)

    def test_ladder_errors(self):
        with pytest.raises(ValueError):
            model.ladder_matrix("a", 4)
        with pytest.raises(ValueError):
            model.ladder_matrix("b_prime", 1)
        with pytest.raises(ValueError):
            model.ladder_matrix("b", 4)

    def test_matrices_read_only(self):
        b = model.ladder_matrix("b_prime", 4)
        with pytest.raises(ValueError):
            b[0, 1] = 2.0

    def test_hamiltonian_forms(self, unit):
        p = derive_params(m=1.4, B=0.8, hbar=1.1)
        N = 9
        h = model.osc_hamiltonian_matrix(N, p)
        assert np.allclose(np.diag(model.osc_hamiltonian_matrix(3, unit)), [0.5, 1.5, 2.5])
        ladder = model.osc_hamiltonian_from_ladders(N, p)
        assert np.allclose(ladder[:N - 1, :N - 1], h[:N - 1, :N - 1], rtol=0, atol=1e-13)
        assert not np.isclose(ladder[N - 1, N - 1], h[N - 1, N - 1])
        quad = model.osc_hamiltonian_from_quadratures(N, p)
        assert np.allclose(quad[:N - 2, :N - 2], h[:N - 2, :N - 2], rtol=0, atol=1e-13)

    def test_canonical_quadratures(self):
        p = derive_params(m=0.6, B=2.2)
        N = 15
        q, pm = model.quadrature_matrices(N, p)
        comm = model.commutator(q, pm)
        assert np.allclose(comm[:N - 1, :N - 1], 1j * np.eye(N - 1), rtol=0, atol=1e-13)
        assert np.allclose(q, q.conj().T) and np.allclose(pm, pm.conj().T)

    def test_tensor_operators_commute(self, unit):
        dims = (6, 4)
        h1 = model.tensor_operator(model.osc_hamiltonian_matrix(6, unit), 0, dims)
        h2 = model.tensor_operator(model.osc_hamiltonian_matrix(4, unit), 1, dims)
        assert h1.shape == (24, 24)
        assert model.commutator(h1, h2).count_nonzero() == 0
        # |n, l> sits at n * L + l
        assert h1.diagonal()[2 * 4 + 3] == 2.5
        assert h2.diagonal()[2 * 4 + 3] == 3.5
        with pytest.raises(ValueError):
            model.tensor_operator(np.eye(6), 2, dims)


class TestPlaneWave:
    def test_origin(self, unit):
        for gauge in Gauge:
            assert model.phi_alpha(gauge, 0.8, 0.0, 0.0, unit) == 1.0

    def test_unit_modulus(self, unit):
        x, y = np.meshgrid(np.linspace(-3, 3, 7), np.linspace(-2, 2, 5))
        phi = model.phi_alpha("gauge1", -1.3, x, y, unit)
        assert np.allclose(np.abs(phi), 1.0, rtol=0, atol=1e-15)

    def test_substitution(self):
        p = derive_params(B=2.0)  # m omega_c / (2 hbar) = 1
        got = model.phi_alpha("gauge1", 1.0, math.pi, 0.0, p)
        assert np.isclose(got, -1.0)

    def test_gauge_swap(self, unit):
        x, y = np.meshgrid(np.linspace(-1, 1, 5), np.linspace(-2, 0.5, 4))
        g1 = model.phi_alpha("gauge1", 0.7, x, y, unit)
        g2 = model.phi_alpha("gauge2", 0.7, y, x, unit)
        # the x y term is symmetric, only the linear term trades x for y
        assert np.allclose(g1, g2, rtol=0, atol=1e-15)

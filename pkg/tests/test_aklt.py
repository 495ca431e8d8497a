import numpy as np
import pytest
from numpy.testing import assert_allclose

from aklt_hqmm.core.channels import superop_trace
from aklt_hqmm.core.linalg import DimensionError, PAULI_X, PAULI_Y, PAULI_Z, commutator, identity, kron
from aklt_hqmm.models.aklt import (
    ObservableSpec,
    SiteRangeError,
    aklt_hamiltonian,
    aklt_tensors,
    bond_list,
    build_mps_state,
    chain_products,
    exact_oracle,
    finite_expectation,
    ground_state_energy,
    hat_map,
    hat_map_composed,
    normalized_expectation,
    spin_axis,
    transfer_channel,
)


class TestTensors:
    def test_gauge_relations(self):
        assert aklt_tensors().gauge_deviation() < 1e-14

    def test_transfer_fixed_points(self):
        phi = transfer_channel()
        assert_allclose(phi.apply(identity(2)), identity(2), atol=1e-14)
        for sigma in (PAULI_X, PAULI_Y, PAULI_Z):
            assert_allclose(phi.apply(sigma), -sigma / 3, atol=1e-12)

    def test_tensors_are_read_only(self):
        with pytest.raises(ValueError):
            aklt_tensors().a_plus[0, 1] = 0.0

    def test_chain_products_order(self):
        a = aklt_tensors().as_list()
        products = chain_products(2)
        assert products.shape == (9, 2, 2)
        # multi-index (k1, k2) = (+, −) -> 0·3 + 2
        assert_allclose(products[2], a[0] @ a[2])


class TestSpinOperators:
    def test_commutation(self, spins):
        assert_allclose(commutator(spins.sx, spins.sy), 1j * spins.sz, atol=1e-14)
        assert_allclose(commutator(spins.sy, spins.sz), 1j * spins.sx, atol=1e-14)
        assert_allclose(commutator(spins.sz, spins.sx), 1j * spins.sy, atol=1e-14)

    def test_casimir(self, spins):
        casimir = spins.sx @ spins.sx + spins.sy @ spins.sy + spins.sz @ spins.sz
        assert_allclose(casimir, 2 * identity(3), atol=1e-14)

    def test_unknown_axis(self):
        with pytest.raises(ValueError, match="Unknown spin axis"):
            spin_axis("w")


class TestObservableSpec:
    def test_requires_one_representation(self):
        with pytest.raises(DimensionError, match="exactly one"):
            ObservableSpec(n_sites=1)

    def test_factor_shape(self):
        with pytest.raises(DimensionError, match="3x3"):
            ObservableSpec.from_factors([identity(2)])

    def test_factor_count(self):
        with pytest.raises(DimensionError, match="declares 3 sites"):
            ObservableSpec(n_sites=3, factors=(identity(3), identity(3)))

    def test_full_shape(self):
        with pytest.raises(DimensionError, match="9x9"):
            ObservableSpec(n_sites=2, full=identity(3))

    def test_tensor_keeps_factors(self, spins):
        y = ObservableSpec.from_factors([spins.sz]).tensor(ObservableSpec.from_factors([spins.sx]))
        assert y.is_factored and y.n_sites == 2
        assert_allclose(y.to_full(), kron(spins.sz, spins.sx))

    def test_dict_round_trip(self, rng):
        y = ObservableSpec.random(rng, 2)
        restored = ObservableSpec.from_dict(y.to_dict())
        assert_allclose(restored.to_full(), y.to_full())

    def test_from_full_infers_sites(self):
        assert ObservableSpec.from_full(identity(27)).n_sites == 3


class TestMpsState:
    def test_two_site_amplitudes(self):
        state = build_mps_state(2)
        assert state.amplitude([0, 2]) == pytest.approx(-2 / 3)
        assert state.amplitude([1, 1]) == pytest.approx(2 / 3)
        assert state.amplitude([0, 0]) == pytest.approx(0.0)
        assert state.squared_norm() == pytest.approx(4 / 3)

    @pytest.mark.parametrize("n", [0, 11])
    def test_site_range(self, n):
        with pytest.raises(SiteRangeError, match="build_mps_state"):
            build_mps_state(n)

    def test_factored_apply_matches_full(self, rng):
        y = ObservableSpec.random(rng, 3)
        state = build_mps_state(3)
        assert_allclose(state.apply_observable(y), y.to_full() @ state.amplitudes, atol=1e-12)


class TestHatMap:
    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_trace_equals_state_vector_oracle(self, rng, n):
        for trial in range(10):
            y = ObservableSpec.random(rng, n, hermitian=trial % 2 == 0, factored=False)
            assert_allclose(superop_trace(hat_map(y)), exact_oracle(y), atol=1e-9)

    def test_factored_and_full_paths_agree(self, rng):
        y = ObservableSpec.random(rng, 3)
        full = ObservableSpec.from_full(y.to_full())
        assert_allclose(hat_map(y).matrix, hat_map(full).matrix, atol=1e-12)
        assert_allclose(hat_map_composed(y.factors).matrix, hat_map(y).matrix, atol=1e-12)

    @pytest.mark.parametrize("n,m", [(1, 1), (1, 2), (2, 1), (2, 2)])
    def test_block_composition(self, rng, n, m):
        y = ObservableSpec.random(rng, n, factored=False)
        z = ObservableSpec.random(rng, m, factored=False)
        assert_allclose(hat_map(y.tensor(z)).matrix, hat_map(z).compose(hat_map(y)).matrix, atol=1e-10)

    def test_identity_is_transfer_power(self):
        phi = transfer_channel().to_superoperator()
        assert_allclose(hat_map(ObservableSpec.identity(3)).matrix, phi.power(3).matrix, atol=1e-14)

    def test_site_range(self):
        with pytest.raises(SiteRangeError, match="hat_map"):
            hat_map(ObservableSpec.identity(9))


class TestFiniteExpectation:
    def test_identity_two_sites(self):
        assert_allclose(finite_expectation(ObservableSpec.identity(2)), 4 / 3, atol=1e-14)

    def test_szsz_two_sites(self, spins):
        y = ObservableSpec.from_factors([spins.sz, spins.sz])
        assert_allclose(exact_oracle(y), -8 / 9, atol=1e-12)
        assert_allclose(finite_expectation(y), -8 / 9, atol=1e-12)
        assert_allclose(normalized_expectation(y), -2 / 3, atol=1e-12)

    def test_single_spin_vanishes(self, spins):
        y = ObservableSpec.from_factors([spins.sz, identity(3)])
        assert_allclose(finite_expectation(y), 0.0, atol=1e-14)


class TestHamiltonian:
    def test_hermitian(self):
        h = aklt_hamiltonian(3, periodic=True)
        assert_allclose(h, h.conj().T, atol=1e-14)

    def test_periodic_two_sites_doubles_bond(self):
        assert bond_list(2, periodic=True) == [(0, 1), (1, 0)]
        assert_allclose(aklt_hamiltonian(2, True), 2 * aklt_hamiltonian(2, False), atol=1e-13)

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_mps_is_periodic_ground_state(self, n):
        psi = build_mps_state(n).amplitudes
        energy = ground_state_energy(n, periodic=True)
        assert energy == pytest.approx(-2 * n / 3, abs=1e-9)
        residual = aklt_hamiltonian(n, periodic=True) @ psi - energy * psi
        assert np.linalg.norm(residual) / np.linalg.norm(psi) < 1e-9

    def test_open_chain_energy(self):
        assert ground_state_energy(4, periodic=False) == pytest.approx(-2.0, abs=1e-9)

    def test_sparse_path(self):
        assert ground_state_energy(7, periodic=True) == pytest.approx(-14 / 3, abs=1e-8)

    def test_site_range(self):
        with pytest.raises(SiteRangeError, match="aklt_hamiltonian"):
            aklt_hamiltonian(1, periodic=False)

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from aklt_hqmm.core.linalg import DimensionError, dagger, identity
from aklt_hqmm.models.aklt import ObservableSpec, SiteRangeError, finite_expectation, transfer_channel
from aklt_hqmm.models.fcs import (
    FcsTriple,
    ReferenceFunctional,
    SweepSchedule,
    convergence_sweep,
    correlation_length,
    correlator,
    e_y_map,
    embedded_expectation,
    fit_padding_rate,
    omega_closed_form,
    omega_fcs_form,
    omega_hat_form,
    omega_local,
)


class TestOmega:
    @pytest.mark.parametrize("n", range(1, 7))
    def test_normalization(self, n):
        assert_allclose(omega_local(ObservableSpec.identity(n)), 1.0, atol=1e-12)

    def test_szsz(self, spins):
        y = ObservableSpec.from_factors([spins.sz, spins.sz])
        assert_allclose(omega_local(y), -4 / 9, atol=1e-12)

    def test_single_site_spin_vanishes(self, spins):
        assert_allclose(omega_local(ObservableSpec.from_factors([spins.sx])), 0.0, atol=1e-14)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_paths_agree(self, rng, n):
        for trial in range(10):
            y = ObservableSpec.random(rng, n, hermitian=trial % 2 == 0)
            expected = omega_local(y)
            assert_allclose(omega_fcs_form(y.factors), expected, atol=1e-9)
            assert_allclose(omega_hat_form(y), expected, atol=1e-9)
            assert_allclose(omega_local(ObservableSpec.from_full(y.to_full())), expected, atol=1e-9)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_closed_form_matches_recursion(self, rng, n):
        for trial in range(5):
            y = ObservableSpec.random(rng, n, hermitian=trial % 2 == 0)
            assert_allclose(omega_closed_form(y), omega_local(y), atol=1e-9)

    def test_translation_invariance(self, rng):
        for n in (1, 2, 3):
            y = ObservableSpec.random(rng, n)
            expected = omega_local(y)
            right = ObservableSpec.from_factors([*y.factors, identity(3)])
            left = ObservableSpec.from_factors([identity(3), *y.factors])
            assert_allclose(omega_local(right), expected, atol=1e-10)
            assert_allclose(omega_local(left), expected, atol=1e-10)

    def test_positivity(self, rng):
        for n in (1, 2, 3):
            y = ObservableSpec.random(rng, n, factored=False).to_full()
            value = omega_local(ObservableSpec.from_full(dagger(y) @ y))
            assert abs(value.imag) < 1e-9
            assert value.real >= -1e-10

    def test_site_range(self):
        with pytest.raises(SiteRangeError, match="omega_fcs_form"):
            omega_fcs_form([identity(3)] * 13)
        with pytest.raises(SiteRangeError, match="omega_closed_form"):
            omega_closed_form(ObservableSpec.identity(9))


class TestFcsTriple:
    def test_unit_preserved(self):
        assert FcsTriple.aklt().unit_deviation() < 1e-14

    def test_trace_reference_is_twice_normalized(self, spins):
        factors = [spins.sz, spins.sz]
        raw = FcsTriple.aklt(ReferenceFunctional.TRACE).evaluate(factors)
        assert_allclose(raw, 2 * omega_fcs_form(factors), atol=1e-12)

    def test_expectation_map_matches_superoperator(self, rng, spins):
        x = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        triple = FcsTriple.aklt()
        assert_allclose(e_y_map(spins.sz).apply(x), triple.expectation_map(spins.sz, x), atol=1e-12)

    def test_identity_map_is_dual_transfer(self):
        dual = transfer_channel().dual().to_superoperator().matrix
        assert_allclose(e_y_map(identity(3)).matrix, dual, atol=1e-12)

    def test_bad_transition_shape(self):
        with pytest.raises(DimensionError):
            FcsTriple(2, np.zeros((3, 2, 3)))


class TestEmbedded:
    def test_no_padding_is_finite_chain(self, rng):
        y = ObservableSpec.random(rng, 2, factored=False)
        assert_allclose(embedded_expectation(y, 0, 0), finite_expectation(y), atol=1e-12)

    def test_identity_limit(self):
        assert_allclose(embedded_expectation(ObservableSpec.identity(2), 50, 50), 1.0, atol=1e-10)

    def test_szsz_limit(self, spins):
        y = ObservableSpec.from_factors([spins.sz, spins.sz])
        assert_allclose(embedded_expectation(y, 50, 50), -4 / 9, atol=1e-10)

    def test_padding_range(self):
        with pytest.raises(SiteRangeError, match="padding m"):
            embedded_expectation(ObservableSpec.identity(1), 201, 0)


class TestConvergenceSweep:
    def test_symmetric_rate(self, rng):
        y = ObservableSpec.random(rng, 2, factored=False)
        sweep = convergence_sweep(y, 30, 30)
        assert len(sweep.points) == 31
        assert sweep.rate == pytest.approx(1 / 3, abs=0.02)
        error_at_25 = next(pt.abs_error for pt in sweep.points if pt.m == 25)
        assert error_at_25 < 1e-10

    def test_grid_schedule(self, spins):
        y = ObservableSpec.from_factors([spins.sz, spins.sz])
        sweep = convergence_sweep(y, 3, 2, SweepSchedule.GRID)
        assert [(pt.m, pt.p) for pt in sweep.points][:4] == [(0, 0), (0, 1), (0, 2), (1, 0)]
        assert len(sweep.points) == 12
        assert len(sweep.rows()[0]) == 5

    def test_bound_range(self):
        with pytest.raises(SiteRangeError):
            convergence_sweep(ObservableSpec.identity(1), -1, 3)

    def test_rate_needs_two_points(self):
        assert fit_padding_rate([]) == 0.0


class TestCorrelator:
    def test_nearest_neighbour(self):
        assert correlator("z", 1) == pytest.approx(-4 / 9, abs=1e-10)

    def test_geometric_decay(self):
        values = [correlator("z", r) for r in range(1, 12)]
        for r in range(10):
            assert values[r + 1] / values[r] == pytest.approx(-1 / 3, abs=1e-9)

    @pytest.mark.parametrize("axis", ["x", "y"])
    def test_rotation_symmetry(self, axis):
        for r in range(1, 6):
            assert correlator(axis, r) == pytest.approx(correlator("z", r), abs=1e-10)

    def test_distance_range(self):
        with pytest.raises(SiteRangeError, match="correlator"):
            correlator("z", 0)

    def test_correlation_length(self):
        assert correlation_length() == pytest.approx(1 / math.log(3), abs=1e-12)

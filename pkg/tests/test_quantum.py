"""
量子单元测试
"""
import random

import numpy as np
import pytest

from app.models.couplings import CouplingAssignment, SpinConfiguration
from app.models.quantum import Anisotropy
from app.schemas.report import EXACT
from app.services.bounds_service import BoundsService
from app.services.classical_cell_service import ClassicalCellService
from app.services.quantum_cell_service import QuantumCellService, _lowest_eigenpair, bond_operators
from app.utils.response import ConfigException

XZ = Anisotropy.xz(1.0)


def ground(geometry, J, anisotropy, full=False):
    return QuantumCellService.ground_energy(QuantumCellService.build_hamiltonian(geometry, J, anisotropy), full)


class TestHamiltonian:
    def test_dimer_heisenberg_spectrum(self, dimer):
        spectrum = ground(dimer, CouplingAssignment.from_values([1]), Anisotropy.heisenberg(), full=True)
        assert np.allclose(spectrum.eigenvalues, [-3, 1, 1, 1], atol=1e-12)
        assert spectrum.ground_energy == pytest.approx(-3, abs=1e-12)

    def test_classical_limit_is_diagonal_cell_energy(self, square):
        J = CouplingAssignment.from_values([1, -1, 1, 1])
        H = QuantumCellService.build_hamiltonian(square, J, Anisotropy.classical())
        assert np.count_nonzero(H.matrix - np.diag(np.diag(H.matrix))) == 0
        for mask in range(16):
            expected = ClassicalCellService.cell_energy(square, J, SpinConfiguration(mask, 4))
            assert H.matrix[mask, mask] == float(expected)

    def test_hermitian_and_traceless(self, square, cube):
        for geometry in (square, cube):
            J = CouplingAssignment.from_values([1] * geometry.n_bonds)
            H = QuantumCellService.build_hamiltonian(geometry, J, Anisotropy.heisenberg())
            assert H.dimension == 2 ** geometry.n_sites
            assert np.array_equal(H.matrix, H.matrix.T)
            assert np.trace(H.matrix) == 0
            assert H.is_real

    def test_size_mismatch(self, square):
        with pytest.raises(ConfigException):
            QuantumCellService.build_hamiltonian(square, CouplingAssignment.from_values([1, 1]), XZ)

    def test_non_finite_anisotropy(self):
        with pytest.raises(ConfigException):
            Anisotropy(float("nan"), 0.0, 1.0)


class TestGroundEnergy:
    def test_heisenberg_plaquette(self, square):
        spectrum = ground(square, CouplingAssignment.from_values([1, 1, 1, 1]), Anisotropy.heisenberg())
        assert spectrum.ground_energy == pytest.approx(-8, abs=1e-9)

    def test_classical_limit_square_is_exact(self, square):
        for mask in range(16):
            J = CouplingAssignment.from_mask(mask, 4)
            expected, _ = ClassicalCellService.cell_ground_state(square, J)
            assert ground(square, J, Anisotropy.classical()).ground_energy == float(expected)

    def test_classical_limit_cube(self, cube):
        rng = random.Random(20)
        for _ in range(20):
            J = CouplingAssignment.from_mask(rng.randrange(4096), 12)
            expected, _ = ClassicalCellService.cell_ground_state(cube, J)
            assert ground(cube, J, Anisotropy.classical()).ground_energy == float(expected)

    def test_dense_solver_matches_enumeration_in_classical_limit(self, square):
        operators = bond_operators(square, Anisotropy.classical())
        energies = []
        for mask in range(16):
            J = CouplingAssignment.from_mask(mask, 4)
            matrix = np.tensordot([float(v) for v in J.values], operators, axes=1)
            energy, residual = _lowest_eigenpair(matrix)
            assert energy == pytest.approx(float(ClassicalCellService.cell_ground_state(square, J)[0]), abs=1e-10)
            assert residual < 1e-10
            energies.append(energy)
        assert sum(energies) / 16 == pytest.approx(-3.0, abs=1e-10)

    def test_full_spectrum_is_ascending(self, square):
        spectrum = ground(square, CouplingAssignment.from_mask(0b0110, 4), XZ, full=True)
        assert list(spectrum.eigenvalues) == sorted(spectrum.eigenvalues)
        assert spectrum.ground_energy == pytest.approx(spectrum.eigenvalues[0], abs=1e-12)

    def test_quantum_ground_energy_not_above_classical(self, square):
        for mask in range(16):
            J = CouplingAssignment.from_mask(mask, 4)
            classical, _ = ClassicalCellService.cell_ground_state(square, J)
            assert ground(square, J, XZ).ground_energy <= float(classical) + 1e-9


class TestAverages:
    def test_square_classical_limit(self, square, bernoulli):
        average = QuantumCellService.quantum_cell_average(square, bernoulli, Anisotropy.classical())
        assert average == pytest.approx(-3, abs=1e-9)

    def test_cube_classical_limit(self, cube, bernoulli):
        average = QuantumCellService.quantum_cell_average(cube, bernoulli, Anisotropy.classical())
        assert average == pytest.approx(-8.8125, abs=1e-9)

    def test_point_mass_is_single_hamiltonian(self, square):
        dist = BoundsService.point_mass(1, allow_noncentered=True)
        expected = ground(square, CouplingAssignment.from_values([1, 1, 1, 1]), XZ).ground_energy
        assert QuantumCellService.quantum_cell_average(square, dist, XZ) == pytest.approx(expected, abs=1e-9)

    def test_thread_independent(self, square, bernoulli):
        first = QuantumCellService.quantum_cell_average(square, bernoulli, XZ, threads=1)
        second = QuantumCellService.quantum_cell_average(square, bernoulli, XZ, threads=4)
        assert first == second

    def test_sampled_distribution_rejected(self, square):
        with pytest.raises(ConfigException):
            QuantumCellService.quantum_cell_average(square, BoundsService.sampled("normal"), XZ)

    @pytest.mark.slow
    def test_cube_xz_average_below_classical(self, cube, bernoulli):
        average = QuantumCellService.quantum_cell_average(cube, bernoulli, XZ)
        assert average <= -8.8125 + 1e-9


class TestSweep:
    def test_square_endpoint(self, square, bernoulli):
        rows = QuantumCellService.anisotropy_sweep(square, bernoulli, [0])
        assert len(rows) == 1
        assert rows[0].lower_bound == pytest.approx(-1.5, abs=1e-9)
        assert rows[0].method == EXACT
        assert rows[0].stderr is None

    def test_cube_endpoint(self, cube, bernoulli):
        rows = QuantumCellService.anisotropy_sweep(cube, bernoulli, [0])
        assert rows[0].lower_bound == pytest.approx(-2.203125, abs=1e-9)

    def test_three_point_grid(self, square, bernoulli):
        rows = QuantumCellService.anisotropy_sweep(square, bernoulli, [0, 0.5, 1])
        assert [r.alpha_x for r in rows] == [0.0, 0.5, 1.0]
        assert all(np.isfinite(r.lower_bound) for r in rows)

    def test_grid_must_contain_zero(self, square, bernoulli):
        with pytest.raises(ConfigException):
            QuantumCellService.anisotropy_sweep(square, bernoulli, [0.5, 1])

    def test_grid_must_be_finite(self, square, bernoulli):
        with pytest.raises(ConfigException):
            QuantumCellService.anisotropy_sweep(square, bernoulli, [0, float("inf")])

    def test_sampled_distribution_sweep(self, square):
        rows = QuantumCellService.anisotropy_sweep(square, BoundsService.sampled("normal", seed=2), [0], samples=2_000)
        assert rows[0].stderr is not None and rows[0].stderr > 0


class TestGaugeAndInequality:
    def test_xz_gauge_invariance(self, square):
        rng = random.Random(5)
        for _ in range(20):
            J = CouplingAssignment.from_mask(rng.randrange(16), 4)
            result = QuantumCellService.xz_gauge_check(square, J, rng.randrange(4), XZ)
            assert result["passed"]
            assert result["energy"] == pytest.approx(result["gauged_energy"], abs=1e-9)

    def test_classical_limit_gauge(self, square):
        result = QuantumCellService.xz_gauge_check(square, CouplingAssignment.from_mask(3, 4), 2, Anisotropy.classical())
        assert result["passed"]

    def test_heisenberg_not_covered(self, square):
        with pytest.raises(ConfigException):
            QuantumCellService.xz_gauge_check(square, CouplingAssignment.from_mask(0, 4), 0, Anisotropy.heisenberg())

    def test_lattice_inequality_on_periodic_3x3(self, bernoulli):
        result = QuantumCellService.verify_lattice_inequality(bernoulli, XZ, side=3, samples=20, seed=4)
        assert result["holds"] == 20
        assert result["min_gap"] >= -1e-9

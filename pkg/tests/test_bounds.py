"""
下界组装、耦合分布与单元平均测试
"""
import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate, special

from app.models.couplings import CouplingAssignment
from app.schemas.report import EXACT, MONTE_CARLO
from app.services.bounds_service import BoundsService
from app.services.classical_cell_service import ClassicalCellService, bond_products, sign_patterns
from app.utils.response import AssumptionException, ConfigException, GuardException
from config import config


def brute_force_average(geometry, dist, flip_bond=None) -> Fraction:
    """逐一枚举耦合构型的纯分数参照实现；flip_bond 给出时每个构型都把该键反号"""
    total = Fraction(0)
    for atoms in itertools.product(dist.atoms, repeat=geometry.n_bonds):
        weight = math.prod(a.probability for a in atoms)
        values = [a.value for a in atoms]
        if flip_bond is not None:
            values[flip_bond] = -values[flip_bond]
        J = CouplingAssignment.from_values(values)
        total += weight * ClassicalCellService.cell_ground_state_exhaustive(geometry, J)[0]
    return total


def square_normal_grid_average(square, points: int = 48, cutoff: float = 6.0) -> float:
    """
    标准正态耦合下正方形单元基态能量平均的稠密网格积分

    四个 |J| 取中点网格；符号只通过阻挫奇偶影响基态能量，奇偶两类各占一半。
    """
    nodes = (np.arange(points) + 0.5) * (cutoff / points)
    weights = np.exp(-nodes ** 2 / 2)
    weights /= weights.sum()
    rest = np.stack(np.meshgrid(nodes, nodes, nodes, indexing="ij"), axis=-1).reshape(-1, 3)
    rest_weights = np.einsum("i,j,k->ijk", weights, weights, weights).reshape(-1)
    products = bond_products(square).T.astype(np.float64)
    odd = np.array([-1.0, 1.0, 1.0, 1.0])
    total = 0.0
    for node, weight in zip(nodes, weights):
        magnitudes = np.column_stack([np.full(len(rest), node), rest])
        even_energy = (magnitudes @ products).min(axis=1)
        odd_energy = ((magnitudes * odd) @ products).min(axis=1)
        total += weight * float(np.dot(rest_weights, (even_energy + odd_energy) / 2))
    return total


class TestDistributions:
    def test_bernoulli(self):
        dist = BoundsService.bernoulli(2)
        assert dist.mean() == 0
        assert dist.mean_abs() == 2
        assert dist.is_bernoulli(Fraction(2))
        assert not dist.is_bernoulli()

    def test_bernoulli_requires_positive_j(self):
        with pytest.raises(ConfigException):
            BoundsService.bernoulli(0)

    def test_probabilities_must_sum_to_one(self):
        with pytest.raises(ConfigException):
            BoundsService.discrete([(1, "1/2"), (-1, "1/3")])

    def test_probabilities_must_be_positive(self):
        with pytest.raises(ConfigException):
            BoundsService.discrete([(1, 1), (-1, 0)])

    def test_duplicate_values_rejected(self):
        with pytest.raises(ConfigException):
            BoundsService.discrete([(1, "1/2"), (1, "1/2")])

    def test_floats_rejected(self):
        with pytest.raises(ConfigException):
            BoundsService.discrete([(0.5, "1/2"), (-0.5, "1/2")])

    def test_noncentered_is_an_error_by_default(self):
        with pytest.raises(AssumptionException):
            BoundsService.discrete([(1, "3/4"), (-1, "1/4")])

    def test_noncentered_override(self):
        dist = BoundsService.discrete([(1, "3/4"), (-1, "1/4")], allow_noncentered=True)
        assert not dist.centered
        assert dist.mean() == Fraction(1, 2)

    def test_parse_distribution_text(self):
        dist = BoundsService.parse_distribution_text("# symmetric\n-1 1/4\n\n0 1/2  # zero\n1 1/4\n")
        assert [a.value for a in dist.atoms] == [-1, 0, 1]
        assert dist.integer_weights() == (1, 2, 1)
        assert dist.probability_denominator() == 4

    def test_parse_distribution_text_rejects_bad_rows(self):
        with pytest.raises(ConfigException):
            BoundsService.parse_distribution_text("1 1/2 extra\n")

    def test_parse_spec(self, point_table):
        assert BoundsService.parse_distribution_spec("bernoulli").is_bernoulli()
        assert BoundsService.parse_distribution_spec("bernoulli:2").is_bernoulli(Fraction(2))
        assert BoundsService.parse_distribution_spec("normal:2").sampler.param("sigma") == 2.0
        assert BoundsService.parse_distribution_spec("uniform").sampler.param("half_width") == 1.0
        dist = BoundsService.parse_distribution_spec(f"file:{point_table}", allow_noncentered=True)
        assert dist.atoms[0].value == 1

    def test_parse_spec_unknown(self):
        with pytest.raises(ConfigException):
            BoundsService.parse_distribution_spec("cauchy")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigException):
            BoundsService.parse_distribution_spec(f"file:{tmp_path / 'absent.txt'}")


class TestExactAverage:
    def test_square_average(self, square, bernoulli):
        detail = BoundsService.exact_cell_average_detail(square, bernoulli)
        assert detail.average == -3
        assert detail.weighted_sum == -48
        assert detail.denominator == 16

    def test_cube_average(self, cube, bernoulli):
        detail = BoundsService.exact_cell_average_detail(cube, bernoulli)
        assert detail.weighted_sum == -36096
        assert detail.denominator == 4096
        assert detail.average == Fraction(-141, 16)
        assert float(detail.average) == -8.8125

    @pytest.mark.parametrize("J", ["1/2", 2, 3])
    def test_scaling_with_j(self, square, cube, J):
        scale = Fraction(J)
        assert BoundsService.exact_cell_average(square, BoundsService.bernoulli(J)) == -3 * scale
        assert BoundsService.exact_cell_average(cube, BoundsService.bernoulli(J)) == Fraction(-141, 16) * scale

    @pytest.mark.parametrize("bond", range(12))
    def test_flipping_one_bond_keeps_cube_average(self, cube, bernoulli, bond):
        patterns = np.array(sign_patterns(12))
        patterns[:, bond] *= -1
        total = int(ClassicalCellService.batch_ground_energies(cube, patterns).sum())
        assert Fraction(total, 4096) == BoundsService.exact_cell_average(cube, bernoulli)

    @pytest.mark.parametrize("bond", range(4))
    def test_flipping_one_bond_keeps_three_atom_average(self, square, bond):
        dist = BoundsService.discrete([(-1, "1/4"), (0, "1/2"), (1, "1/4")])
        assert brute_force_average(square, dist, flip_bond=bond) == BoundsService.exact_cell_average(square, dist)

    def test_three_atom_distribution_matches_brute_force(self, square):
        dist = BoundsService.discrete([(-1, "1/4"), (0, "1/2"), (1, "1/4")])
        assert BoundsService.exact_cell_average(square, dist) == brute_force_average(square, dist)

    def test_rational_values_match_brute_force(self, square):
        dist = BoundsService.discrete([("-1/2", "1/3"), ("1/4", "2/3")], allow_noncentered=True)
        assert BoundsService.exact_cell_average(square, dist) == brute_force_average(square, dist)

    def test_independent_of_thread_count(self, cube, bernoulli):
        assert BoundsService.exact_cell_average(cube, bernoulli, threads=1) == BoundsService.exact_cell_average(
            cube, bernoulli, threads=4
        )

    def test_guard(self, cube, bernoulli, monkeypatch):
        monkeypatch.setattr(config, "ENUMERATION_GUARD", 100)
        with pytest.raises(GuardException):
            BoundsService.exact_cell_average(cube, bernoulli)

    def test_sampled_distribution_rejected(self, square):
        with pytest.raises(ConfigException):
            BoundsService.exact_cell_average(square, BoundsService.sampled("normal", sigma=1.0))


class TestLowerBound:
    def test_square_bound(self, square, bernoulli):
        report = BoundsService.lower_bound(square, bernoulli)
        assert report.method == EXACT
        assert report.exact_lower_bound() == Fraction(-3, 2)
        assert report.decimal == "-1.5"
        assert report.enumeration_form == "-24/16"
        assert report.misfit_bound.to_fraction() == Fraction(1, 4)
        assert report.below_upper_bounds is True
        assert report.mc_stderr is None

    def test_cube_bound(self, cube, bernoulli):
        report = BoundsService.lower_bound(cube, bernoulli)
        assert report.exact_lower_bound() == Fraction(-141, 64)
        assert report.exact_lower_bound() == Fraction(-9024, 4096)
        assert report.decimal == "-2.203125"
        assert report.enumeration_form == "-9024/4096"
        assert report.misfit_bound.to_fraction() == Fraction(17, 64)
        assert report.below_upper_bounds is True
        assert any("-2.204" in note for note in report.notes)

    def test_lower_bound_is_multiplicity_times_average(self, cube, bernoulli):
        report = BoundsService.lower_bound(cube, bernoulli)
        assert report.exact_lower_bound() == cube.multiplicity_factor * report.e0_cell_avg.to_fraction()

    def test_cube_bound_below_square_bound(self, square, cube, bernoulli):
        assert BoundsService.lower_bound(cube, bernoulli).exact_lower_bound() <= BoundsService.lower_bound(
            square, bernoulli
        ).exact_lower_bound()

    def test_point_mass(self, square):
        report = BoundsService.lower_bound(square, BoundsService.point_mass(1, allow_noncentered=True))
        assert report.exact_lower_bound() == -2
        assert not report.distribution.centered
        assert report.enumeration_form is None
        assert report.notes

    def test_precision(self, cube, bernoulli):
        assert BoundsService.lower_bound(cube, bernoulli, precision=2).decimal == "-2.2"

    def test_comparison_table(self):
        roles = {c.role for c in BoundsService.comparison_table(3)}
        assert roles == {"upper", "lower", "heuristic-lower", "estimate"}
        with pytest.raises(ConfigException):
            BoundsService.comparison_table(4)


class TestMisfit:
    def test_values(self):
        assert BoundsService.misfit_lower_bound(Fraction(-3, 2), -2) == Fraction(1, 4)
        assert BoundsService.misfit_lower_bound(Fraction(-141, 64), -3) == Fraction(17, 64)

    def test_zero_reference_energy(self):
        with pytest.raises(ConfigException):
            BoundsService.misfit_lower_bound(Fraction(-3, 2), 0)

    def test_positive_reference_energy(self):
        with pytest.raises(ConfigException):
            BoundsService.misfit_lower_bound(Fraction(-3, 2), 2)

    def test_ideal_energy(self, bernoulli):
        assert BoundsService.ideal_energy_per_site(3, bernoulli) == -3


class TestMonteCarlo:
    def test_gaussian_dimer_against_quadrature(self, dimer):
        dist = BoundsService.sampled("normal", seed=5, sigma=1.0)
        mean, stderr = BoundsService.mc_cell_average(dimer, dist, samples=20_000)
        half, _ = integrate.quad(lambda x: x * math.exp(-x * x / 2) / math.sqrt(2 * math.pi), 0, math.inf)
        expected = -2 * half
        assert expected == pytest.approx(-math.sqrt(2 / math.pi))
        assert abs(mean - expected) < 5 * stderr

    def test_gaussian_square_against_dense_grid(self, square):
        oracle = square_normal_grid_average(square)
        # E[−Σ|J|] + E[min |J|]
        min_term, _ = integrate.quad(lambda t: special.erfc(t / math.sqrt(2)) ** 4, 0, math.inf)
        assert oracle == pytest.approx(-4 * math.sqrt(2 / math.pi) + min_term, abs=5e-3)
        dist = BoundsService.sampled("normal", seed=5, sigma=1.0)
        mean, stderr = BoundsService.mc_cell_average(square, dist, samples=100_000)
        assert abs(mean - oracle) < 5 * stderr + 5e-3

    def test_noncentered_point_mass_cube(self, cube):
        sampler = BoundsService.as_sampler(BoundsService.point_mass(1, allow_noncentered=True), seed=2)
        mean, stderr = BoundsService.mc_cell_average(cube, sampler, samples=100)
        assert mean == -12.0
        assert stderr == 0.0

    def test_noncentered_point_mass_report(self, cube):
        dist = BoundsService.point_mass(1, allow_noncentered=True)
        report = BoundsService.lower_bound(cube, dist, method=MONTE_CARLO, samples=100)
        assert report.estimate == -3.0
        assert report.notes

    def test_sampled_bernoulli_approaches_exact(self, square, bernoulli):
        mean, stderr = BoundsService.mc_cell_average(square, BoundsService.as_sampler(bernoulli, 9), samples=10_000)
        assert abs(mean + 3) < 5 * stderr

    def test_reproducible_and_thread_independent(self, square):
        dist = BoundsService.sampled("uniform", seed=3, half_width=1.0)
        first = BoundsService.mc_cell_average(square, dist, samples=10_000, threads=1)
        second = BoundsService.mc_cell_average(square, dist, samples=10_000, threads=3)
        assert first == second

    def test_report_is_labelled_as_estimate(self, square):
        report = BoundsService.lower_bound(square, BoundsService.sampled("normal", seed=1), samples=5_000)
        assert report.method == MONTE_CARLO
        assert report.lower_bound is None
        assert report.banner
        assert report.mc_stderr > 0

    def test_requires_two_samples(self, square):
        with pytest.raises(ConfigException):
            BoundsService.mc_cell_average(square, BoundsService.sampled("normal"), samples=1)

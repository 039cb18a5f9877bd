"""
有限经典格点的精确基态：行动态规划、穷举、上界采样、逐样本下界不等式校验
"""
import logging
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np

from app.models.couplings import CouplingAssignment, SpinConfiguration
from app.models.distribution import CouplingDistribution
from app.models.instance import LatticeInstance
from app.models.lattice import FiniteLattice
from app.schemas.report import FractionField
from app.schemas.upper import SampleRecord, TheoremCheckReport, UpperBoundEstimate
from app.services.bounds_service import BoundsService
from app.services.classical_cell_service import ClassicalCellService, spin_signs
from app.services.lattice_service import LatticeService
from app.utils.parallel import ordered_map, split_range
from app.utils.rational import decimal_sqrt, format_fraction, to_decimal_string
from app.utils.response import ConfigException, GuardException, TheoremViolationException
from config import config

logger = logging.getLogger(__name__)

# float64 精确表示整数的上限
FLOAT_EXACT = 2**52

EXHAUSTIVE_CHUNK = 1 << 16

# 动态规划 min-plus 乘积每块的最大元素数
DP_BLOCK_ELEMENTS = 1 << 22


def _row_couplings(lattice: FiniteLattice, integers: Tuple[int, ...]) -> Tuple[np.ndarray, np.ndarray]:
    """按行拆分整数耦合：(水平 Jh[y, x], 竖直 Jv[y, x])，不存在的键记 0"""
    width, height = lattice.side_lengths
    horizontal = np.zeros((height, width), dtype=np.float64)
    vertical = np.zeros((height, width), dtype=np.float64)
    for k, (anchor, axis) in enumerate(lattice.bond_keys):
        x, y = lattice.coords(anchor)
        (horizontal if axis == 0 else vertical)[y, x] = integers[k]
    return horizontal, vertical


def _column_blocks(rows: int, columns: int) -> List[Tuple[int, int]]:
    return split_range(columns, max(1, DP_BLOCK_ELEMENTS // max(rows, 1)))


class ExactGroundStateService:
    """有限格点精确基态服务类"""

    @staticmethod
    def check_guard(lattice: FiniteLattice) -> str:
        """
        检查规模上限，返回将使用的算法（dp 或 exhaustive）

        Raises:
            GuardException: 超出规模上限
        """
        if lattice.dimension == 2:
            width = lattice.side_lengths[0]
            limit = config.DP_MAX_PERIODIC if lattice.is_periodic else config.DP_MAX_FREE
            if width > limit:
                logger.warning(f"拒绝求解: {lattice.boundary} 边界行宽 {width} > {limit}")
                raise GuardException(
                    f"d=2 {lattice.boundary} 边界的行动态规划要求 L <= {limit}，收到 L = {width}；请减小 L"
                )
            return "dp"
        if lattice.n_sites > config.EXHAUSTIVE_MAX_SITES:
            logger.warning(f"拒绝求解: {lattice.n_sites} 个格点 > {config.EXHAUSTIVE_MAX_SITES}")
            raise GuardException(
                f"d=3 穷举要求格点数 <= {config.EXHAUSTIVE_MAX_SITES}，收到 {lattice.n_sites}；请减小 L"
            )
        return "exhaustive"

    @staticmethod
    def exact_ground_state(instance: LatticeInstance) -> Tuple[Fraction, SpinConfiguration]:
        """
        有限格点 Σ J_ij σ_iσ_j 的精确最小值

        d=2 走行动态规划（行状态为一行自旋的比特掩码），d=3 走固定一个自旋的穷举。

        Args:
            instance: 格点耦合实例

        Returns:
            Tuple[Fraction, SpinConfiguration]: (基态能量, 基态构型)

        Raises:
            GuardException: 超出规模上限
        """
        method = ExactGroundStateService.check_guard(instance.lattice)
        integers, _den = instance.couplings.scaled_integers()
        if method == "dp" and sum(abs(v) for v in integers) < FLOAT_EXACT:
            return ExactGroundStateService.dp_ground_state(instance)
        return ExactGroundStateService.exhaustive_ground_state(instance)

    @staticmethod
    def dp_ground_state(instance: LatticeInstance) -> Tuple[Fraction, SpinConfiguration]:
        """d=2 行动态规划；竖直周期边界通过对首行状态逐一条件化处理"""
        lattice = instance.lattice
        if lattice.dimension != 2:
            raise ConfigException("行动态规划只适用于 d=2")
        integers, den = instance.couplings.scaled_integers()
        if sum(abs(v) for v in integers) >= FLOAT_EXACT:
            raise ConfigException("整数化后的耦合过大，无法在动态规划中精确求和")

        width, height = lattice.side_lengths
        signs = spin_signs(width, False).astype(np.float64)
        pairs = signs * np.roll(signs, -1, axis=1)
        horizontal, vertical = _row_couplings(lattice, integers)
        row_energy = horizontal @ pairs.T  # (height, states)

        def vertical_block(y: int, start: int, stop: int) -> np.ndarray:
            """V_y[s, t]：第 y 行状态 s 与第 y+1 行状态 t 之间的竖直键能量"""
            return (signs * vertical[y]) @ signs[start:stop].T

        if lattice.is_periodic:
            energy, rows = ExactGroundStateService._dp_periodic(row_energy, vertical_block, signs, vertical)
        else:
            energy, rows = ExactGroundStateService._dp_free(row_energy, vertical_block)

        mask = 0
        for y, state in enumerate(rows):
            mask |= int(state) << (y * width)
        return Fraction(int(round(energy)), den), SpinConfiguration(mask=mask, n_sites=lattice.n_sites)

    @staticmethod
    def _dp_free(row_energy: np.ndarray, vertical_block) -> Tuple[float, List[int]]:
        height, states = row_energy.shape
        dp = row_energy[0].copy()
        choices = []
        for y in range(1, height):
            new = np.empty(states)
            choice = np.empty(states, dtype=np.int64)
            for start, stop in _column_blocks(states, states):
                total = dp[:, None] + vertical_block(y - 1, start, stop)
                choice[start:stop] = np.argmin(total, axis=0)
                new[start:stop] = total[choice[start:stop], np.arange(stop - start)]
            choices.append(choice)
            dp = new + row_energy[y]

        last = int(np.argmin(dp))
        rows = [last]
        for choice in reversed(choices):
            rows.append(int(choice[rows[-1]]))
        return float(dp[last]), rows[::-1]

    @staticmethod
    def _dp_periodic(row_energy: np.ndarray, vertical_block, signs, vertical) -> Tuple[float, List[int]]:
        height, states = row_energy.shape
        dp = np.full((states, states), np.inf)
        dp[np.arange(states), np.arange(states)] = row_energy[0]
        choices = []
        for y in range(1, height):
            new = np.empty((states, states))
            choice = np.empty((states, states), dtype=np.int64)
            for start, stop in _column_blocks(states * states, states):
                total = dp[:, :, None] + vertical_block(y - 1, start, stop)[None, :, :]
                best = np.argmin(total, axis=1)
                choice[:, start:stop] = best
                new[:, start:stop] = np.take_along_axis(total, best[:, None, :], axis=1)[:, 0, :]
            choices.append(choice)
            dp = new + row_energy[y][None, :]

        wrap = (signs * vertical[height - 1]) @ signs.T  # 末行 s 与首行 f
        closing = dp + wrap.T
        last_choice = np.argmin(closing, axis=1)
        totals = closing[np.arange(states), last_choice]
        first = int(np.argmin(totals))

        rows = [int(last_choice[first])]
        for choice in reversed(choices):
            rows.append(int(choice[first, rows[-1]]))
        rows = rows[::-1]
        return float(totals[first]), rows

    @staticmethod
    def exhaustive_ground_state(instance: LatticeInstance, threads: int = None) -> Tuple[Fraction, SpinConfiguration]:
        """
        固定最高位格点 σ=+1，穷举 2^(N−1) 个构型；argmin 为最小掩码

        Raises:
            GuardException: 格点数超过穷举上限
        """
        lattice = instance.lattice
        n_sites = lattice.n_sites
        if n_sites > config.EXHAUSTIVE_MAX_SITES:
            raise GuardException(f"穷举要求格点数 <= {config.EXHAUSTIVE_MAX_SITES}，收到 {n_sites}")

        integers, den = instance.couplings.scaled_integers()
        dtype = np.float64 if sum(abs(v) for v in integers) < FLOAT_EXACT else np.int64
        couplings = np.array(integers, dtype=dtype)
        left = np.array([i for i, _ in lattice.bonds], dtype=np.int64)
        right = np.array([j for _, j in lattice.bonds], dtype=np.int64)
        shifts = np.arange(n_sites, dtype=np.int64)

        def run_chunk(bounds: Tuple[int, int]) -> Tuple[int, int]:
            start, stop = bounds
            masks = np.arange(start, stop, dtype=np.int64)
            spins = (1 - 2 * ((masks[:, None] >> shifts[None, :]) & 1)).astype(np.int8)
            energies = (spins[:, left] * spins[:, right]).astype(dtype) @ couplings
            best = int(np.argmin(energies))
            return int(round(energies[best])) if dtype is np.float64 else int(energies[best]), start + best

        results = ordered_map(run_chunk, split_range(2 ** (n_sites - 1), EXHAUSTIVE_CHUNK), threads)
        energy, mask = min(results)
        return Fraction(energy, den), SpinConfiguration(mask=mask, n_sites=n_sites)

    @staticmethod
    def energy(instance: LatticeInstance, sigma: SpinConfiguration) -> Fraction:
        """Σ J_ij σ_iσ_j（精确）"""
        spins = sigma.spins
        return sum(
            (value * spins[i] * spins[j] for value, (i, j) in zip(instance.couplings.values, instance.lattice.bonds)),
            Fraction(0),
        )

    @staticmethod
    def draw_instance(
        lattice: FiniteLattice, dist: CouplingDistribution, seed: int, sample: int
    ) -> LatticeInstance:
        """按 (seed, sample) 派生的独立随机流抽取一组离散耦合"""
        if not dist.is_discrete:
            raise ConfigException(f"精确格点基态只支持离散分布，收到 {dist.label}")
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(sample)]))
        indices = dist.sample_indices(rng, lattice.n_bonds)
        couplings = CouplingAssignment(values=tuple(dist.atoms[i].value for i in indices.tolist()))
        return LatticeInstance(lattice=lattice, couplings=couplings, seed=int(seed), sample=int(sample))

    @staticmethod
    def sample_upper_bound(
        dimension: int,
        side: int,
        boundary: str,
        dist: CouplingDistribution,
        samples: int,
        seed: int = None,
        threads: int = None,
        keep_energies: bool = False,
        precision: int = None,
    ) -> Tuple[UpperBoundEstimate, List[SampleRecord]]:
        """
        抽样有限格点并精确求解，估计每格点基态能量的无序平均

        Returns:
            Tuple[UpperBoundEstimate, List[SampleRecord]]: (汇总, 逐样本记录)

        Raises:
            ConfigException: 样本数 < 1 或分布非离散
            GuardException: 格点超出规模上限
        """
        if samples < 1:
            raise ConfigException(f"样本数必须 >= 1，收到 {samples}")
        seed = config.DEFAULT_SEED if seed is None else int(seed)
        precision = config.DEFAULT_PRECISION if precision is None else precision
        lattice = LatticeService.make_lattice(dimension, (side,) * dimension, boundary)
        ExactGroundStateService.check_guard(lattice)
        if not dist.is_discrete:
            raise ConfigException(f"精确格点基态只支持离散分布，收到 {dist.label}")

        def solve(index: int) -> Fraction:
            instance = ExactGroundStateService.draw_instance(lattice, dist, seed, index)
            energy, _sigma = ExactGroundStateService.exact_ground_state(instance)
            return energy

        logger.info(f"上界采样 d={dimension} L={side} {boundary}: {samples} 个样本, 种子 {seed}")
        energies = ordered_map(solve, list(range(samples)), threads)
        per_site = [e / lattice.n_sites for e in energies]

        records = [
            SampleRecord(
                sample=i, seed=seed,
                energy=FractionField.from_fraction(e, precision),
                per_site=to_decimal_string(p, precision),
            )
            for i, (e, p) in enumerate(zip(energies, per_site))
        ]

        mean = sum(per_site, Fraction(0)) / samples
        if samples > 1:
            variance = sum(((p - mean) ** 2 for p in per_site), Fraction(0)) / (samples - 1)
            stderr = decimal_sqrt(variance / samples, precision + 10)
            stderr_text = to_decimal_string(Fraction(stderr), precision)
        else:
            stderr_text = "0"

        estimates = [c.value for c in BoundsService.comparison_table(dimension) if c.role == "estimate"]
        summary = UpperBoundEstimate(
            dimension=dimension,
            side=side,
            boundary=boundary,
            distribution=dist.label,
            samples=samples,
            seed=seed,
            mean_per_site=FractionField.from_fraction(mean, precision),
            stderr=stderr_text,
            energies=[format_fraction(p) for p in per_site] if keep_energies else None,
            literature_estimate=estimates[0] if estimates and dist.is_bernoulli() else None,
        )
        return summary, records

    @staticmethod
    def cell_decomposition_energy(instance: LatticeInstance) -> Fraction:
        """Σ_n c_d·E_0(单元 n)：单元耦合直接取自格点耦合"""
        cover = LatticeService.make_cover(instance.lattice)
        integers, den = instance.couplings.scaled_integers()
        cell_couplings = np.array([[integers[k] for k in cell.bond_map] for cell in cover.cells], dtype=np.int64)
        energies = ClassicalCellService.batch_ground_energies(cover.geometry, cell_couplings)
        return cover.geometry.multiplicity_factor * Fraction(int(energies.sum()), den)

    @staticmethod
    def decomposition_gap(instance: LatticeInstance) -> Tuple[Fraction, Fraction]:
        """返回 (格点基态能量, 单元分解能量)"""
        energy, _sigma = ExactGroundStateService.exact_ground_state(instance)
        return energy, ExactGroundStateService.cell_decomposition_energy(instance)

    @staticmethod
    def verify_decomposition_sample(
        dimension: int,
        side: int,
        dist: CouplingDistribution,
        seed: int = None,
        samples: int = 100,
        threads: int = None,
        precision: int = None,
    ) -> TheoremCheckReport:
        """
        逐样本精确校验 E_0(格点) ≥ Σ_n c_d·E_0(单元 n)（周期格点）

        Raises:
            GuardException: 超出规模上限
            TheoremViolationException: 任一样本不等式不成立
        """
        if samples < 1:
            raise ConfigException(f"样本数必须 >= 1，收到 {samples}")
        seed = config.DEFAULT_SEED if seed is None else int(seed)
        precision = config.DEFAULT_PRECISION if precision is None else precision
        lattice = LatticeService.make_lattice(dimension, (side,) * dimension, "periodic")
        ExactGroundStateService.check_guard(lattice)

        def check(index: int) -> Fraction:
            instance = ExactGroundStateService.draw_instance(lattice, dist, seed, index)
            energy, cells = ExactGroundStateService.decomposition_gap(instance)
            return energy - cells

        gaps = ordered_map(check, list(range(samples)), threads)
        violations = [i for i, gap in enumerate(gaps) if gap < 0]
        if violations:
            logger.error(f"下界不等式被违反: 样本 {violations}")
            raise TheoremViolationException(
                f"{len(violations)} / {samples} 个样本违反 E_0(格点) >= Σ 单元能量",
                data={"seed": seed, "samples": violations},
            )

        mean_gap = sum(gaps, Fraction(0)) / samples / lattice.n_sites
        return TheoremCheckReport(
            dimension=dimension,
            side=side,
            distribution=dist.label,
            samples=samples,
            seed=seed,
            holds=samples - len(violations),
            min_gap=FractionField.from_fraction(min(gaps), precision),
            mean_gap_per_site=FractionField.from_fraction(mean_gap, precision),
            gaps=[format_fraction(g) for g in gaps],
        )

    @staticmethod
    def lattice_frustration(instance: LatticeInstance) -> dict:
        """
        格点耦合实例的阻挫统计：阻挫元格数与比例；d=3 周期格点还校验每个立方体的阻挫面数为偶数

        Raises:
            ConfigException: 存在零耦合
        """
        values = instance.couplings.values
        if any(v == 0 for v in values):
            raise ConfigException("存在零耦合，阻挫无定义")
        negative = [v < 0 for v in values]
        plaquettes = LatticeService.lattice_plaquettes(instance.lattice)
        frustrated = sum(1 for p in plaquettes if sum(negative[k] for k in p) % 2)

        data = {
            "plaquettes": len(plaquettes),
            "frustrated": frustrated,
            "fraction": format_fraction(Fraction(frustrated, len(plaquettes))) if plaquettes else "0",
        }
        cube_violations: Optional[int] = None
        if instance.lattice.dimension == 3 and instance.lattice.is_periodic:
            cover = LatticeService.make_cover(instance.lattice)
            cube_violations = 0
            for cell in cover.cells:
                count = sum(
                    sum(negative[cell.bond_map[k]] for k in face) % 2 for face in cover.geometry.faces
                )
                cube_violations += count % 2
            data["cubes"] = len(cover.cells)
            data["odd_parity_cubes"] = cube_violations
        return data


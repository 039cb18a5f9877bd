"""
下界相关业务逻辑服务：耦合分布、单元平均、下界组装、错配参数、文献比较常数
"""
import logging
import math
from fractions import Fraction
from pathlib import Path
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from app.models.distribution import DISCRETE, SAMPLED, Atom, CouplingDistribution, SamplerSpec
from app.models.lattice import CellGeometry
from app.schemas.report import (
    EXACT, MC_BANNER, MONTE_CARLO, BoundReport, ComparisonConstant, DistributionInfo, FractionField,
)
from app.services.classical_cell_service import ClassicalCellService, bond_products
from app.utils.parallel import ordered_map, split_range
from app.utils.rational import as_fraction, format_fraction
from app.utils.response import AssumptionException, ConfigException, GuardException
from config import config

logger = logging.getLogger(__name__)

ENUMERATION_CHUNK = 1 << 16
INT64_SAFE = 2**62

# 已发表的 d=3 下界十进制写法，与精确值 -141/64 不一致
PUBLISHED_CUBE_DECIMAL = "-2.204"

NONCENTERED_NOTE = "耦合分布非中心化（Av(J) != 0）：下界定理的前提不成立，结果仅供参考"

COMPARISON_TABLE = {
    2: (
        ComparisonConstant(
            label="exact finite-lattice upper bound", value="-1.39", role="upper",
            source="branch-and-bound exact ground states of 2D ±J lattices (De Simone et al.), read off their figure",
        ),
        ComparisonConstant(
            label="random energy model lower bound", value="-1.560", role="lower",
            source="Derrida, random energy model, rigorous for the REM only",
        ),
        ComparisonConstant(
            label="Monte-Carlo estimate", value="-1.4", role="estimate",
            source="Monte-Carlo simulations summarised in Binder's review",
        ),
    ),
    3: (
        ComparisonConstant(
            label="exact finite-lattice upper bound", value="-1.759", role="upper",
            source="exact ground-state energy per site of a 5x5x5 ±J lattice",
        ),
        ComparisonConstant(
            label="random energy model lower bound", value="-1.956", role="lower",
            source="Derrida, random energy model, rigorous for the REM only",
        ),
        ComparisonConstant(
            label="string/surface heuristic lower bound", value="-2.25", role="heuristic-lower",
            source="Kirkpatrick, frustration-network argument under unproven assumptions",
        ),
        ComparisonConstant(
            label="Monte-Carlo estimate", value="-1.9", role="estimate",
            source="Monte-Carlo simulations summarised in Binder's review",
        ),
    ),
}


class CellAverage(NamedTuple):
    """精确单元平均及其枚举形式：average = weighted_sum / denominator"""
    average: Fraction
    weighted_sum: int
    denominator: int
    configurations: int


def _chunk_weighted_sum(task: Tuple) -> int:
    """对 [start, stop) 区间内的耦合构型计算 Σ 权重 × 基态能量（整数）"""
    geometry, start, stop, radix, int_values, int_weights, use_object = task
    n_bonds = geometry.n_bonds
    index = np.arange(start, stop, dtype=np.int64)
    powers = radix ** np.arange(n_bonds, dtype=np.int64)
    digits = (index[:, None] // powers[None, :]) % radix

    couplings = np.asarray(int_values, dtype=np.int64)[digits]
    minima = (couplings @ bond_products(geometry).T).min(axis=1)

    dtype = object if use_object else np.int64
    weights = np.asarray(int_weights, dtype=dtype)[digits].prod(axis=1)
    if use_object:
        return int(sum(w * int(m) for w, m in zip(weights, minima.tolist())))
    return int(np.dot(weights, minima))


class BoundsService:
    """下界服务类"""

    # ---------------- 分布 ----------------

    @staticmethod
    def bernoulli(J=1) -> CouplingDistribution:
        """
        ½(δ_J + δ_{−J})

        Raises:
            ConfigException: J <= 0
        """
        J = as_fraction(J)
        if J <= 0:
            raise ConfigException(f"Bernoulli 分布要求 J > 0，收到 {J}")
        half = Fraction(1, 2)
        return CouplingDistribution(
            kind=DISCRETE,
            label=f"bernoulli({format_fraction(J)})",
            atoms=(Atom(J, half), Atom(-J, half)),
        )

    @staticmethod
    def discrete(
        atoms: Sequence[Tuple], label: Optional[str] = None, allow_noncentered: bool = False
    ) -> CouplingDistribution:
        """
        一般离散分布

        Args:
            atoms: [(value, probability), ...]，均为精确有理数
            label: 描述
            allow_noncentered: 允许 Av(J) != 0（报告中会标注前提不成立）

        Raises:
            ConfigException: 概率非正、不归一或取值重复
            AssumptionException: 非中心化且未显式允许
        """
        parsed = [Atom(as_fraction(v), as_fraction(p)) for v, p in atoms]
        if not parsed:
            raise ConfigException("离散分布至少需要一个原子")
        if any(a.probability <= 0 for a in parsed):
            raise ConfigException("离散分布的概率必须为正")
        total = sum((a.probability for a in parsed), Fraction(0))
        if total != 1:
            raise ConfigException(f"概率之和为 {total}，不等于 1")
        if len({a.value for a in parsed}) != len(parsed):
            raise ConfigException("离散分布存在重复取值")

        mean = sum((a.value * a.probability for a in parsed), Fraction(0))
        centered = mean == 0
        if not centered and not allow_noncentered:
            raise AssumptionException(f"耦合分布非中心化：Av(J) = {mean}（如需继续请显式允许非中心化分布）")

        if label is None:
            label = "discrete{" + ", ".join(f"{format_fraction(a.value)}:{format_fraction(a.probability)}" for a in parsed) + "}"
        return CouplingDistribution(kind=DISCRETE, label=label, atoms=tuple(parsed), centered=centered)

    @staticmethod
    def point_mass(value=1, allow_noncentered: bool = False) -> CouplingDistribution:
        value = as_fraction(value)
        return BoundsService.discrete(
            [(value, 1)], label=f"point({format_fraction(value)})", allow_noncentered=allow_noncentered
        )

    @staticmethod
    def sampled(name: str, seed: int = None, **params: float) -> CouplingDistribution:
        """
        连续分布（只支持蒙特卡罗估计）

        Args:
            name: normal（参数 sigma）或 uniform（参数 half_width）
            seed: 随机种子
        """
        seed = config.DEFAULT_SEED if seed is None else int(seed)
        if name == "normal":
            sigma = float(params.get("sigma", 1.0))
            if not sigma > 0 or not math.isfinite(sigma):
                raise ConfigException(f"normal 采样器要求 sigma > 0，收到 {sigma}")
            spec = SamplerSpec(name="normal", params=(("sigma", sigma),), seed=seed)
            label = f"normal(sigma={sigma:g})"
        elif name == "uniform":
            half_width = float(params.get("half_width", 1.0))
            if not half_width > 0 or not math.isfinite(half_width):
                raise ConfigException(f"uniform 采样器要求 half_width > 0，收到 {half_width}")
            spec = SamplerSpec(name="uniform", params=(("half_width", half_width),), seed=seed)
            label = f"uniform(-{half_width:g},{half_width:g})"
        else:
            raise ConfigException(f"未知采样器: {name}（可选 normal、uniform）")
        return CouplingDistribution(kind=SAMPLED, label=label, sampler=spec)

    @staticmethod
    def as_sampler(dist: CouplingDistribution, seed: int = None) -> CouplingDistribution:
        """把离散分布包装成采样器（用于与精确平均交叉检验）"""
        if not dist.is_discrete:
            return dist
        seed = config.DEFAULT_SEED if seed is None else int(seed)
        return CouplingDistribution(
            kind=SAMPLED,
            label=f"{dist.label} (sampled)",
            atoms=dist.atoms,
            sampler=SamplerSpec(name=DISCRETE, seed=seed),
            centered=dist.centered,
        )

    @staticmethod
    def parse_distribution_text(text: str, label: str = None, allow_noncentered: bool = False) -> CouplingDistribution:
        """
        解析 `value probability` 文本表（两列均为精确分数，如 `-1 1/2`）

        支持 # 注释与空行；不归一的表会被拒绝。
        """
        atoms = []
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ConfigException(f"分布表第 {number} 行格式错误：应为 `value probability`，收到 {raw!r}")
            atoms.append((as_fraction(parts[0]), as_fraction(parts[1])))
        return BoundsService.discrete(atoms, label=label, allow_noncentered=allow_noncentered)

    @staticmethod
    def load_distribution_file(path: str, allow_noncentered: bool = False) -> CouplingDistribution:
        file_path = Path(path)
        if not file_path.is_file():
            raise ConfigException(f"分布文件不存在: {path}")
        return BoundsService.parse_distribution_text(
            file_path.read_text(encoding="utf-8"), label=f"file:{file_path.name}", allow_noncentered=allow_noncentered
        )

    @staticmethod
    def parse_distribution_spec(spec: str, seed: int = None, allow_noncentered: bool = False) -> CouplingDistribution:
        """
        解析命令行分布描述

        bernoulli | bernoulli:J | point:v | normal[:sigma] | uniform[:half_width] | file:PATH
        """
        name, _, argument = spec.partition(":")
        name = name.strip().lower()
        if name == "bernoulli":
            return BoundsService.bernoulli(argument or 1)
        if name == "point":
            return BoundsService.point_mass(argument or 1, allow_noncentered=allow_noncentered)
        if name == "file":
            if not argument:
                raise ConfigException("file: 之后需要给出分布文件路径")
            return BoundsService.load_distribution_file(argument, allow_noncentered=allow_noncentered)
        if name in ("normal", "uniform"):
            try:
                width = float(argument or 1.0)
            except ValueError:
                raise ConfigException(f"无法解析分布参数: {spec!r}")
            key = "sigma" if name == "normal" else "half_width"
            return BoundsService.sampled(name, seed=seed, **{key: width})
        raise ConfigException(f"无法识别的分布描述: {spec!r}")

    # ---------------- 单元平均 ----------------

    @staticmethod
    def exact_cell_average_detail(
        geometry: CellGeometry, dist: CouplingDistribution, threads: int = None
    ) -> CellAverage:
        """
        精确枚举全部 |atoms|^|bonds| 个耦合构型，计算单元基态能量的无序平均

        构型按混合进制计数器编号（Bernoulli 时即比特掩码）；各分块的整数部分和
        满足结合律，任意分块与线程数下结果逐位一致。

        Raises:
            ConfigException: 非离散分布
            GuardException: 枚举规模超过上限
        """
        if not dist.is_discrete:
            raise ConfigException(f"精确平均只支持离散分布，收到 {dist.label}")
        radix = len(dist.atoms)
        configurations = radix ** geometry.n_bonds
        if configurations > config.ENUMERATION_GUARD:
            raise GuardException(
                f"枚举规模 {radix}^{geometry.n_bonds} = {configurations} 超过上限 {config.ENUMERATION_GUARD}"
            )

        value_den = dist.value_denominator()
        int_values = tuple(int(a.value * value_den) for a in dist.atoms)
        int_weights = dist.integer_weights()
        q = dist.probability_denominator()

        max_energy = geometry.n_bonds * max(abs(v) for v in int_values)
        max_weight = max(int_weights) ** geometry.n_bonds
        use_object = max_energy * max_weight * min(configurations, ENUMERATION_CHUNK) >= INT64_SAFE

        logger.info(f"精确枚举 {geometry.name}: {configurations} 个耦合构型, 分布 {dist.label}")
        tasks = [
            (geometry, start, stop, radix, int_values, int_weights, use_object)
            for start, stop in split_range(configurations, ENUMERATION_CHUNK)
        ]
        weighted_sum = sum(ordered_map(_chunk_weighted_sum, tasks, threads))
        denominator = q ** geometry.n_bonds * value_den
        return CellAverage(
            average=Fraction(weighted_sum, denominator),
            weighted_sum=weighted_sum,
            denominator=denominator,
            configurations=configurations,
        )

    @staticmethod
    def exact_cell_average(geometry: CellGeometry, dist: CouplingDistribution, threads: int = None) -> Fraction:
        """Av(单元基态能量)，精确有理数"""
        return BoundsService.exact_cell_average_detail(geometry, dist, threads).average

    @staticmethod
    def mc_cell_average(
        geometry: CellGeometry, dist: CouplingDistribution, samples: int, seed: int = None, threads: int = None
    ) -> Tuple[float, float]:
        """
        蒙特卡罗估计单元基态能量的无序平均

        样本按固定块大小划分，块 b 使用由 (seed, b) 派生的独立随机流，结果与线程数无关。

        Returns:
            Tuple[float, float]: (均值, 标准误差)

        Raises:
            ConfigException: 样本数 < 2
        """
        if samples < 2:
            raise ConfigException(f"蒙特卡罗至少需要 2 个样本，收到 {samples}")
        if seed is None:
            seed = dist.sampler.seed if dist.sampler is not None else config.DEFAULT_SEED

        products = bond_products(geometry).T.astype(np.float64)

        def run_block(block: Tuple[int, int, int]) -> np.ndarray:
            index, start, stop = block
            rng = np.random.default_rng(np.random.SeedSequence([int(seed), index]))
            couplings = dist.sample_values(rng, (stop - start, geometry.n_bonds))
            return (couplings @ products).min(axis=1)

        blocks = [(b, start, stop) for b, (start, stop) in enumerate(split_range(samples, config.MC_BLOCK_SIZE))]
        energies = np.concatenate(ordered_map(run_block, blocks, threads))
        mean = math.fsum(energies.tolist()) / samples
        stderr = float(np.std(energies, ddof=1)) / math.sqrt(samples)
        logger.info(f"蒙特卡罗 {geometry.name}: {samples} 个样本, 均值 {mean:.6f} ± {stderr:.6f}")
        return mean, stderr

    # ---------------- 下界组装 ----------------

    @staticmethod
    def comparison_table(dimension: int) -> List[ComparisonConstant]:
        """文献比较常数表"""
        if dimension not in COMPARISON_TABLE:
            raise ConfigException(f"不支持的维数: {dimension}（仅支持 2 或 3）")
        return list(COMPARISON_TABLE[dimension])

    @staticmethod
    def misfit_lower_bound(lower_bound: Fraction, e_ideal_per_site: Fraction) -> Fraction:
        """
        错配参数下界 (|E_id| − |lower_bound|) / |E_id|

        Raises:
            ConfigException: E_id = 0 或 E_id > 0
        """
        lower_bound = as_fraction(lower_bound)
        e_ideal_per_site = as_fraction(e_ideal_per_site)
        if e_ideal_per_site == 0:
            raise ConfigException("参考能量 E_id 不能为 0")
        if e_ideal_per_site > 0:
            raise ConfigException(f"参考能量 E_id 必须为负，收到 {e_ideal_per_site}")
        return (abs(e_ideal_per_site) - abs(lower_bound)) / abs(e_ideal_per_site)

    @staticmethod
    def ideal_energy_per_site(dimension: int, dist: CouplingDistribution) -> Fraction:
        """无阻挫参考体系每格点能量 −d·Av|J|（每格点 d 条键）"""
        return -dimension * dist.mean_abs()

    @staticmethod
    def lower_bound(
        geometry: CellGeometry,
        dist: CouplingDistribution,
        method: str = "auto",
        precision: int = None,
        samples: int = 100_000,
        seed: int = None,
        threads: int = None,
    ) -> BoundReport:
        """
        组装单元分解下界：lower_bound = c_d × Av(单元基态能量)

        Args:
            geometry: 单元几何
            dist: 耦合分布
            method: auto | exact-enumeration | monte-carlo
            precision: 十进制位数
            samples: 蒙特卡罗样本数
            seed: 蒙特卡罗种子

        Returns:
            BoundReport: 下界报告
        """
        precision = config.DEFAULT_PRECISION if precision is None else precision
        if method == "auto":
            method = EXACT if dist.is_discrete else MONTE_CARLO
        if method not in (EXACT, MONTE_CARLO):
            raise ConfigException(f"未知方法: {method}")

        c_d = geometry.multiplicity_factor
        constants = BoundsService.comparison_table(geometry.dimension)
        notes: List[str] = []
        if not dist.centered:
            notes.append(NONCENTERED_NOTE)

        info = DistributionInfo(**dist.to_dict())
        common = dict(
            dimension=geometry.dimension,
            cell=geometry.name,
            multiplicity_factor=FractionField.from_fraction(c_d, precision),
            distribution=info,
            comparison_constants=constants,
        )

        if method == MONTE_CARLO:
            sampler = dist if not dist.is_discrete else BoundsService.as_sampler(dist, seed)
            mean, stderr = BoundsService.mc_cell_average(geometry, sampler, samples, seed, threads)
            estimate = float(c_d) * mean
            return BoundReport(
                method=MONTE_CARLO,
                estimate=estimate,
                decimal=f"{estimate:.{precision}f}",
                mc_samples=samples,
                mc_stderr=float(c_d) * stderr,
                notes=notes,
                banner=MC_BANNER,
                **common,
            )

        detail = BoundsService.exact_cell_average_detail(geometry, dist, threads)
        bound = c_d * detail.average

        scaled = c_d * detail.weighted_sum
        enumeration_form = None
        if scaled.denominator == 1 and detail.denominator != 1:
            enumeration_form = f"{scaled.numerator}/{detail.denominator}"

        misfit = None
        e_ideal = BoundsService.ideal_energy_per_site(geometry.dimension, dist)
        if e_ideal < 0:
            misfit = FractionField.from_fraction(BoundsService.misfit_lower_bound(bound, e_ideal), precision)

        below_upper = None
        if dist.is_bernoulli():
            below_upper = all(float(bound) <= float(c.value) for c in constants if c.role == "upper")
            if geometry.dimension == 3:
                notes.append(
                    f"已发表的十进制写法 {PUBLISHED_CUBE_DECIMAL}… 与精确值 {format_fraction(bound)} = "
                    f"{FractionField.from_fraction(bound, precision).decimal} 不一致，疑为舍入不当；以精确分数为准"
                )
        else:
            notes.append("文献比较常数对应 ±1 耦合，仅供参考")

        report = BoundReport(
            method=EXACT,
            e0_cell_avg=FractionField.from_fraction(detail.average, precision),
            lower_bound=FractionField.from_fraction(bound, precision),
            enumeration_form=enumeration_form,
            decimal=FractionField.from_fraction(bound, precision).decimal,
            misfit_bound=misfit,
            below_upper_bounds=below_upper,
            notes=notes,
            **common,
        )
        logger.info(f"{geometry.name} 下界 {format_fraction(bound)} ({report.decimal})")
        return report

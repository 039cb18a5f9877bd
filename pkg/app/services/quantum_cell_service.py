"""
量子单元相关服务：哈密顿量构造、基态本征值、耦合平均、各向异性扫描、XZ 规范校验
"""
import logging
import math
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy import linalg

from app.models.couplings import CouplingAssignment
from app.models.distribution import CouplingDistribution
from app.models.lattice import CellGeometry
from app.models.quantum import Anisotropy, CellHamiltonian, CellSpectrum, Geometry
from app.schemas.report import EXACT, MONTE_CARLO, SweepRow
from app.services.lattice_service import LatticeService
from app.utils.parallel import ordered_map, split_range
from app.utils.response import ConfigException, GuardException, SolverException, TheoremViolationException
from config import config

logger = logging.getLogger(__name__)

# 每个并行任务处理的耦合构型数
EIGEN_CHUNK = 64

# 全格点量子对角化的 Hilbert 空间上限（3×3 周期格点）
MAX_LATTICE_SITES = 9


@lru_cache(maxsize=16)
def bond_operators(geometry: Geometry, anisotropy: Anisotropy) -> np.ndarray:
    """
    每条键的 Φ_b = α_x X_iX_j + α_y Y_iY_j + α_z Z_iZ_j，shape (n_bonds, dim, dim)

    基矢 m 的第 i 位为 1 ⇔ σᶻ_i = −1。Y_iY_j 作为整体是实矩阵：
    ⟨m'|Y_iY_j|m⟩ = −s_i s_j，其中 m' = m 翻转 i、j 两位。
    """
    n_sites = geometry.n_sites
    dim = 2 ** n_sites
    masks = np.arange(dim, dtype=np.int64)
    signs = 1 - 2 * ((masks[:, None] >> np.arange(n_sites, dtype=np.int64)[None, :]) & 1)

    operators = np.zeros((len(geometry.bonds), dim, dim), dtype=np.float64)
    for k, (i, j) in enumerate(geometry.bonds):
        zz = signs[:, i] * signs[:, j]
        flipped = masks ^ ((1 << i) | (1 << j))
        operators[k, masks, masks] += anisotropy.alpha_z * zz
        operators[k, flipped, masks] += anisotropy.alpha_x - anisotropy.alpha_y * zz
    operators.setflags(write=False)
    return operators


@lru_cache(maxsize=16)
def bond_diagonals(geometry: Geometry) -> np.ndarray:
    """σᶻσᶻ 项的对角元：shape (n_bonds, dim)"""
    n_sites = geometry.n_sites
    masks = np.arange(2 ** n_sites, dtype=np.int64)
    signs = 1 - 2 * ((masks[:, None] >> np.arange(n_sites, dtype=np.int64)[None, :]) & 1)
    diagonals = np.stack([signs[:, i] * signs[:, j] for i, j in geometry.bonds]).astype(np.float64)
    diagonals.setflags(write=False)
    return diagonals


def _lowest_eigenpair(matrix: np.ndarray) -> Tuple[float, float]:
    """稠密对称本征求解，返回 (最小本征值, 残差)"""
    try:
        values, vectors = linalg.eigh(matrix, subset_by_index=[0, 0])
    except linalg.LinAlgError as e:
        raise SolverException(f"本征求解未收敛: {e}")
    value = float(values[0])
    vector = vectors[:, 0]
    residual = float(np.linalg.norm(matrix @ vector - value * vector))
    return value, residual


class QuantumCellService:
    """量子单元服务类"""

    @staticmethod
    def build_hamiltonian(geometry: Geometry, J: CouplingAssignment, anisotropy: Anisotropy) -> CellHamiltonian:
        """
        构造 H = Σ_b J_b Φ_b（不含 c_d 因子）

        Args:
            geometry: 单元几何（或不超过 9 个格点的有限格点）
            J: 耦合
            anisotropy: 各向异性参数

        Returns:
            CellHamiltonian: 实对称（厄米）稠密矩阵

        Raises:
            ConfigException: 耦合个数与键数不一致
            GuardException: Hilbert 空间过大
        """
        if J.n_bonds != len(geometry.bonds):
            raise ConfigException(f"耦合个数 {J.n_bonds} 与键数 {len(geometry.bonds)} 不一致")
        if geometry.n_sites > MAX_LATTICE_SITES:
            raise GuardException(f"{geometry.n_sites} 个格点的 Hilbert 空间过大（上限 {MAX_LATTICE_SITES} 个格点）")
        values = np.array([float(v) for v in J.values])
        matrix = np.tensordot(values, bond_operators(geometry, anisotropy), axes=1)
        return CellHamiltonian(geometry=geometry, couplings=J, anisotropy=anisotropy, matrix=matrix)

    @staticmethod
    def ground_energy(hamiltonian: CellHamiltonian, full: bool = False) -> CellSpectrum:
        """
        最小本征值

        经典极限下矩阵对角，直接取对角元最小值（整数耦合时无浮点误差）；
        否则调用 LAPACK 稠密求解并检查 ‖Hv − λv‖ ≤ tol·‖H‖∞。

        Args:
            hamiltonian: 单元哈密顿量
            full: 是否同时返回升序全谱

        Raises:
            SolverException: 求解失败或残差检查不通过
        """
        matrix = hamiltonian.matrix
        if hamiltonian.is_diagonal:
            diagonal = np.diag(matrix)
            eigenvalues = tuple(np.sort(diagonal).tolist()) if full else None
            return CellSpectrum(ground_energy=float(diagonal.min()), eigenvalues=eigenvalues)

        if full:
            try:
                values, vectors = linalg.eigh(matrix)
            except linalg.LinAlgError as e:
                raise SolverException(f"本征求解未收敛: {e}")
            ground = float(values[0])
            residual = float(np.linalg.norm(matrix @ vectors[:, 0] - ground * vectors[:, 0]))
            eigenvalues = tuple(values.tolist())
        else:
            ground, residual = _lowest_eigenpair(matrix)
            eigenvalues = None

        tolerance = config.EIGEN_RESIDUAL_TOL * max(hamiltonian.norm_inf(), 1.0)
        if not residual <= tolerance:
            logger.error(f"残差检查失败: {residual:.3e} > {tolerance:.3e}")
            raise SolverException(f"本征对残差 {residual:.3e} 超过容差 {tolerance:.3e}")
        return CellSpectrum(ground_energy=ground, eigenvalues=eigenvalues, residual=residual)

    @staticmethod
    def _ground_energies(geometry: Geometry, couplings: np.ndarray, anisotropy: Anisotropy) -> np.ndarray:
        """批量求基态能量：couplings shape (批大小, n_bonds) 浮点"""
        if anisotropy.is_classical:
            diagonals = anisotropy.alpha_z * bond_diagonals(geometry)
            return (couplings @ diagonals).min(axis=1)

        operators = bond_operators(geometry, anisotropy)
        scale = float(np.abs(operators).sum(axis=2).max())
        energies = np.empty(len(couplings))
        for row, values in enumerate(couplings):
            matrix = np.tensordot(values, operators, axes=1)
            energy, residual = _lowest_eigenpair(matrix)
            tolerance = config.EIGEN_RESIDUAL_TOL * max(scale * float(np.abs(values).sum()), 1.0)
            if not residual <= tolerance:
                raise SolverException(f"本征对残差 {residual:.3e} 超过容差 {tolerance:.3e}")
            energies[row] = energy
        return energies

    @staticmethod
    def quantum_cell_average(
        geometry: CellGeometry, dist: CouplingDistribution, anisotropy: Anisotropy, threads: int = None
    ) -> float:
        """
        对全部耦合构型求单元量子基态能量的精确加权平均

        构型编号与经典精确平均一致（混合进制计数器）；按构型下标归约，与线程数无关。

        Raises:
            ConfigException: 非离散分布
            GuardException: 枚举规模超过上限
            SolverException: 任一构型本征求解失败
        """
        if not dist.is_discrete:
            raise ConfigException(f"量子单元精确平均只支持离散分布，收到 {dist.label}")
        radix = len(dist.atoms)
        configurations = radix ** geometry.n_bonds
        if configurations > config.ENUMERATION_GUARD:
            raise GuardException(
                f"枚举规模 {radix}^{geometry.n_bonds} = {configurations} 超过上限 {config.ENUMERATION_GUARD}"
            )

        values = np.array([float(a.value) for a in dist.atoms])
        weights = dist.integer_weights()
        total_weight = dist.probability_denominator() ** geometry.n_bonds
        powers = radix ** np.arange(geometry.n_bonds, dtype=np.int64)

        def run_chunk(bounds: Tuple[int, int]) -> List[float]:
            start, stop = bounds
            index = np.arange(start, stop, dtype=np.int64)
            digits = (index[:, None] // powers[None, :]) % radix
            energies = QuantumCellService._ground_energies(geometry, values[digits], anisotropy)
            products = [math.prod(weights[d] for d in row) for row in digits.tolist()]
            return [w * e for w, e in zip(products, energies.tolist())]

        logger.info(
            f"量子单元平均 {geometry.name}: {configurations} 个耦合构型, 各向异性 {anisotropy.as_tuple()}"
        )
        chunk = config.MC_BLOCK_SIZE if anisotropy.is_classical else EIGEN_CHUNK
        parts = ordered_map(run_chunk, split_range(configurations, chunk), threads)
        return math.fsum(term for part in parts for term in part) / total_weight

    @staticmethod
    def quantum_cell_mc_average(
        geometry: CellGeometry,
        dist: CouplingDistribution,
        anisotropy: Anisotropy,
        samples: int,
        seed: int = None,
        threads: int = None,
    ) -> Tuple[float, float]:
        """蒙特卡罗估计（连续分布），返回 (均值, 标准误差)"""
        if samples < 2:
            raise ConfigException(f"蒙特卡罗至少需要 2 个样本，收到 {samples}")
        if seed is None:
            seed = dist.sampler.seed if dist.sampler is not None else config.DEFAULT_SEED

        def run_block(block: Tuple[int, int, int]) -> np.ndarray:
            index, start, stop = block
            rng = np.random.default_rng(np.random.SeedSequence([int(seed), index]))
            couplings = dist.sample_values(rng, (stop - start, geometry.n_bonds))
            return QuantumCellService._ground_energies(geometry, couplings, anisotropy)

        blocks = [(b, start, stop) for b, (start, stop) in enumerate(split_range(samples, config.MC_BLOCK_SIZE))]
        energies = np.concatenate(ordered_map(run_block, blocks, threads))
        mean = math.fsum(energies.tolist()) / samples
        return mean, float(np.std(energies, ddof=1)) / math.sqrt(samples)

    @staticmethod
    def anisotropy_sweep(
        geometry: CellGeometry,
        dist: CouplingDistribution,
        grid: Sequence[float],
        samples: int = 10_000,
        seed: int = None,
        threads: int = None,
    ) -> List[SweepRow]:
        """
        固定 α_y = 0、α_z = 1，扫描 α_x，输出 c_d × 单元平均

        Args:
            geometry: 单元几何
            dist: 耦合分布（离散分布精确枚举，连续分布蒙特卡罗）
            grid: α_x 取值，必须包含 0（经典端点）

        Raises:
            ConfigException: 网格为空、含非有限值或不含 0
        """
        grid = [float(a) for a in grid]
        if not grid:
            raise ConfigException("α_x 网格不能为空")
        if not all(math.isfinite(a) for a in grid):
            raise ConfigException("α_x 网格必须全部为有限值")
        if 0.0 not in grid:
            raise ConfigException("α_x 网格必须包含 0（经典端点）")

        c_d = float(geometry.multiplicity_factor)
        rows = []
        for alpha_x in grid:
            anisotropy = Anisotropy.xz(alpha_x)
            if dist.is_discrete:
                average = QuantumCellService.quantum_cell_average(geometry, dist, anisotropy, threads)
                rows.append(SweepRow(alpha_x=alpha_x, lower_bound=c_d * average, method=EXACT))
            else:
                mean, stderr = QuantumCellService.quantum_cell_mc_average(
                    geometry, dist, anisotropy, samples, seed, threads
                )
                rows.append(SweepRow(alpha_x=alpha_x, lower_bound=c_d * mean, method=MONTE_CARLO, stderr=c_d * stderr))
            logger.info(f"α_x = {alpha_x}: 下界 {rows[-1].lower_bound:.9f}")
        return rows

    @staticmethod
    def xz_gauge_check(
        geometry: CellGeometry, J: CouplingAssignment, site: int, anisotropy: Anisotropy
    ) -> Dict:
        """
        校验 XZ 模型的规范对称：翻转 site 上所有键的耦合后全谱不变

        Raises:
            ConfigException: α_y != 0（此时规范论证不成立）或格点下标无效
        """
        if anisotropy.has_y:
            raise ConfigException("XZ 规范校验要求 α_y = 0")
        if not 0 <= site < geometry.n_sites:
            raise ConfigException(f"格点下标 {site} 超出范围 [0, {geometry.n_sites})")

        values = list(J.values)
        for k, (i, j) in enumerate(geometry.bonds):
            if site in (i, j):
                values[k] = -values[k]
        gauged = J.with_values(values)

        before = QuantumCellService.ground_energy(
            QuantumCellService.build_hamiltonian(geometry, J, anisotropy), full=True
        )
        after = QuantumCellService.ground_energy(
            QuantumCellService.build_hamiltonian(geometry, gauged, anisotropy), full=True
        )
        spectrum_gap = float(np.max(np.abs(np.array(before.eigenvalues) - np.array(after.eigenvalues))))
        return {
            "site": site,
            "energy": before.ground_energy,
            "gauged_energy": after.ground_energy,
            "max_spectrum_difference": spectrum_gap,
            "passed": spectrum_gap <= config.AVERAGE_TOL,
        }

    @staticmethod
    def verify_lattice_inequality(
        dist: CouplingDistribution,
        anisotropy: Anisotropy = Anisotropy(1.0, 0.0, 1.0),
        side: int = 3,
        samples: int = 20,
        seed: int = None,
        threads: int = None,
    ) -> Dict:
        """
        在 d=2 周期格点上逐样本校验 E_0(格点) ≥ Σ_n c_2·E_0(单元 n)

        Raises:
            ConfigException: 非离散分布
            GuardException: 格点过大
            TheoremViolationException: 任一样本不等式不成立（超出数值容差）
        """
        if not dist.is_discrete:
            raise ConfigException("量子格点校验只支持离散分布")
        seed = config.DEFAULT_SEED if seed is None else int(seed)
        lattice = LatticeService.make_lattice(2, (side, side), "periodic")
        if lattice.n_sites > MAX_LATTICE_SITES:
            raise GuardException(f"量子格点校验上限为 {MAX_LATTICE_SITES} 个格点，收到 {lattice.n_sites}")
        cover = LatticeService.make_cover(lattice)
        c_d = float(cover.geometry.multiplicity_factor)
        atom_values = np.array([float(a.value) for a in dist.atoms])

        def run_sample(index: int) -> Dict:
            rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
            couplings = atom_values[dist.sample_indices(rng, lattice.n_bonds)]
            lattice_energy = QuantumCellService._ground_energies(lattice, couplings[None, :], anisotropy)[0]
            cell_couplings = np.array([couplings[list(cell.bond_map)] for cell in cover.cells])
            cell_energies = QuantumCellService._ground_energies(cover.geometry, cell_couplings, anisotropy)
            cell_sum = c_d * math.fsum(cell_energies.tolist())
            return {"sample": index, "lattice_energy": float(lattice_energy), "cell_sum": cell_sum,
                    "gap": float(lattice_energy) - cell_sum}

        records = ordered_map(run_sample, list(range(samples)), threads)
        violations = [r for r in records if r["gap"] < -config.AVERAGE_TOL]
        if violations:
            logger.error(f"量子格点不等式被违反: {len(violations)} / {samples}")
            raise TheoremViolationException(
                f"量子格点不等式在 {len(violations)} 个样本上被违反", data=violations
            )
        gaps = [r["gap"] for r in records]
        return {
            "lattice": lattice.to_dict(),
            "anisotropy": anisotropy.to_dict(),
            "samples": samples,
            "seed": seed,
            "holds": samples - len(violations),
            "min_gap": min(gaps),
            "mean_gap_per_site": math.fsum(gaps) / samples / lattice.n_sites,
        }

"""
性质校验套件：精确下界、阻挫计数、规范不变性、经典极限、逐样本不等式、动态规划与穷举一致性
"""
import logging
from fractions import Fraction
from typing import Callable, Dict, List, Tuple

import numpy as np

from app.models.couplings import CouplingAssignment
from app.models.quantum import Anisotropy
from app.schemas.report import BoundReport
from app.schemas.verify import CheckResult, VerifyReport
from app.services.bounds_service import BoundsService
from app.services.classical_cell_service import ClassicalCellService, sign_patterns
from app.services.exact_gs_service import ExactGroundStateService
from app.services.lattice_service import LatticeService
from app.services.quantum_cell_service import QuantumCellService
from app.utils.response import EABoundsException
from config import config

logger = logging.getLogger(__name__)

EXPECTED_BOUNDS = {2: Fraction(-3, 2), 3: Fraction(-141, 64)}
EXPECTED_CUBE_SUM = -36096
EXPECTED_MISFIT = {2: Fraction(1, 4), 3: Fraction(17, 64)}


class VerifyService:
    """校验套件服务类"""

    @staticmethod
    def computed_bounds(threads: int = None) -> Dict[int, BoundReport]:
        """±1 耦合下 d=2、d=3 的单元分解下界（各项校验共用）"""
        dist = BoundsService.bernoulli(1)
        return {
            dimension: BoundsService.lower_bound(LatticeService.make_cell(dimension), dist, threads=threads)
            for dimension in (2, 3)
        }

    @staticmethod
    def check_exact_bounds(reports: Dict[int, BoundReport]) -> CheckResult:
        found = {d: report.exact_lower_bound() for d, report in reports.items()}
        cube_sum = reports[3].e0_cell_avg.to_fraction() * 2 ** LatticeService.make_cell(3).n_bonds
        passed = found[2] == EXPECTED_BOUNDS[2] and found[3] == EXPECTED_BOUNDS[3] and cube_sum == EXPECTED_CUBE_SUM
        return CheckResult(
            name="exact-bounds",
            passed=passed,
            summary=f"d=2: {found[2]}, d=3: {found[3]} (立方体整数和 {cube_sum})",
            detail={"square": str(found[2]), "cube": str(found[3]), "cube_sum": str(cube_sum)},
        )

    @staticmethod
    def check_misfit(reports: Dict[int, BoundReport]) -> CheckResult:
        dist = BoundsService.bernoulli(1)
        found = {
            d: BoundsService.misfit_lower_bound(report.exact_lower_bound(), BoundsService.ideal_energy_per_site(d, dist))
            for d, report in reports.items()
        }
        return CheckResult(
            name="misfit-bounds",
            passed=found == EXPECTED_MISFIT,
            summary=f"m >= {found[2]} (d=2), m >= {found[3]} (d=3)",
            detail={str(d): str(m) for d, m in found.items()},
        )

    @staticmethod
    def check_square_census() -> CheckResult:
        census = ClassicalCellService.frustration_census(LatticeService.make_cell(2))
        passed = census == {0: {-4: 8}, 1: {-2: 8}}
        return CheckResult(
            name="square-census",
            passed=passed,
            summary=f"非阻挫 {sum(census.get(0, {}).values())} 个 (−4)，阻挫 {sum(census.get(1, {}).values())} 个 (−2)",
            detail={str(k): {str(e): c for e, c in v.items()} for k, v in census.items()},
        )

    @staticmethod
    def check_cube_parity() -> CheckResult:
        census = ClassicalCellService.frustration_census(LatticeService.make_cell(3))
        counts = {k: sum(v.values()) for k, v in census.items()}
        odd = sum(c for k, c in counts.items() if k % 2)
        return CheckResult(
            name="cube-parity-census",
            passed=odd == 0 and sum(counts.values()) == 4096,
            summary=f"阻挫面数分布 {counts}，奇数个 {odd}",
            detail={str(k): c for k, c in counts.items()},
        )

    @staticmethod
    def check_classical_gauge() -> CheckResult:
        """全部符号模式 × 全部格点的规范变换下基态能量不变"""
        failures = 0
        total = 0
        for dimension in (2, 3):
            geometry = LatticeService.make_cell(dimension)
            patterns = sign_patterns(geometry.n_bonds)
            energies = ClassicalCellService.batch_ground_energies(geometry, patterns)
            for site in geometry.sites:
                flip = np.ones(geometry.n_bonds, dtype=np.int64)
                flip[list(geometry.incident_bonds(site))] = -1
                gauged = ClassicalCellService.batch_ground_energies(geometry, patterns * flip)
                failures += int((gauged != energies).sum())
                total += len(patterns)
        return CheckResult(
            name="classical-gauge",
            passed=failures == 0,
            summary=f"{total - failures}/{total} 个 (模式, 格点) 组合不变",
            detail={"cases": total, "failures": failures},
        )

    @staticmethod
    def check_quantum_gauge(seed: int, cases: int = 20) -> CheckResult:
        geometry = LatticeService.make_cell(2)
        rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
        anisotropy = Anisotropy.xz(1.0)
        worst = 0.0
        failures = 0
        for _ in range(cases):
            mask = int(rng.integers(0, 2 ** geometry.n_bonds))
            site = int(rng.integers(0, geometry.n_sites))
            result = QuantumCellService.xz_gauge_check(
                geometry, CouplingAssignment.from_mask(mask, geometry.n_bonds), site, anisotropy
            )
            worst = max(worst, result["max_spectrum_difference"])
            failures += 0 if result["passed"] else 1
        return CheckResult(
            name="quantum-xz-gauge",
            passed=failures == 0,
            summary=f"{cases - failures}/{cases} 个随机模式全谱一致，最大偏差 {worst:.2e}",
            detail={"cases": cases, "max_difference": worst},
        )

    @staticmethod
    def check_classical_limit(threads: int = None) -> CheckResult:
        dist = BoundsService.bernoulli(1)
        deviations = {}
        for dimension in (2, 3):
            geometry = LatticeService.make_cell(dimension)
            quantum = QuantumCellService.quantum_cell_average(geometry, dist, Anisotropy.classical(), threads)
            exact = BoundsService.exact_cell_average(geometry, dist, threads)
            deviations[dimension] = abs(quantum - float(exact))
        return CheckResult(
            name="quantum-classical-limit",
            passed=all(d <= config.AVERAGE_TOL for d in deviations.values()),
            summary=f"经典极限偏差 d=2: {deviations[2]:.2e}, d=3: {deviations[3]:.2e}",
            detail={str(d): v for d, v in deviations.items()},
        )

    @staticmethod
    def check_decomposition_inequality(seed: int, samples: int = 100, threads: int = None) -> CheckResult:
        report = ExactGroundStateService.verify_decomposition_sample(
            2, 4, BoundsService.bernoulli(1), seed=seed, samples=samples, threads=threads
        )
        return CheckResult(
            name="cell-decomposition-inequality",
            passed=report.passed,
            summary=f"{report.holds}/{report.samples} 个样本满足 E_0(格点) >= Σ 单元能量（4×4 周期）",
            detail={"min_gap": report.min_gap.decimal, "mean_gap_per_site": report.mean_gap_per_site.decimal},
        )

    @staticmethod
    def check_quantum_lattice(seed: int, samples: int = 20, threads: int = None) -> CheckResult:
        result = QuantumCellService.verify_lattice_inequality(
            BoundsService.bernoulli(1), Anisotropy.xz(1.0), side=3, samples=samples, seed=seed, threads=threads
        )
        return CheckResult(
            name="quantum-lattice-inequality",
            passed=result["holds"] == samples,
            summary=f"{result['holds']}/{samples} 个样本满足量子格点不等式（3×3 周期，XZ）",
            detail={"min_gap": result["min_gap"], "mean_gap_per_site": result["mean_gap_per_site"]},
        )

    @staticmethod
    def check_dp_oracle(seed: int, draws: int = 50) -> CheckResult:
        dist = BoundsService.bernoulli(1)
        mismatches = 0
        for boundary in ("periodic", "free"):
            lattice = LatticeService.make_lattice(2, (4, 4), boundary)
            for index in range(draws):
                instance = ExactGroundStateService.draw_instance(lattice, dist, seed, index)
                dp_energy, _ = ExactGroundStateService.dp_ground_state(instance)
                brute_energy, _ = ExactGroundStateService.exhaustive_ground_state(instance, threads=1)
                mismatches += dp_energy != brute_energy
        total = 2 * draws
        return CheckResult(
            name="dp-vs-exhaustive",
            passed=mismatches == 0,
            summary=f"{total - mismatches}/{total} 个 4×4 实例动态规划与穷举一致",
            detail={"draws": total, "mismatches": mismatches},
        )

    @staticmethod
    def check_sandwich(reports: Dict[int, BoundReport]) -> CheckResult:
        found = {d: report.exact_lower_bound() for d, report in reports.items()}
        rows = []
        passed = found[3] <= found[2]
        for dimension in (2, 3):
            for constant in BoundsService.comparison_table(dimension):
                if constant.role == "upper":
                    holds = float(found[dimension]) < float(constant.value)
                    passed = passed and holds
                    rows.append(f"d={dimension}: {float(found[dimension])} < {constant.value}")
        return CheckResult(
            name="sandwich",
            passed=passed,
            summary="; ".join(rows) + "; d=3 下界 <= d=2 下界",
        )

    @staticmethod
    def run_suite(seed: int = None, samples: int = 100, threads: int = None) -> VerifyReport:
        """
        运行全部校验，单项异常记为失败而不中断套件

        Args:
            seed: 随机校验的种子
            samples: 逐样本不等式校验的样本数
            threads: 最大工作线程数

        Returns:
            VerifyReport: 逐项结果
        """
        seed = config.DEFAULT_SEED if seed is None else int(seed)
        reports: Dict[int, BoundReport] = {}

        def bounds() -> Dict[int, BoundReport]:
            if not reports:
                reports.update(VerifyService.computed_bounds(threads))
            return reports

        steps: List[Tuple[str, Callable[[], CheckResult]]] = [
            ("exact-bounds", lambda: VerifyService.check_exact_bounds(bounds())),
            ("misfit-bounds", lambda: VerifyService.check_misfit(bounds())),
            ("square-census", VerifyService.check_square_census),
            ("cube-parity-census", VerifyService.check_cube_parity),
            ("classical-gauge", VerifyService.check_classical_gauge),
            ("quantum-xz-gauge", lambda: VerifyService.check_quantum_gauge(seed)),
            ("quantum-classical-limit", lambda: VerifyService.check_classical_limit(threads)),
            ("cell-decomposition-inequality", lambda: VerifyService.check_decomposition_inequality(seed, samples, threads)),
            ("quantum-lattice-inequality", lambda: VerifyService.check_quantum_lattice(seed, threads=threads)),
            ("dp-vs-exhaustive", lambda: VerifyService.check_dp_oracle(seed)),
            ("sandwich", lambda: VerifyService.check_sandwich(bounds())),
        ]
        checks = []
        for name, step in steps:
            logger.info(f"校验 {name}")
            try:
                checks.append(step())
            except EABoundsException as e:
                logger.error(f"校验 {name} 失败: {e.message}")
                checks.append(CheckResult(name=name, passed=False, summary=e.message, detail={"code": e.code}))
        return VerifyReport(seed=seed, checks=checks)

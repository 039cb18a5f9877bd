"""
下界相关命令：bound classical、bound quantum
"""
import logging
from typing import List

from app.commands.output import emit, handle_errors, render_csv, render_human, render_json, render_table
from app.schemas.report import EXACT, BoundReport, SweepRow
from app.schemas.run_config import RunConfig
from app.services.bounds_service import BoundsService
from app.services.lattice_service import LatticeService
from app.services.quantum_cell_service import QuantumCellService
from app.utils.response import ConfigException, ExitCode

logger = logging.getLogger(__name__)

BOUND_CSV_HEADER = (
    "dimension", "cell", "distribution", "method", "lower_bound_num", "lower_bound_den", "decimal", "stderr",
)
SWEEP_CSV_HEADER = ("alpha_x", "lower_bound", "method", "stderr")


def _require_dimension(run_config: RunConfig) -> int:
    if run_config.dimension is None:
        raise ConfigException("需要指定 --dim 2 或 --dim 3")
    return run_config.dimension


def _fraction_text(field) -> str:
    return str(field.num) if field.den == 1 else f"{field.num}/{field.den}"


def format_bound_human(report: BoundReport) -> str:
    """人类可读报告：精确分数、枚举形式、错配参数下界、文献比较表"""
    lines = [
        f"d={report.dimension} {report.cell}, 分布 {report.distribution.label}, 方法 {report.method}",
    ]
    if report.method == EXACT:
        bound = report.lower_bound
        lines.append(f"lower bound: {_fraction_text(bound)} ({bound.decimal})")
        if report.enumeration_form:
            lines.append(f"enumeration form: {report.enumeration_form} ({bound.decimal})")
        lines.append(f"cell ground-state average: {_fraction_text(report.e0_cell_avg)} ({report.e0_cell_avg.decimal})")
        if report.misfit_bound is not None:
            lines.append(f"misfit: m >= {_fraction_text(report.misfit_bound)} ({report.misfit_bound.decimal})")
    else:
        lines.append(f"estimate: {report.decimal} ± {report.mc_stderr:.6g} ({report.mc_samples} samples)")
        lines.append(f"*** {report.banner} ***")

    lines.append("comparison constants:")
    rows = [[c.role, c.value, c.label] for c in report.comparison_constants]
    rows.append(["computed", report.decimal, "cell-decomposition lower bound" if report.method == EXACT
                 else "Monte-Carlo estimate of the cell bound"])
    text = "\n".join(lines) + "\n" + render_table(rows)
    if report.below_upper_bounds is not None:
        text += f"below all upper bounds: {'yes' if report.below_upper_bounds else 'NO'}\n"
    for note in report.notes:
        text += f"note: {note}\n"
    return text


def format_bound_csv(report: BoundReport, run_config: RunConfig = None) -> str:
    if report.method == EXACT:
        row = [report.dimension, report.cell, report.distribution.label, report.method,
               report.lower_bound.num, report.lower_bound.den, report.decimal, ""]
    else:
        row = [report.dimension, report.cell, report.distribution.label, report.method,
               "", "", report.decimal, repr(report.mc_stderr)]
    return render_csv(BOUND_CSV_HEADER, [row], run_config)


@handle_errors
def cmd_bound_classical(run_config: RunConfig) -> int:
    """经典单元下界"""
    dimension = _require_dimension(run_config)
    dist = BoundsService.parse_distribution_spec(
        run_config.distribution or "bernoulli", seed=run_config.seed, allow_noncentered=run_config.allow_noncentered
    )
    report = BoundsService.lower_bound(
        LatticeService.make_cell(dimension),
        dist,
        method=run_config.method or "auto",
        precision=run_config.precision,
        samples=run_config.samples or 100_000,
        seed=run_config.seed,
        threads=run_config.threads,
    )

    if run_config.output_format == "json":
        text = render_json(report.model_dump(mode="json"), run_config)
    elif run_config.output_format == "csv":
        text = format_bound_csv(report, run_config)
    else:
        text = render_human(format_bound_human(report), run_config)
    emit(text, run_config.output)
    return ExitCode.SUCCESS


def format_sweep_human(rows: List[SweepRow], dimension: int, label: str) -> str:
    header = f"d={dimension} 量子单元下界 (α_y = 0, α_z = 1), 分布 {label}\n"
    table = [["alpha_x", "lower_bound", "method", "stderr"]]
    table += [[f"{r.alpha_x:g}", f"{r.lower_bound:.9f}", r.method, "" if r.stderr is None else f"{r.stderr:.3g}"]
              for r in rows]
    return header + render_table(table)


@handle_errors
def cmd_bound_quantum(run_config: RunConfig) -> int:
    """量子单元下界的 α_x 扫描"""
    dimension = _require_dimension(run_config)
    dist = BoundsService.parse_distribution_spec(
        run_config.distribution or "bernoulli", seed=run_config.seed, allow_noncentered=run_config.allow_noncentered
    )
    rows = QuantumCellService.anisotropy_sweep(
        LatticeService.make_cell(dimension),
        dist,
        run_config.alpha_x if run_config.alpha_x is not None else [0.0],
        samples=run_config.samples or 10_000,
        seed=run_config.seed,
        threads=run_config.threads,
    )

    if run_config.output_format == "json":
        text = render_json({"dimension": dimension, "distribution": dist.to_dict(),
                            "rows": [r.model_dump(mode="json") for r in rows]}, run_config)
    elif run_config.output_format == "human":
        text = render_human(format_sweep_human(rows, dimension, dist.label), run_config)
    else:
        text = render_csv(SWEEP_CSV_HEADER, [r.csv_cells() for r in rows], run_config)
    emit(text, run_config.output)
    return ExitCode.SUCCESS

"""
上界采样命令：upper
"""
import logging

from app.commands.output import emit, handle_errors, render_csv, render_human, render_json_lines
from app.models.lattice import FREE, PERIODIC
from app.schemas.run_config import RunConfig
from app.services.bounds_service import BoundsService
from app.services.exact_gs_service import ExactGroundStateService
from app.utils.response import ConfigException, ExitCode
from config import config

logger = logging.getLogger(__name__)

SAMPLE_CSV_HEADER = ("sample", "seed", "energy_num", "energy_den", "per_site")


def resolve_boundary(dimension: int, side: int, boundary: str = None) -> str:
    """未指定边界时：规模允许则用周期边界，否则用自由边界"""
    if boundary:
        return boundary
    if dimension == 2:
        return PERIODIC if side <= config.DP_MAX_PERIODIC else FREE
    return PERIODIC if side ** 3 <= config.EXHAUSTIVE_MAX_SITES and side >= 3 else FREE


@handle_errors
def cmd_upper(run_config: RunConfig) -> int:
    """有限格点精确基态采样"""
    if run_config.dimension is None or run_config.side is None:
        raise ConfigException("需要指定 --dim 与 --L")
    boundary = resolve_boundary(run_config.dimension, run_config.side, run_config.boundary)
    run_config = run_config.model_copy(update={"boundary": boundary})
    # 有限格点的上界不依赖中心化假设
    dist = BoundsService.parse_distribution_spec(run_config.distribution or "bernoulli", allow_noncentered=True)

    summary, records = ExactGroundStateService.sample_upper_bound(
        run_config.dimension,
        run_config.side,
        boundary,
        dist,
        samples=run_config.samples or 200,
        seed=run_config.seed,
        threads=run_config.threads,
        precision=run_config.precision,
    )

    if run_config.output_format == "csv":
        text = render_csv(SAMPLE_CSV_HEADER, [
            [r.sample, r.seed, r.energy.num, r.energy.den, r.per_site] for r in records
        ], run_config)
    elif run_config.output_format == "human":
        text = (
            f"d={summary.dimension} L={summary.side} {summary.boundary}, 分布 {summary.distribution}, "
            f"{summary.samples} 个样本, 种子 {summary.seed}\n"
            f"mean energy per site: {summary.mean_per_site.decimal} ± {summary.stderr}\n"
        )
        if summary.literature_estimate:
            text += f"literature Monte-Carlo estimate (not asserted): {summary.literature_estimate}\n"
        text = render_human(text + f"note: {summary.note}\n", run_config)
    else:
        header = {"record": "header", "schema": config.SCHEMA_VERSION, "tool": config.APP_NAME,
                  "version": config.APP_VERSION, "config": run_config.echo()}
        text = render_json_lines(
            [header] + [r.model_dump(mode="json") for r in records] + [summary.model_dump(mode="json")]
        )
    emit(text, run_config.output)
    return ExitCode.SUCCESS

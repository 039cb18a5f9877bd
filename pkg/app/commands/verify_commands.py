"""
校验与分析命令：verify、analyze frustration
"""
import logging

from app.commands.output import emit, handle_errors, render_csv, render_human, render_json, render_table
from app.commands.upper_commands import resolve_boundary
from app.schemas.run_config import RunConfig
from app.services.bounds_service import BoundsService
from app.services.classical_cell_service import ClassicalCellService
from app.services.exact_gs_service import ExactGroundStateService
from app.services.lattice_service import LatticeService
from app.services.verify_service import VerifyService
from app.utils.rational import format_fraction
from app.utils.response import ExitCode, VerificationFailed
from config import config

logger = logging.getLogger(__name__)


@handle_errors
def cmd_verify(run_config: RunConfig) -> int:
    """运行性质校验套件，输出通过/失败表；存在失败项时退出码为 1"""
    report = VerifyService.run_suite(
        seed=run_config.seed, samples=run_config.samples or 100, threads=run_config.threads
    )

    if run_config.output_format == "json":
        text = render_json(report.model_dump(mode="json"), run_config)
    elif run_config.output_format == "csv":
        text = render_csv(("check", "passed", "summary"),
                          [[c.name, "true" if c.passed else "false", c.summary] for c in report.checks], run_config)
    else:
        rows = [["PASS" if c.passed else "FAIL", c.name, c.summary] for c in report.checks]
        passed = sum(1 for c in report.checks if c.passed)
        summary = f"{passed}/{len(report.checks)} 项通过 (seed {report.seed})\n"
        text = render_human(render_table(rows) + summary, run_config)
    emit(text, run_config.output)

    if not report.passed:
        raise VerificationFailed(f"校验未全部通过: {', '.join(report.failures)}")
    return ExitCode.SUCCESS


def _census_data(dimension: int) -> dict:
    geometry = LatticeService.make_cell(dimension)
    census = ClassicalCellService.frustration_census(geometry)
    return {
        "cell": geometry.name,
        "patterns": 2 ** geometry.n_bonds,
        "by_frustrated_faces": {
            str(count): {"patterns": sum(histogram.values()),
                         "ground_energies": {str(e): n for e, n in histogram.items()}}
            for count, histogram in census.items()
        },
    }


@handle_errors
def cmd_analyze_frustration(run_config: RunConfig) -> int:
    """阻挫分析：元格能量、单元阻挫计数，以及（给定 --L 时）一个抽样格点的阻挫统计"""
    dimensions = [run_config.dimension] if run_config.dimension else [2, 3]
    plaquette = ClassicalCellService.plaquette_energies()
    data = {
        "plaquette_energies": {k: format_fraction(v) for k, v in plaquette.items()},
        "census": [_census_data(d) for d in dimensions],
    }

    if run_config.side is not None:
        dimension = run_config.dimension or 2
        boundary = resolve_boundary(dimension, run_config.side, run_config.boundary)
        lattice = LatticeService.make_lattice(dimension, (run_config.side,) * dimension, boundary)
        dist = BoundsService.parse_distribution_spec(run_config.distribution or "bernoulli", allow_noncentered=True)
        seed = config.DEFAULT_SEED if run_config.seed is None else run_config.seed
        instance = ExactGroundStateService.draw_instance(lattice, dist, seed, 0)
        data["lattice"] = {**lattice.to_dict(), "seed": seed,
                           **ExactGroundStateService.lattice_frustration(instance)}

    if run_config.output_format == "json":
        text = render_json(data, run_config)
    elif run_config.output_format == "csv":
        rows = []
        for entry in data["census"]:
            for count, info in entry["by_frustrated_faces"].items():
                for energy, n in info["ground_energies"].items():
                    rows.append([entry["cell"], count, energy, n])
        text = render_csv(("cell", "frustrated_faces", "ground_energy", "patterns"), rows, run_config)
    else:
        text = (f"plaquette minimum energy: frustrated {data['plaquette_energies']['frustrated']}, "
                f"unfrustrated {data['plaquette_energies']['unfrustrated']}\n")
        for entry in data["census"]:
            text += f"{entry['cell']} ({entry['patterns']} 个符号模式):\n"
            rows = [["frustrated faces", "patterns", "ground energies"]]
            rows += [[count, info["patterns"], ", ".join(f"{e}×{n}" for e, n in info["ground_energies"].items())]
                     for count, info in entry["by_frustrated_faces"].items()]
            text += render_table(rows)
        if "lattice" in data:
            lattice_data = data["lattice"]
            text += (f"lattice {lattice_data['side_lengths']} {lattice_data['boundary']} (seed {lattice_data['seed']}): "
                     f"{lattice_data['frustrated']}/{lattice_data['plaquettes']} 个元格阻挫 ({lattice_data['fraction']})\n")
            if "odd_parity_cubes" in lattice_data:
                text += f"odd-parity cubes: {lattice_data['odd_parity_cubes']}/{lattice_data['cubes']}\n"
        text = render_human(text, run_config)
    emit(text, run_config.output)
    return ExitCode.SUCCESS

"""
命令输出工具：结果封装、CSV/JSON-lines 渲染、写入文件或标准输出、异常 → 退出码
"""
import csv
import functools
import io
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Iterable, List, Optional, Sequence

from app.schemas.run_config import RunConfig
from app.utils.response import EABoundsException, ExitCode, ResultEnvelope
from config import config

logger = logging.getLogger(__name__)


def provenance(run_config: RunConfig) -> str:
    """工具名、版本、schema 与配置回显（紧凑 JSON，键排序）"""
    echo = json.dumps(run_config.echo(), ensure_ascii=False, sort_keys=True, separators=(",", ":"))
    return f"{config.APP_NAME} {config.APP_VERSION} {config.SCHEMA_VERSION} config={echo}"


def render_json(data: Any, run_config: RunConfig) -> str:
    """统一外壳 {schema, tool, version, config, data}"""
    return ResultEnvelope(data, run_config.echo()).to_json() + "\n"


def render_human(text: str, run_config: RunConfig) -> str:
    """人类可读输出：首行为来源信息"""
    return provenance(run_config) + "\n" + text


def render_json_lines(records: Iterable[dict]) -> str:
    """每条记录一行紧凑 JSON（键排序）"""
    return "".join(json.dumps(r, ensure_ascii=False, sort_keys=True, separators=(",", ":")) + "\n" for r in records)


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], run_config: Optional[RunConfig] = None) -> str:
    """表头在首行；给出 run_config 时追加一行 `#` 开头的来源信息"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    if run_config is not None:
        buffer.write("# " + provenance(run_config) + "\n")
    return buffer.getvalue()


def render_table(rows: List[Sequence[str]], indent: str = "  ") -> str:
    """左对齐的纯文本表格"""
    if not rows:
        return ""
    widths = [max(len(str(row[c])) for row in rows) for c in range(len(rows[0]))]
    lines = []
    for row in rows:
        cells = [str(cell).ljust(width) for cell, width in zip(row, widths)]
        lines.append(indent + "  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


def emit(text: str, output: Optional[str] = None) -> None:
    """写入输出文件（UTF-8，\\n 换行）或标准输出"""
    if output:
        Path(output).write_text(text, encoding="utf-8", newline="\n")
        logger.info(f"结果已写入 {output}")
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def handle_errors(func: Callable[[RunConfig], int]) -> Callable[[RunConfig], int]:
    """命令异常处理：自定义异常 → 对应退出码，消息写到标准错误"""

    @functools.wraps(func)
    def wrapper(run_config: RunConfig) -> int:
        try:
            return func(run_config)
        except EABoundsException as e:
            logger.debug(f"命令 {run_config.subcommand} 失败: {e.to_response()}")
            sys.stderr.write(f"error: {e.message}\n")
            return e.code
        except OSError as e:
            sys.stderr.write(f"error: {e}\n")
            return ExitCode.CONFIG_ERROR

    return wrapper

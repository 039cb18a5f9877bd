"""
确定性并行工具
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, Tuple, TypeVar

from config import config

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def split_range(total: int, chunk_size: int) -> List[Tuple[int, int]]:
    """
    将 [0, total) 按固定块大小切分

    块的划分只取决于 total 与 chunk_size，与线程数无关。
    """
    if chunk_size <= 0:
        raise ValueError("chunk_size 必须为正")
    return [(start, min(start + chunk_size, total)) for start in range(0, total, chunk_size)]


def resolve_threads(threads: int = None) -> int:
    """线程数：None 表示使用配置默认值"""
    if threads is None:
        threads = config.DEFAULT_THREADS
    return max(1, int(threads))


def ordered_map(func: Callable[[T], R], tasks: Sequence[T], threads: int = None) -> List[R]:
    """
    并行执行并按任务索引返回结果

    numpy/LAPACK 计算会释放 GIL，线程池即可获得并行度；
    结果顺序固定，调用方按索引归约即可得到与单线程完全一致的结果。

    Args:
        func: 任务函数
        tasks: 任务列表
        threads: 最大工作线程数

    Returns:
        List[R]: 与 tasks 同序的结果
    """
    workers = min(resolve_threads(threads), max(1, len(tasks)))
    if workers == 1:
        return [func(task) for task in tasks]

    logger.debug(f"并行执行 {len(tasks)} 个任务，线程数 {workers}")
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, tasks))

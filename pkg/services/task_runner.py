"""
并行任务执行
Bounded asyncio worker pool for independent (code, region, ℓ) tasks.

Each task runs its blocking numerics in a worker thread; a semaphore caps the
number in flight. Outcomes are returned sorted by task key, so aggregation does
not depend on completion order.
"""
import asyncio
import logging
import time
from dataclasses import dataclass, field
from typing import Any, Awaitable, Callable, Dict, List, Optional, Sequence

from models.config import config

logger = logging.getLogger(__name__)


@dataclass
class Task:
    key: str
    func: Callable[..., Any]
    args: tuple = ()
    kwargs: Dict[str, Any] = field(default_factory=dict)


@dataclass
class TaskOutcome:
    key: str
    result: Any = None
    error: Optional[BaseException] = None
    wall_seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return self.error is None


async def run_tasks(tasks: Sequence[Task], jobs: int = None) -> List[TaskOutcome]:
    """
    并行执行任务

    Args:
        tasks: 任务列表，key 必须唯一
        jobs: 最大并发数，默认 config.DEFAULT_JOBS

    Returns:
        按 key 排序的结果；异常记录在 TaskOutcome.error 中而不抛出
    """
    jobs = max(1, jobs or config.DEFAULT_JOBS)
    keys = [t.key for t in tasks]
    if len(set(keys)) != len(keys):
        raise ValueError("任务 key 重复")
    semaphore = asyncio.Semaphore(jobs)

    async def run_one(task: Task) -> TaskOutcome:
        async with semaphore:
            start = time.perf_counter()
            try:
                result = await asyncio.to_thread(task.func, *task.args, **task.kwargs)
            except Exception as e:
                logger.error(f"❌ 任务失败: {task.key} - {str(e)}")
                return TaskOutcome(task.key, error=e, wall_seconds=time.perf_counter() - start)
            return TaskOutcome(task.key, result=result, wall_seconds=time.perf_counter() - start)

    start_time = time.time()
    results = await asyncio.gather(*(run_one(t) for t in tasks), return_exceptions=True)
    elapsed = time.time() - start_time
    outcomes = []
    for task, item in zip(tasks, results):
        if isinstance(item, BaseException):
            outcomes.append(TaskOutcome(task.key, error=item))
        else:
            outcomes.append(item)
    logger.debug(f"并行任务完成: {len(tasks)} 个, 并发 {jobs}, 耗时 {elapsed:.2f}s")
    return sorted(outcomes, key=lambda o: o.key)


async def run_coroutines(items: Dict[str, Callable[[], Awaitable[Any]]], jobs: int = None) -> Dict[str, Any]:
    """受限并发执行协程工厂（用于异步写文件等）"""
    semaphore = asyncio.Semaphore(max(1, jobs or config.DEFAULT_JOBS))

    async def guarded(factory):
        async with semaphore:
            return await factory()

    keys = sorted(items)
    results = await asyncio.gather(*(guarded(items[k]) for k in keys), return_exceptions=True)
    return dict(zip(keys, results))

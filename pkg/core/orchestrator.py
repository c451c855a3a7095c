"""
Instance Orchestration

Runs the smoothing instances of one plan concurrently. Every instance is
independent: it reads the unsmoothed plan and writes only its own result,
so instances are handed to worker threads and gathered back in order.
"""

import asyncio
import logging
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from config.config import RunConfig
from .errors import SmootherError
from .field_plan import FieldLayout, assemble_coverage_plan
from .geometry import PathPolyline
from .reference_gen import EdgySegment, detect_edgy_segments
from .smoother import InstanceResult, smooth_instance

logger = logging.getLogger(__name__)


class InstanceStatus(Enum):
    """Lifecycle of one smoothing instance"""
    PENDING = "pending"
    RUNNING = "running"
    SOLVED = "solved"
    FAILED = "failed"


@dataclass(frozen=True)
class SmoothingTask:
    segment: EdgySegment
    path: PathPolyline
    cfg: RunConfig
    contour: Any
    headland: Any = None
    dump_dir: Optional[str] = None

    @property
    def task_id(self) -> str:
        return self.segment.segment_id


TaskOutcome = Union[InstanceResult, BaseException]


class InstanceOrchestrator:
    """Solves smoothing tasks on a bounded pool of worker threads"""

    def __init__(self, max_workers: int = 1):
        if max_workers < 1:
            raise ValueError(f"max_workers must be at least 1, got {max_workers}")
        self.max_workers = max_workers
        self.statuses: Dict[str, InstanceStatus] = {}
        self.errors: Dict[str, str] = {}
        self.started: Optional[datetime] = None
        self.finished: Optional[datetime] = None

    def _run_one(self, task: SmoothingTask) -> InstanceResult:
        self.statuses[task.task_id] = InstanceStatus.RUNNING
        try:
            result = smooth_instance(task.segment, task.path, task.cfg, task.contour,
                                     task.headland, task.dump_dir)
        except Exception as e:
            self.statuses[task.task_id] = InstanceStatus.FAILED
            self.errors[task.task_id] = str(e)
            level = logging.ERROR if isinstance(e, SmootherError) else logging.CRITICAL
            logger.log(level, f"Instance {task.task_id} failed: {e}")
            raise
        self.statuses[task.task_id] = InstanceStatus.SOLVED
        return result

    async def _gather(self, tasks: Sequence[SmoothingTask]) -> List[TaskOutcome]:
        semaphore = asyncio.Semaphore(self.max_workers)

        async def bounded(task: SmoothingTask) -> InstanceResult:
            async with semaphore:
                return await asyncio.to_thread(self._run_one, task)

        return await asyncio.gather(*(bounded(t) for t in tasks), return_exceptions=True)

    def smooth_all(self, tasks: Sequence[SmoothingTask]) -> List[TaskOutcome]:
        """
        Solve every task; the returned list is in task order and holds
        either an InstanceResult or the exception that task raised.
        """
        self.statuses = {t.task_id: InstanceStatus.PENDING for t in tasks}
        self.errors = {}
        self.started = datetime.now()
        if not tasks:
            self.finished = self.started
            return []
        if self.max_workers == 1:
            outcomes: List[TaskOutcome] = []
            for task in tasks:
                try:
                    outcomes.append(self._run_one(task))
                except Exception as e:
                    outcomes.append(e)
        else:
            outcomes = asyncio.run(self._gather(tasks))
        self.finished = datetime.now()
        solved = sum(1 for o in outcomes if not isinstance(o, BaseException))
        logger.info(f"Solved {solved}/{len(tasks)} instances with {self.max_workers} worker(s)")
        return outcomes

    def get_status(self) -> Dict[str, Any]:
        """Counts per status plus the error text of failed instances"""
        counts = {status.value: 0 for status in InstanceStatus}
        for status in self.statuses.values():
            counts[status.value] += 1
        return {
            "total_instances": len(self.statuses),
            "status_counts": counts,
            "max_workers": self.max_workers,
            "failures": dict(self.errors),
            "started": self.started.isoformat() if self.started else None,
            "finished": self.finished.isoformat() if self.finished else None,
        }


def detection_parameters(cfg: RunConfig) -> Dict[str, float]:
    """Edge threshold, cluster merge distance, segment margins and the radius the transition margins scale with"""
    r_min = cfg.min_turning_radius
    w = cfg.operating_width_m
    merge = 3.0 * r_min if cfg.turn_mode == "headland" else max(3.0 * r_min, 1.5 * w)
    return {
        "theta": cfg.theta_edge,
        "merge_distance": merge,
        "corner_margin": max(2.0 * r_min, 0.5 * w),
        "transition_margin": cfg.r_dubins + cfg.l_ext,
        "dubins_radius": cfg.r_dubins,
    }


def prepare_tasks(layout: FieldLayout, cfg: RunConfig, dump_dir: Optional[str] = None,
                  plan: Optional[PathPolyline] = None) -> Tuple[PathPolyline, List[EdgySegment], List[SmoothingTask]]:
    """Assemble the coverage plan (unless given), detect its edgy segments and wrap them as tasks"""
    if plan is None:
        plan = assemble_coverage_plan(layout, cfg.ds_m, cfg.turn_mode)
    segments = detect_edgy_segments(plan, path_id="plan", **detection_parameters(cfg))
    tasks = [SmoothingTask(seg, plan, cfg, layout.contour, layout.headland.vertices, dump_dir) for seg in segments]
    return plan, segments, tasks

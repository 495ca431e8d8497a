from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, TypeVar, Union
from dataclasses import dataclass, field
from datetime import datetime
from concurrent.futures import ThreadPoolExecutor
import logging
import math
import time

from .check import CheckStatus, VerificationCheck

T = TypeVar("T")

# trial คืน deviation หรือ (deviation, payload)
TrialFunction = Callable[[T], Union[float, Tuple[float, Dict[str, Any]]]]


@dataclass
class TrialRecord:
    """ผลของ trial หนึ่งครั้ง"""
    index: int
    deviation: float
    passed: bool
    duration: float
    error: Optional[str] = None
    payload: Dict[str, Any] = field(default_factory=dict)


class ExecutionContext:
    """ข้อมูลการทำงานสะสมของ RunManager"""

    def __init__(self):
        self.start_time = datetime.now()
        self.total_trials = 0
        self.passed_count = 0
        self.failed_count = 0
        self.error_count = 0
        self.last_trial_duration = 0.0
        self.average_trial_duration = 0.0
        self.suites_run = 0

    def record(self, trial: TrialRecord) -> None:
        self.total_trials += 1
        self.last_trial_duration = trial.duration
        self.average_trial_duration = (
            (self.average_trial_duration * (self.total_trials - 1) + trial.duration)
            / self.total_trials
        )
        if trial.error is not None:
            self.error_count += 1
        elif trial.passed:
            self.passed_count += 1
        else:
            self.failed_count += 1


class RunManager:
    """
    จัดการการรัน trial แบบขนานและ check suite

    trial แต่ละตัวต้องไม่ขึ้นต่อกัน ผลลัพธ์เรียงตาม index เสมอ
    ไม่ขึ้นกับลำดับที่ thread ทำงานเสร็จ
    """

    def __init__(self, max_workers: int = 4, log_level: Optional[int] = None):
        self.max_workers = max_workers
        self.executor = ThreadPoolExecutor(max_workers=max_workers)
        self.context = ExecutionContext()

        self.logger = logging.getLogger("RunManager")
        if log_level is not None:
            self.logger.setLevel(log_level)

    def __enter__(self) -> "RunManager":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.shutdown()

    def shutdown(self) -> None:
        self.executor.shutdown(wait=True)

    def _run_one(self, index: int, func: TrialFunction, item: T, tolerance: float) -> TrialRecord:
        start = time.perf_counter()
        try:
            outcome = func(item)
            payload: Dict[str, Any] = {}
            if isinstance(outcome, tuple):
                outcome, payload = outcome
            deviation = float(outcome)
            passed = math.isfinite(deviation) and deviation < tolerance
            return TrialRecord(index, deviation, passed, time.perf_counter() - start, payload=payload)
        except Exception as e:
            self.logger.error(f"Trial {index} raised {type(e).__name__}: {e}")
            return TrialRecord(index, math.inf, False, time.perf_counter() - start,
                               error=f"{type(e).__name__}: {e}")

    def run_trials(
        self,
        func: TrialFunction,
        items: Sequence[T],
        tolerance: float
    ) -> List[TrialRecord]:
        """
        รัน func กับ input แต่ละตัวใน thread pool

        Args:
            func: คืนค่า deviation ของ trial หรือ (deviation, payload)
            items: input ที่สร้างไว้ล่วงหน้า (สร้างจาก seed ตามลำดับ)
            tolerance: trial ผ่านเมื่อ deviation < tolerance

        Returns:
            List[TrialRecord]: เรียงตาม index ของ input
        """
        self.logger.info(f"Running {len(items)} trials on {self.max_workers} workers")
        futures = [
            self.executor.submit(self._run_one, index, func, item, tolerance)
            for index, item in enumerate(items)
        ]
        records = [future.result() for future in futures]
        for record in records:
            self.context.record(record)
        return records

    def run_suite(self, suite: VerificationCheck) -> CheckStatus:
        self.logger.info(f"Running check suite '{suite.name}'")
        status = suite.run()
        self.context.suites_run += 1
        self.logger.info(f"Suite '{suite.name}' finished with status {status.name}")
        return status

    def get_stats(self) -> Dict[str, Any]:
        """สถิติการทำงาน (ไม่รวมเวลา เพื่อให้ report ซ้ำได้ทุกครั้ง)"""
        return {
            "total_trials": self.context.total_trials,
            "passed_count": self.context.passed_count,
            "failed_count": self.context.failed_count,
            "error_count": self.context.error_count,
            "suites_run": self.context.suites_run,
        }

    def get_timing(self) -> Dict[str, float]:
        return {
            "average_trial_duration": self.context.average_trial_duration,
            "last_trial_duration": self.context.last_trial_duration,
            "uptime": (datetime.now() - self.context.start_time).total_seconds(),
        }

from abc import ABC, abstractmethod
from enum import Enum, auto
from typing import Any, Callable, Dict, List, Optional, Tuple, Union
from dataclasses import dataclass, field
import logging
import math
import time


class CheckStatus(Enum):
    """สถานะของ verification check"""
    PENDING = auto()
    PASSED = auto()
    FAILED = auto()
    SKIPPED = auto()  # precondition ไม่ผ่าน หรือ suite หยุดก่อน
    ERROR = auto()    # เกิด exception ระหว่างทำงาน


class SuitePolicy(Enum):
    """นโยบายของ CheckSuite เมื่อ check ลูกไม่ผ่าน"""
    REQUIRE_ALL = auto()           # หยุดที่ check แรกที่ไม่ผ่าน
    CONTINUE_ON_FAILURE = auto()   # ทำทุก check แล้วสรุปผล


@dataclass
class CheckMetadata:
    """สถิติการทำงานของ check"""
    total_runs: int = 0
    passed_count: int = 0
    failed_count: int = 0
    error_count: int = 0
    last_status: Optional[CheckStatus] = None

    def update_run_stats(self, status: CheckStatus) -> None:
        self.total_runs += 1

        if status == CheckStatus.PASSED:
            self.passed_count += 1
        elif status == CheckStatus.FAILED:
            self.failed_count += 1
        elif status == CheckStatus.ERROR:
            self.error_count += 1
        self.last_status = status


@dataclass
class CheckResult:
    """ผลลัพธ์ของ check หนึ่งตัว"""
    path: str
    status: CheckStatus
    deviation: Optional[float] = None
    tolerance: Optional[float] = None
    detail: Dict[str, Any] = field(default_factory=dict)
    error: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "path": self.path,
            "status": self.status.name.lower(),
            "deviation": self.deviation,
            "tolerance": self.tolerance,
            "detail": self.detail,
            "error": self.error,
        }


class VerificationCheck(ABC):
    """
    Base class ของ check ทั้งหมด

    Attributes:
        name: ชื่อของ check
        properties: ข้อมูลเพิ่มเติมที่แสดงใน report
        status: สถานะล่าสุด
        parent: suite ที่ check นี้อยู่
        metadata: สถิติการทำงาน
    """

    def __init__(
        self,
        name: str,
        properties: Optional[Dict[str, Any]] = None,
        preconditions: Optional[List[Callable[[], bool]]] = None
    ):
        self.name = name
        self.properties = properties or {}
        self.status = CheckStatus.PENDING
        self.parent: Optional['CheckSuite'] = None
        self.preconditions = preconditions or []
        self.result: Optional[CheckResult] = None

        self.logger = logging.getLogger(f"Check.{name}")
        self.metadata = CheckMetadata()

    def _check_preconditions(self) -> bool:
        for condition in self.preconditions:
            try:
                if not condition():
                    return False
            except Exception as e:
                self.logger.error(f"Error in precondition: {e}")
                return False
        return True

    def run(self) -> CheckStatus:
        """
        ทำ check หนึ่งรอบ

        Returns:
            CheckStatus: สถานะหลังทำงาน
        """
        if not self._check_preconditions():
            self.status = CheckStatus.SKIPPED
            self.result = CheckResult(self.get_path(), self.status)
            return self.status

        start = time.perf_counter()
        try:
            self.result = self._run()
            self.status = self.result.status
        except Exception as e:
            self.logger.error(f"Error during check: {e}")
            self.status = CheckStatus.ERROR
            self.result = CheckResult(self.get_path(), self.status, error=f"{type(e).__name__}: {e}")
        finally:
            duration = time.perf_counter() - start
            self.metadata.update_run_stats(self.status)

        self.logger.debug(f"{self.get_path()} -> {self.status.name} in {duration:.4f}s")
        return self.status

    @abstractmethod
    def _run(self) -> CheckResult:
        pass

    def reset(self) -> None:
        self.status = CheckStatus.PENDING
        self.result = None

    def get_path(self) -> str:
        if self.parent is None:
            return self.name
        return f"{self.parent.get_path()}/{self.name}"

    def results(self) -> List[CheckResult]:
        return [self.result] if self.result is not None else []

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(name='{self.name}', status={self.status.name})"


# FunctionCheck รับ callable ที่คืน deviation หรือ (deviation, detail)
CheckFunction = Callable[[], Union[float, Tuple[float, Dict[str, Any]]]]


class FunctionCheck(VerificationCheck):
    """
    check ที่ผ่านเมื่อค่าที่ callable คืนมาน้อยกว่า tolerance

    ถ้า require_above=True จะผ่านเมื่อค่ามากกว่า tolerance แทน
    (ใช้กับ witness ที่ต้องมี gap อย่างน้อยค่าหนึ่ง)
    """

    def __init__(
        self,
        name: str,
        func: CheckFunction,
        tolerance: float,
        properties: Optional[Dict[str, Any]] = None,
        preconditions: Optional[List[Callable[[], bool]]] = None,
        require_above: bool = False
    ):
        super().__init__(name, properties, preconditions)
        self.func = func
        self.tolerance = tolerance
        self.require_above = require_above

    def _run(self) -> CheckResult:
        outcome = self.func()
        if isinstance(outcome, tuple):
            deviation, detail = outcome
        else:
            deviation, detail = outcome, {}
        deviation = float(deviation)
        if self.require_above:
            passed = math.isfinite(deviation) and deviation > self.tolerance
        else:
            passed = math.isfinite(deviation) and deviation < self.tolerance
        return CheckResult(
            path=self.get_path(),
            status=CheckStatus.PASSED if passed else CheckStatus.FAILED,
            deviation=deviation,
            tolerance=self.tolerance,
            detail={**self.properties, **detail},
        )


class CheckSuite(VerificationCheck):
    """
    check ที่มี check ลูก

    Attributes:
        children: check ลูกตามลำดับที่จะทำงาน
        policy: นโยบายเมื่อ check ลูกไม่ผ่าน
    """

    def __init__(
        self,
        name: str,
        policy: SuitePolicy = SuitePolicy.CONTINUE_ON_FAILURE,
        properties: Optional[Dict[str, Any]] = None,
        preconditions: Optional[List[Callable[[], bool]]] = None
    ):
        super().__init__(name, properties, preconditions)
        self.children: List[VerificationCheck] = []
        self.policy = policy

    def add_child(self, child: VerificationCheck) -> 'CheckSuite':
        child.parent = self
        self.children.append(child)
        return self

    def _run(self) -> CheckResult:
        counts = {status: 0 for status in CheckStatus}
        stopped = False
        for child in self.children:
            if stopped:
                child.status = CheckStatus.SKIPPED
                child.result = CheckResult(child.get_path(), CheckStatus.SKIPPED)
                counts[CheckStatus.SKIPPED] += 1
                continue
            status = child.run()
            counts[status] += 1
            if status in (CheckStatus.FAILED, CheckStatus.ERROR) and self.policy == SuitePolicy.REQUIRE_ALL:
                self.logger.warning(f"Stopping suite at {child.get_path()} ({status.name})")
                stopped = True

        if counts[CheckStatus.ERROR]:
            status = CheckStatus.ERROR
        elif counts[CheckStatus.FAILED] or stopped:
            status = CheckStatus.FAILED
        else:
            status = CheckStatus.PASSED
        return CheckResult(
            path=self.get_path(),
            status=status,
            detail={s.name.lower(): c for s, c in counts.items() if c},
        )

    def reset(self) -> None:
        super().reset()
        for child in self.children:
            child.reset()

    def results(self) -> List[CheckResult]:
        """ผลของ suite และ check ลูกทั้งหมด (pre-order)"""
        collected = super().results()
        for child in self.children:
            collected.extend(child.results())
        return collected

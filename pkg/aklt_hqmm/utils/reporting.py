from typing import Any, Dict, List, Optional, Sequence, TextIO
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
import csv
import io
import json
import logging
import math
import sys

import numpy as np

from ..core.check import CheckResult, CheckStatus, CheckSuite, VerificationCheck


class ReportFormat(Enum):
    """รูปแบบ report ที่รองรับ"""
    CSV = "csv"
    JSON = "json"


def format_number(value: Any) -> str:
    """ตัวเลขใน CSV ใช้ 17 significant digits"""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (complex, np.complexfloating)):
        return f"{format(value.real, '.17g')}{format(value.imag, '+.17g')}j"
    return str(value)


def to_jsonable(value: Any) -> Any:
    """แปลงค่าของ numpy/complex ให้อยู่ในรูปที่ json เขียนได้"""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [to_jsonable(value.real), to_jsonable(value.imag)]
    if isinstance(value, Enum):
        return value.value
    return value


@dataclass
class ReportTable:
    columns: List[str]
    rows: List[Sequence[Any]] = field(default_factory=list)

    def add_row(self, *values: Any) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"Row has {len(values)} values, table has {len(self.columns)} columns")
        self.rows.append(values)


@dataclass
class Report:
    """
    ผลลัพธ์ของคำสั่งหนึ่งครั้ง

    Attributes:
        command: ชื่อคำสั่ง
        tables: ตารางตามลำดับที่จะแสดง
        summary: ค่าสรุป (key -> value)
        notes: ข้อความเพิ่มเติม (แสดงเป็น comment ใน CSV)
    """
    command: str
    tables: Dict[str, ReportTable] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    def table(self, name: str, columns: Sequence[str]) -> ReportTable:
        self.tables[name] = ReportTable(list(columns))
        return self.tables[name]


class ReportWriter:
    """
    เขียน Report เป็น CSV หรือ JSON

    input เดียวกันให้ output เหมือนกันทุก byte (JSON ใช้ sort_keys)
    """

    def __init__(self, format: ReportFormat = ReportFormat.CSV):
        self.format = format
        self.logger = logging.getLogger("ReportWriter")

    def render(self, report: Report) -> str:
        if self.format == ReportFormat.JSON:
            return self._render_json(report)
        return self._render_csv(report)

    def _render_csv(self, report: Report) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        for note in report.notes:
            for line in note.splitlines():
                buffer.write(f"# {line}\n")
        for name, table in report.tables.items():
            buffer.write(f"# {name}\n")
            writer.writerow(table.columns)
            for row in table.rows:
                writer.writerow([format_number(v) for v in row])
        if report.summary:
            buffer.write("# summary\n")
            writer.writerow(["key", "value"])
            for key in sorted(report.summary):
                value = report.summary[key]
                if isinstance(value, (dict, list)):
                    value = json.dumps(to_jsonable(value), sort_keys=True)
                writer.writerow([key, format_number(value)])
        return buffer.getvalue()

    def _render_json(self, report: Report) -> str:
        payload = {
            "command": report.command,
            "tables": {
                name: [dict(zip(table.columns, row)) for row in table.rows]
                for name, table in report.tables.items()
            },
            "summary": report.summary,
        }
        if report.notes:
            payload["notes"] = report.notes
        return json.dumps(to_jsonable(payload), indent=2, sort_keys=True) + "\n"

    def write(self, report: Report, out_path: Optional[str] = None, stream: Optional[TextIO] = None) -> None:
        """render ทั้ง report ก่อนแล้วจึงเขียนครั้งเดียว"""
        text = self.render(report)
        if out_path:
            Path(out_path).write_text(text, encoding="utf-8")
            self.logger.info(f"Report written to {out_path}")
        else:
            (stream or sys.stdout).write(text)


class SuiteRenderer:
    """แสดงผล CheckSuite เป็นข้อความ"""

    def create_ascii(self, root: VerificationCheck) -> str:
        """แผนภาพ ASCII ของ suite พร้อมสถานะ"""
        output = []

        def add_check(check: VerificationCheck, prefix: str = "", is_last: bool = True):
            connector = "└── " if is_last else "├── "
            line = f"{prefix}{connector}{check.name} ({check.status.name})"
            if check.result is not None and check.result.deviation is not None:
                line += f" value={check.result.deviation:.3e}"
            output.append(line)

            if isinstance(check, CheckSuite):
                for i, child in enumerate(check.children):
                    new_prefix = prefix + ("    " if is_last else "│   ")
                    add_check(child, new_prefix, i == len(check.children) - 1)

        add_check(root)
        return "\n".join(output)

    def generate_metrics_report(self, root: VerificationCheck) -> Dict[str, Any]:
        """สรุปจำนวน check ตามสถานะ"""
        leaves: List[CheckResult] = []

        def collect(check: VerificationCheck):
            if isinstance(check, CheckSuite):
                for child in check.children:
                    collect(child)
            elif check.result is not None:
                leaves.append(check.result)

        collect(root)
        status_counts = {status.name.lower(): 0 for status in CheckStatus}
        for result in leaves:
            status_counts[result.status.name.lower()] += 1
        failing = [r.path for r in leaves if r.status in (CheckStatus.FAILED, CheckStatus.ERROR)]
        return {
            "total_checks": len(leaves),
            "status_distribution": status_counts,
            "failing_checks": failing,
        }

"""
Report emission for laboratory runs.
Writes report.json, summary.txt, reports.csv and one CSV per scan.

File schema (version 1):
    report.json   schema_version, generated_at, environment, suite, passed,
                  config, reports, scans, errors, results
    summary.txt   one line per report and scan: status, name, margin
    reports.csv   name,lhs,rhs,margin,tolerance,truncation_defect,passed
    scan_*.csv    parameter,value,deviation
    side files    matrices above MAX_INLINE_SIDE on an axis go to .npy,
                  row tables longer than MAX_INLINE_ROWS go to .csv
"""
import csv
import json
import logging
import math
import os
import platform
import re
import sys
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

import numpy as np
import scipy

from core.config import RunConfig
from core.errors import ReportError
from core.reports import InequalityReport, ScanResult

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
MAX_INLINE_SIDE = 64
MAX_INLINE_ROWS = 64

REPORT_COLUMNS = ["name", "lhs", "rhs", "margin", "tolerance", "truncation_defect", "passed"]
SCAN_COLUMNS = ["parameter", "value", "deviation"]


def slugify(name: str) -> str:
    """File-system safe form of a report or scan name."""
    slug = re.sub(r"[^A-Za-z0-9.+-]+", "_", name).strip("_")
    return slug or "unnamed"


def environment_metadata() -> Dict[str, str]:
    return {
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platform": platform.platform(),
    }


def _number(value: float) -> Any:
    # JSON has no inf/nan
    if math.isfinite(value):
        return value
    return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")


class ReportWriter:
    """
    Serializes a pipeline outcome into an output directory.

    Large arrays and long tables are moved to side files and replaced in the
    JSON by {"path": ...} references relative to the output directory.
    """

    def __init__(self, out_dir: str):
        """
        Initialize the writer.

        Args:
            out_dir: output directory, created if missing
        """
        self.out_dir = out_dir
        self.side_files: List[str] = []

    def _prepare_dir(self) -> None:
        try:
            os.makedirs(self.out_dir, exist_ok=True)
        except OSError as exc:
            raise ReportError(f"cannot create output directory {self.out_dir}: {exc}") from exc
        if not os.access(self.out_dir, os.W_OK):
            raise ReportError(f"output directory is not writable: {self.out_dir}")

    def _path(self, filename: str) -> str:
        return os.path.join(self.out_dir, filename)

    def _write_text(self, filename: str, text: str) -> None:
        try:
            with open(self._path(filename), "w", encoding="utf-8", newline="\n") as handle:
                handle.write(text)
        except OSError as exc:
            raise ReportError(f"cannot write {filename}: {exc}") from exc

    def _write_csv(self, filename: str, columns: List[str], rows: List[Dict[str, Any]]) -> None:
        try:
            with open(self._path(filename), "w", encoding="utf-8", newline="") as handle:
                writer = csv.DictWriter(handle, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
                writer.writeheader()
                for row in rows:
                    writer.writerow({key: self._cell(row.get(key, "")) for key in columns})
        except OSError as exc:
            raise ReportError(f"cannot write {filename}: {exc}") from exc

    @staticmethod
    def _cell(value: Any) -> Any:
        if isinstance(value, (float, np.floating)):
            return repr(float(value))
        if isinstance(value, (bool, np.bool_)):
            return "true" if value else "false"
        return value

    def sanitize(self, value: Any, key: str) -> Any:
        """
        Convert a value into JSON-ready data.

        Args:
            value: arbitrary nested result value
            key: dotted location, used to name side files

        Returns:
            JSON-serializable structure
        """
        if isinstance(value, dict):
            return {str(k): self.sanitize(v, f"{key}.{k}") for k, v in value.items()}
        if isinstance(value, np.ndarray):
            if value.ndim >= 2 and max(value.shape) > MAX_INLINE_SIDE:
                filename = f"{slugify(key)}.npy"
                try:
                    np.save(self._path(filename), value)
                except OSError as exc:
                    raise ReportError(f"cannot write {filename}: {exc}") from exc
                self.side_files.append(filename)
                return {"path": filename, "shape": list(value.shape), "dtype": str(value.dtype)}
            if np.iscomplexobj(value):
                return {"real": self.sanitize(value.real, key), "imag": self.sanitize(value.imag, key)}
            return self.sanitize(value.tolist(), key)
        if isinstance(value, (list, tuple)):
            if len(value) > MAX_INLINE_ROWS and value and all(isinstance(row, dict) for row in value):
                filename = f"{slugify(key)}.csv"
                columns = list(value[0])
                self._write_csv(filename, columns, list(value))
                self.side_files.append(filename)
                return {"path": filename, "rows": len(value), "columns": columns}
            return [self.sanitize(item, key) for item in value]
        if isinstance(value, (bool, np.bool_)):
            return bool(value)
        if isinstance(value, (int, np.integer)):
            return int(value)
        if isinstance(value, (complex, np.complexfloating)):
            return {"real": _number(float(value.real)), "imag": _number(float(value.imag))}
        if isinstance(value, (float, np.floating)):
            return _number(float(value))
        if value is None or isinstance(value, str):
            return value
        return str(value)

    def _scan_filename(self, scan: ScanResult, used: Dict[str, int]) -> str:
        base = f"scan_{slugify(scan.name)}"
        count = used.get(base, 0)
        used[base] = count + 1
        return f"{base}.csv" if count == 0 else f"{base}_{count}.csv"

    def summary_text(self, outcome: Dict[str, Any], passed: bool) -> str:
        """Plain-text status table."""
        reports: List[InequalityReport] = outcome["reports"]
        scans: List[ScanResult] = outcome["scans"]
        width = max([len(item.name) for item in [*reports, *scans]] + [4])
        lines = [f"suite: {outcome['suite']}", f"status: {'PASS' if passed else 'FAIL'}", ""]
        lines.append(f"{'STATUS':<6}  {'NAME':<{width}}  MARGIN")
        for report in reports:
            status = "PASS" if report.passed else "FAIL"
            lines.append(f"{status:<6}  {report.name:<{width}}  {report.margin:.6g}")
        if scans:
            lines.append("")
            for scan in scans:
                status = "PASS" if scan.passed else "FAIL"
                lines.append(f"{status:<6}  {scan.name:<{width}}  {len(scan.grid)} points")
        lines.append("")
        lines.append(f"{len(reports)} reports, {sum(not r.passed for r in reports)} failed")
        lines.append(f"{len(scans)} scans, {sum(not s.passed for s in scans)} failed")
        for error in outcome["errors"]:
            lines.append(f"ERROR   {error.get('suite', '')}/{error.get('task', '')}: "
                         f"{error.get('error_type', '')}: {error.get('message', '')}")
        return "\n".join(lines) + "\n"

    def emit(self, outcome: Dict[str, Any], config: RunConfig, passed: bool,
             generated_at: Optional[str] = None) -> Dict[str, Any]:
        """
        Write every output file.

        Args:
            outcome: result of Orchestrator.process()
            config: configuration of the run
            passed: overall verdict
            generated_at: timestamp override, ISO 8601 UTC by default

        Returns:
            The JSON document that was written
        """
        self._prepare_dir()
        reports: List[InequalityReport] = outcome["reports"]
        scans: List[ScanResult] = outcome["scans"]

        scan_entries = []
        used: Dict[str, int] = {}
        for scan in scans:
            filename = self._scan_filename(scan, used)
            deviations = scan.deviations or [""] * len(scan.grid)
            rows = [{"parameter": x, "value": y, "deviation": d}
                    for x, y, d in zip(scan.grid, scan.values, deviations)]
            self._write_csv(filename, SCAN_COLUMNS, rows)
            entry = self.sanitize(scan.model_dump(), f"scan.{scan.name}")
            entry["csv"] = filename
            scan_entries.append(entry)

        self._write_csv("reports.csv", REPORT_COLUMNS, [report.model_dump() for report in reports])

        document = {
            "schema_version": SCHEMA_VERSION,
            "generated_at": generated_at or datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "environment": environment_metadata(),
            "suite": outcome["suite"],
            "passed": passed,
            "config": self.sanitize(config.model_dump(), "config"),
            "reports": [self.sanitize(report.model_dump(), f"report.{report.name}") for report in reports],
            "scans": scan_entries,
            "errors": self.sanitize(outcome["errors"], "errors"),
            "results": self.sanitize(outcome["results"], "results"),
        }
        document["side_files"] = sorted(self.side_files)

        self._write_text("report.json", json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False) + "\n")
        self._write_text("summary.txt", self.summary_text(outcome, passed))
        logger.info("Wrote report with %d reports and %d scans to %s", len(reports), len(scans), self.out_dir)
        return document


def emit_report(outcome: Dict[str, Any], config: RunConfig, passed: bool,
                out_dir: Optional[str] = None) -> Dict[str, Any]:
    """Write the report files for one run into out_dir (config.output_dir by default)."""
    return ReportWriter(out_dir or config.output_dir).emit(outcome, config, passed)

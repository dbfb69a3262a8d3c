"""
Result records shared by the checks: inequality reports and parameter scans.
"""
from typing import Any, Dict, List

from pydantic import BaseModel, Field, model_validator


class InequalityReport(BaseModel):
    """A measured left-hand side against an analytic right-hand side."""

    name: str
    lhs: float
    rhs: float
    margin: float = 0.0
    tolerance: float = 0.0
    truncation_defect: float = 0.0
    parameters: Dict[str, Any] = Field(default_factory=dict)
    conditions: Dict[str, bool] = Field(default_factory=dict)
    passed: bool = False
    note: str = ""

    @model_validator(mode="after")
    def _settle(self) -> "InequalityReport":
        # margin and verdict always follow from the numbers
        self.margin = self.rhs - self.lhs
        within = self.lhs <= self.rhs + self.tolerance + self.truncation_defect
        self.passed = bool(within and all(self.conditions.values()))
        return self


class ScanResult(BaseModel):
    """Values of an observable along a parameter grid."""

    name: str
    parameter_name: str
    grid: List[float]
    values: List[float]
    reference: float = 0.0
    deviations: List[float] = Field(default_factory=list)
    decay: Dict[str, float] = Field(default_factory=dict)
    description: str = ""
    passed: bool = True
    note: str = ""

    @model_validator(mode="after")
    def _check_grid(self) -> "ScanResult":
        if len(self.values) != len(self.grid):
            raise ValueError("values and grid differ in length")
        if self.deviations and len(self.deviations) != len(self.grid):
            raise ValueError("deviations and grid differ in length")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("grid must be strictly increasing")
        if any(d < 0 for d in self.deviations):
            raise ValueError("deviations must be non-negative")
        return self


def sort_reports(reports: List[BaseModel]) -> List[BaseModel]:
    """Deterministic report order (by name, stable within a name)."""
    return sorted(reports, key=lambda report: report.name)

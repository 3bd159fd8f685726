"""Verified-inequality records shared by the transform and the shift checks."""
from __future__ import annotations

from dataclasses import dataclass, field
import math

# relative slack granted to the right-hand side for round-off
RELATIVE_SLACK = 1e-9

PASS = "pass"
FAIL = "fail"
NOT_APPLICABLE = "not_applicable"
DEGENERATE = "degenerate"


@dataclass
class BoundCheck:
    """One instance of ``lhs <= rhs``.

    ``status`` is ``"pass"``/``"fail"`` for evaluated checks, and
    ``"not_applicable"`` or ``"degenerate"`` when the hypotheses of the
    inequality do not hold; such checks never count as passed.
    """

    name: str
    lhs: float
    rhs: float
    context: dict = field(default_factory=dict)
    status: str = ""

    def __post_init__(self):
        self.lhs = float(self.lhs)
        self.rhs = float(self.rhs)
        if not self.status:
            self.status = PASS if self.holds(self.lhs, self.rhs) else FAIL

    @staticmethod
    def holds(lhs: float, rhs: float) -> bool:
        if math.isnan(lhs) or math.isnan(rhs):
            return False
        return lhs <= rhs * (1 + RELATIVE_SLACK) if rhs >= 0 else lhs <= rhs * (1 - RELATIVE_SLACK)

    @property
    def passed(self) -> bool:
        return self.status == PASS

    @property
    def applicable(self) -> bool:
        return self.status in (PASS, FAIL)

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @classmethod
    def skipped(cls, name: str, status: str, reason: str, **context) -> "BoundCheck":
        context["reason"] = reason
        return cls(name, math.nan, math.nan, context, status)

    def summary(self) -> str:
        if not self.applicable:
            return f"{self.name}: {self.status} ({self.context.get('reason', '')})"
        return f"{self.name}: {self.status} lhs={self.lhs:.6g} rhs={self.rhs:.6g} margin={self.margin:.3g}"

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
            return v

        return {
            "name": self.name,
            "status": self.status,
            "lhs": clean(self.lhs),
            "rhs": clean(self.rhs),
            "margin": clean(self.margin),
            "context": {k: clean(v) for k, v in self.context.items()},
        }

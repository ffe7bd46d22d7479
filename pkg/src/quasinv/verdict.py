"""Three-state verdicts with achieved deviations and witnesses."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .linalg import DEFAULT_TOL, Tolerance, approx_equal

HOLDS = "holds"
FAILS = "fails"
NOT_APPLICABLE = "not-applicable"

# hypothesis_status values
HYP_NONE = "none"
HYP_SATISFIED = "satisfied"
HYP_FAILED = "not-satisfied"

_MAX_WITNESSES = 5


def _clean(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (np.floating, float)):
        return round_sig(float(v))
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_clean(x) for x in v]
    return v


def round_sig(x: float, digits: int = 6) -> float:
    """Round to a fixed number of significant digits (stable JSON output)."""
    if not np.isfinite(x) or x == 0:
        return float(x)
    return float(f"{x:.{digits - 1}e}")


@dataclass
class Verdict:
    check_id: str
    status: str
    max_deviation: float = 0.0
    hypothesis_status: str = HYP_NONE
    witnesses: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.status == HOLDS

    @property
    def applicable(self) -> bool:
        return self.status != NOT_APPLICABLE

    def to_json(self) -> dict:
        out = {
            "check_id": self.check_id,
            "status": self.status,
            "max_deviation": round_sig(float(self.max_deviation)),
            "hypothesis_status": self.hypothesis_status,
            "witnesses": [_clean(w) for w in self.witnesses],
        }
        if self.details:
            out["details"] = _clean(self.details)
        return out


def not_applicable(check_id: str, reason: str, **details) -> Verdict:
    return Verdict(check_id, NOT_APPLICABLE, 0.0, HYP_FAILED,
                   details={"reason": reason, **details})


class Tracker:
    """Accumulates many comparisons into one verdict.

    Every comparison uses the effective threshold of ``tol``; the verdict
    holds iff all of them pass.  The worst location is always kept as a
    witness, failing locations are added up to a small cap.
    """

    def __init__(self, check_id: str, tol: Tolerance = DEFAULT_TOL):
        self.check_id = check_id
        self.tol = tol
        self.max_deviation = 0.0
        self.ok = True
        self.worst: dict | None = None
        self.failures: list[dict] = []
        self.details: dict[str, Any] = {}

    def compare(self, lhs, rhs, **where) -> bool:
        ok, dev = approx_equal(lhs, rhs, self.tol)
        self._record(ok, dev, where)
        return ok

    def small(self, value: float, scale: float = 0.0, **where) -> bool:
        """Record a non-negative residual that should vanish."""
        ok = value <= self.tol.threshold(scale)
        self._record(ok, float(value), where)
        return ok

    def require(self, condition: bool, deviation: float = 0.0, **where) -> bool:
        self._record(bool(condition), float(deviation), where)
        return bool(condition)

    def _record(self, ok: bool, dev: float, where: dict):
        if self.worst is None or dev > self.max_deviation:
            self.max_deviation = max(dev, self.max_deviation)
            self.worst = dict(where)
        if not ok:
            self.ok = False
            if len(self.failures) < _MAX_WITNESSES:
                self.failures.append(dict(where))

    def verdict(self, hypothesis_status: str = HYP_NONE) -> Verdict:
        witnesses = list(self.failures)
        if self.worst is not None and self.worst not in witnesses:
            witnesses.insert(0, self.worst)
        return Verdict(self.check_id, HOLDS if self.ok else FAILS, self.max_deviation,
                       hypothesis_status, witnesses[:_MAX_WITNESSES], dict(self.details))

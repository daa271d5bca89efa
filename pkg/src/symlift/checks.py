"""Residual bookkeeping shared by every verifier."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np


@dataclass
class CheckReport:
    """Outcome of one sampled identity check.

    ``relation`` is ``"<="`` for ordinary identities (pass when the residual
    is at most ``tol``) and ``">="`` for certificates that require the
    residual to stay above a threshold.
    """

    name: str
    residual: float
    tol: float
    relation: str = "<="
    argmax: Any = None
    breakdown: dict = field(default_factory=dict)
    anchor: str = ""
    note: str = ""

    @property
    def passed(self) -> bool:
        r = self.residual
        if r is None or math.isnan(r):
            return False
        if self.relation == ">=":
            return r >= self.tol
        return r <= self.tol

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def __bool__(self) -> bool:
        return self.passed


# Name used for cocycle/closedness/symplecticity results.
CocycleReport = CheckReport


class MaxTracker:
    """Running maximum of residuals together with the sample that produced it.

    NaN residuals dominate everything so they can never be hidden.
    """

    def __init__(self):
        self.value = 0.0
        self.where: Optional[Any] = None

    def add(self, residual: float, where: Any = None):
        r = float(residual)
        if math.isnan(r) or (not math.isnan(self.value) and r > self.value):
            self.value = r
            self.where = where
        elif self.where is None:
            self.where = where
        return r


def max_abs(x) -> float:
    arr = np.asarray(x, dtype=float)
    return float(np.max(np.abs(arr))) if arr.size else 0.0

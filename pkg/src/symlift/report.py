"""Deterministic report assembly and serialization."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .checks import CheckReport

FLOAT_FORMAT = ".17g"


@dataclass
class VerificationReport:
    scenario: str
    seed: int
    config: dict
    checks: list = field(default_factory=list)
    runtime_ms: Optional[float] = None

    @property
    def overall(self) -> str:
        return "pass" if self.checks and all(c.passed for c in self.checks) else "fail"

    @property
    def exit_code(self) -> int:
        return 0 if self.overall == "pass" else 1

    def as_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "config": self.config,
            "checks": [check_record(c) for c in self.checks],
            "overall": self.overall,
            "runtime_ms": self.runtime_ms,
        }

    def to_json(self) -> str:
        return dumps(self.as_dict()) + "\n"

    def summary(self) -> str:
        lines = [f"scenario {self.scenario} (seed {self.seed})"]
        width = max((len(c.name) for c in self.checks), default=10)
        for c in self.checks:
            lines.append(f"  {c.verdict.upper():4s}  {c.name:<{width}s}  residual {c.residual:.3e} "
                         f"{c.relation} {c.tol:.1e}" + (f"  ({c.note})" if c.note else ""))
        lines.append(f"overall: {self.overall.upper()}")
        return "\n".join(lines)


def check_record(c: CheckReport) -> dict:
    return {
        "name": c.name,
        "anchor": c.anchor,
        "residual": c.residual,
        "tolerance": c.tol,
        "relation": c.relation,
        "verdict": c.verdict,
        "argmax": c.argmax,
        "breakdown": c.breakdown,
        "note": c.note,
    }


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    text = format(x, FLOAT_FORMAT)
    return text if any(c in text for c in ".en") else text + ".0"


def dumps(obj: Any, indent: int = 0) -> str:
    """JSON text with insertion-ordered keys and 17-significant-digit floats."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return _quote(obj)
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{_quote(str(k))}: {dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(dumps(v, indent + 1) for v in obj) + "]"
        items = [inner + dumps(v, indent + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    return _quote(str(obj))


def _quote(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)

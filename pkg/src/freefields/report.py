"""Structured verification reports: named checks with residuals and verdicts.

Every suite in this package returns a `Report`; the CLI merges them and
serializes to JSON. Serialization is deterministic (sorted keys, repr floats,
no timestamps) so identical configurations produce byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


@dataclass
class Check:
    name: str
    claim: str                  # plain-language statement of what is asserted
    max_residual: float
    tolerance: float
    passed: bool

    def to_dict(self):
        return {
            "name": self.name,
            "claim": self.claim,
            "maxResidual": float(self.max_residual),
            "tolerance": float(self.tolerance),
            "pass": bool(self.passed),
        }


@dataclass
class Report:
    suite: str
    trials: int = 0
    checks: list = field(default_factory=list)

    def add(self, name, claim, max_residual, tolerance):
        ok = bool(max_residual <= tolerance)
        self.checks.append(Check(name, claim, float(max_residual),
                                 float(tolerance), ok))
        return ok

    def add_flag(self, name, claim, passed):
        # for pass/fail facts without a numeric residual (e.g. error raised)
        self.checks.append(Check(name, claim, 0.0 if passed else 1.0, 0.5,
                                 bool(passed)))
        return passed

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def extend(self, other):
        self.checks.extend(other.checks)
        self.trials += other.trials
        return self

    def to_dict(self):
        return {
            "suite": self.suite,
            "trials": int(self.trials),
            "checks": [c.to_dict() for c in self.checks],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def summary(self):
        lines = []
        for c in self.checks:
            verdict = "PASS" if c.passed else "FAIL"
            lines.append(f"[{verdict}] {self.suite}/{c.name}: "
                         f"residual {c.max_residual:.3e} (tol {c.tolerance:.1e})")
        return "\n".join(lines)

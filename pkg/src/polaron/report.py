"""Machine-readable records of identity checks.

A :class:`VerificationReport` collects one :class:`Check` per identity.  The
JSON rendering is deterministic (sorted keys, fixed float formatting, no
timestamps), so the same configuration and seed give byte-identical output.
"""
from __future__ import annotations

import json
import platform
from dataclasses import dataclass, field

import numpy as np

SCHEMA = 1


@dataclass
class Check:
    identity: str
    samples: int
    max_residual: float
    tolerance: float | None
    note: str = ""

    @property
    def passed(self) -> bool:
        if self.tolerance is None:  # exploratory entries carry no threshold
            return True
        return bool(np.isfinite(self.max_residual) and self.max_residual < self.tolerance)

    def to_dict(self) -> dict:
        d = {
            "identity": self.identity,
            "samples": int(self.samples),
            "max_residual": _fmt(self.max_residual),
            "tolerance": None if self.tolerance is None else _fmt(self.tolerance),
            "pass": self.passed,
        }
        if self.note:
            d["note"] = self.note
        return d


def _fmt(x: float) -> str:
    # repr of a rounded float is platform independent
    return f"{float(x):.6e}"


def environment_fingerprint() -> dict:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
    }


@dataclass
class VerificationReport:
    """Ordered collection of checks sharing a suite name and an anchor.

    ``anchor`` names the identity family being verified in words (for
    instance ``"graded Yang-Baxter equation"``) so that failures can be
    traced back to the relation that broke.
    """

    suite: str
    anchor: str
    checks: list[Check] = field(default_factory=list)
    params: dict = field(default_factory=dict)

    def add(self, identity: str, residuals, tolerance: float | None, note: str = "") -> Check:
        res = np.atleast_1d(np.asarray(residuals, dtype=float))
        check = Check(identity, res.size, float(res.max(initial=0.0)), tolerance, note)
        self.checks.append(check)
        return check

    def extend(self, other: "VerificationReport", prefix: str = "") -> None:
        for c in other.checks:
            self.checks.append(Check(prefix + c.identity, c.samples, c.max_residual, c.tolerance, c.note))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def worst(self, identity: str) -> float:
        vals = [c.max_residual for c in self.checks if c.identity == identity]
        if not vals:
            raise KeyError(identity)
        return max(vals)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "suite": self.suite,
            "anchor": self.anchor,
            "params": self.params,
            "pass": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "environment": environment_fingerprint(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def summary(self) -> str:
        lines = [f"[{'PASS' if self.passed else 'FAIL'}] {self.suite}: {self.anchor}"]
        for c in self.checks:
            tol = "-" if c.tolerance is None else f"{c.tolerance:.0e}"
            lines.append(f"  {'ok ' if c.passed else 'BAD'} {c.identity:<48s} "
                         f"res={c.max_residual:.2e} tol={tol} n={c.samples}")
        return "\n".join(lines)

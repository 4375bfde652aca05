from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Audit:
    """One named check with its measured value and pass flag."""

    name: str
    passed: bool
    value: float | int | None = None
    threshold: float | int | None = None
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "value": self.value,
            "threshold": self.threshold,
            "detail": self.detail,
        }


def below(name: str, value: float, threshold: float, detail: str = "") -> Audit:
    return Audit(name, bool(value < threshold), float(value), threshold, detail)


def equal(name: str, value: int, expected: int, detail: str = "") -> Audit:
    return Audit(name, int(value) == int(expected), int(value), int(expected), detail)


def at_least(name: str, value: int, bound: int, detail: str = "") -> Audit:
    return Audit(name, int(value) >= int(bound), int(value), int(bound), detail)


def all_passed(audits) -> bool:
    return all(a.passed for a in audits)

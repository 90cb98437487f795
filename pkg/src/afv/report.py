"""Line-oriented key: value reports shared by the verification sweeps."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class SuiteReport:
    suite: str
    params: dict = field(default_factory=dict)
    checks: int = 0
    failures: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def fail(self, message: str) -> None:
        self.failures.append(message)

    def lines(self) -> list:
        out = [f"suite: {self.suite}"]
        out.extend(f"{k}: {v}" for k, v in self.params.items())
        out.append(f"checks: {self.checks}")
        out.append(f"failures: {len(self.failures)}")
        out.extend(f"counterexample: {f}" for f in self.failures[:20])
        out.extend(f"note: {n}" for n in self.notes)
        out.append(f"result: {'pass' if self.passed else 'fail'}")
        return out

"""Structured pass/fail records for verification runs."""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .exact import format_scalar

PASS, FAIL, SKIP, ERROR = "PASS", "FAIL", "SKIP", "ERROR"
STATUSES = (PASS, FAIL, SKIP, ERROR)


def jsonable(value: Any) -> Any:
    """Canonical JSON-ready form: rationals as strings, floats at 17 digits."""
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, int):
        return value
    if isinstance(value, Fraction):
        return format_scalar(value)
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, complex):
        return [format(value.real, ".17g"), format(value.imag, ".17g")]
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if hasattr(value, "item"):  # numpy scalars
        return jsonable(value.item())
    return str(value)


@dataclass
class CheckRecord:
    name: str
    status: str
    mode: str = "exact"
    sample: str | None = None
    witness: Any = None
    residual: Any = None
    tolerance: Any = None
    elapsed: float = 0.0

    def to_dict(self, timings: bool = False) -> dict:
        d = {
            "name": self.name,
            "status": self.status,
            "mode": self.mode,
            "sample": self.sample,
            "witness": jsonable(self.witness),
            "residual": jsonable(self.residual),
            "tolerance": jsonable(self.tolerance),
        }
        if timings:
            d["elapsed"] = jsonable(self.elapsed)
        return d


@dataclass
class VerificationReport:
    records: list[CheckRecord] = field(default_factory=list)
    epsilon: int | None = None
    meta: dict = field(default_factory=dict)

    def add(self, name, status, **kw) -> CheckRecord:
        rec = CheckRecord(name, status, **kw)
        self.records.append(rec)
        return rec

    def check(self, name, ok: bool, **kw) -> CheckRecord:
        return self.add(name, PASS if ok else FAIL, **kw)

    @contextmanager
    def timed(self, name, **kw):
        """Run a block as one check; exceptions become ERROR records.

        The block receives a dict it may fill with ``ok``, ``witness``,
        ``residual``, ``status`` ...
        """
        out: dict = {}
        t0 = time.perf_counter()
        try:
            yield out
        except Exception as exc:  # noqa: BLE001 - every failure must land in the report
            out = {"status": ERROR, "witness": {"error": type(exc).__name__, "message": str(exc),
                                                  **({"detail": jsonable(exc.witness)}
                                                     if getattr(exc, "witness", None) is not None else {})}}
        elapsed = time.perf_counter() - t0
        status = out.pop("status", None)
        if status is None:
            status = PASS if out.pop("ok", False) else FAIL
        else:
            out.pop("ok", None)
        self.add(name, status, elapsed=elapsed, **{**kw, **out})

    def merge(self, *others: VerificationReport) -> VerificationReport:
        for other in others:
            self.records.extend(other.records)
            if other.epsilon is not None:
                self.epsilon = other.epsilon if self.epsilon is None else self.epsilon
        return self

    def by_name(self, name: str) -> list[CheckRecord]:
        return [r for r in self.records if r.name == name]

    def statuses(self, name: str | None = None) -> set[str]:
        return {r.status for r in self.records if name is None or r.name == name}

    @property
    def counts(self) -> dict[str, int]:
        return {s: sum(r.status == s for r in self.records) for s in STATUSES}

    @property
    def passed(self) -> bool:
        c = self.counts
        return c[FAIL] == 0 and c[ERROR] == 0

    def failures(self) -> list[CheckRecord]:
        return [r for r in self.records if r.status in (FAIL, ERROR)]

    def __repr__(self):
        c = self.counts
        return f"VerificationReport({', '.join(f'{k}={v}' for k, v in c.items())})"

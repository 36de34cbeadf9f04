"""Domain types for the parking timesheet ledger.

Timestamps are integer UTC epoch milliseconds throughout; they serialize
exactly and compare cheaply, and every replica agrees byte-for-byte.
"""
from __future__ import annotations

import uuid
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from smartpark.errors import ValidationError


class Action(Enum):
    CHECK_IN = "CheckIn"
    CHECK_OUT = "CheckOut"


class Region(Enum):
    DB = "DB"
    LN = "LN"
    CK = "CK"


def parse_action(value: str) -> Action:
    try:
        return Action(value)
    except ValueError:
        raise ValidationError(f"unknown action type: {value!r}") from None


def parse_region(value: str) -> Region:
    try:
        return Region(value)
    except ValueError:
        raise ValidationError(f"unknown region: {value!r}") from None


@dataclass(frozen=True)
class TimesheetEntry:
    """One committed check-in or check-out record. Never mutated after commit."""

    id: str
    uid: str
    time: int  # UTC epoch milliseconds
    action: Action
    region: Region

    def sort_key(self) -> tuple[int, str]:
        return (self.time, self.id)


@dataclass(frozen=True)
class DomainEvent:
    """Emitted exactly once per committed entry; entry_id is the idempotency key."""

    uid: str
    time: int
    type: str  # "CheckIn" | "CheckOut"
    entry_id: str


def event_for(entry: TimesheetEntry) -> DomainEvent:
    return DomainEvent(
        uid=entry.uid, time=entry.time, type=entry.action.value, entry_id=entry.id
    )


def new_entry_id(rng: Optional[object] = None) -> str:
    """128-bit random identifier rendered as 32 hex chars.

    Pass a seeded ``random.Random`` to make id assignment reproducible in
    deterministic simulation runs.
    """
    if rng is not None:
        return f"{rng.getrandbits(128):032x}"
    return uuid.uuid4().hex

"""Parking terminal scan logic for probe-based presence detection.

A terminal scans its coverage field once per scan interval. A vehicle
code heard for the first time triggers a check-in; a tracked code that
stays silent for absence_threshold consecutive scans triggers exactly one
check-out and is dropped from tracking; hearing a tracked code resets its
missed-scan count.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from smartpark.errors import ValidationError
from smartpark.ledger.chaincode import OP_CHECK_IN, OP_CHECK_OUT
from smartpark.ledger.entries import Region


@dataclass(frozen=True)
class ProbeFrame:
    vehicle_code: str
    emitted_at: int  # simulation tick
    terminal_region: Region


@dataclass
class TrackedVehicle:
    first_seen: int
    last_seen: int
    missed_scans: int = 0


@dataclass(frozen=True)
class LedgerSubmission:
    op: str  # check_in | check_out
    uid: str
    region: Region
    tick: int


@dataclass
class Terminal:
    region: Region
    scan_interval: int = 10
    absence_threshold: int = 3
    present: dict = field(default_factory=dict)  # vehicle_code -> TrackedVehicle

    def __post_init__(self):
        if self.scan_interval < 1 or self.absence_threshold < 1:
            raise ValidationError("scan_interval and absence_threshold must be >= 1")

    def scans_at(self, tick: int) -> bool:
        return tick % self.scan_interval == 0

    def scan_cycle(self, tick: int, frames: Iterable[ProbeFrame]) -> list[LedgerSubmission]:
        """Process one scan; returns the submissions this cycle produces."""
        heard = set()
        for frame in frames:
            if frame.terminal_region is not self.region:
                raise ValidationError(
                    f"frame for region {frame.terminal_region.value} reached "
                    f"terminal {self.region.value}"
                )
            heard.add(frame.vehicle_code)

        submissions: list[LedgerSubmission] = []
        for code in sorted(heard):
            if code in self.present:
                tracked = self.present[code]
                tracked.last_seen = tick
                tracked.missed_scans = 0
            else:
                self.present[code] = TrackedVehicle(first_seen=tick, last_seen=tick)
                submissions.append(LedgerSubmission(OP_CHECK_IN, code, self.region, tick))

        for code in sorted(set(self.present) - heard):
            tracked = self.present[code]
            tracked.missed_scans += 1
            if tracked.missed_scans >= self.absence_threshold:
                del self.present[code]
                submissions.append(LedgerSubmission(OP_CHECK_OUT, code, self.region, tick))
        return submissions

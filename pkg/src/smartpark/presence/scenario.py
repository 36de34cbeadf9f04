"""Scripted presence scenarios and the simulation loop that drives them.

A scenario is a seeded, tick-ordered script of vehicle arrivals and
departures plus an i.i.d. probe-loss rate. Running it walks time tick by
tick, feeds each terminal the probe frames that survived loss, and pushes
the resulting check-ins/check-outs at the ledger, synchronously and in
tick order. The run is fully determined by (seed, scenario, terminals).

The report compares ledger-reconstructed dwell times against the scripted
ground truth, stay by stay.
"""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Protocol

from smartpark.errors import ConfigurationError, RejectedError
from smartpark.ledger.chaincode import OP_CHECK_IN
from smartpark.ledger.entries import Region, TimesheetEntry, parse_region
from smartpark.presence.terminal import LedgerSubmission, ProbeFrame, Terminal

MS_PER_TICK = 1000  # 1 tick is one nominal second


class SimClock:
    """Logical clock shared with an embedded orderer during simulation."""

    def __init__(self, tick: int = 0):
        self.tick = tick

    def ms(self) -> int:
        return self.tick * MS_PER_TICK


class Submitter(Protocol):
    def submit(self, op: str, uid: str, region: Region, tick: int) -> TimesheetEntry: ...

    def advance(self, tick: int) -> None: ...


@dataclass(frozen=True)
class StayEvent:
    tick: int
    vehicle_code: str
    region: Region
    kind: str  # "arrive" | "depart"


@dataclass(frozen=True)
class Scenario:
    seed: int
    duration: int
    probe_loss_rate: float
    events: tuple[StayEvent, ...]

    def __post_init__(self):
        if not 0 <= self.probe_loss_rate < 1:
            raise ConfigurationError("probe_loss_rate must be in [0, 1)")
        object.__setattr__(
            self, "events", tuple(sorted(self.events, key=lambda e: (e.tick,
                                                                      e.vehicle_code)))
        )
        present: dict[str, Region] = {}
        for event in self.events:
            if event.kind == "arrive":
                if event.vehicle_code in present:
                    raise ConfigurationError(
                        f"{event.vehicle_code} arrives at {event.tick} while already present"
                    )
                present[event.vehicle_code] = event.region
            elif event.kind == "depart":
                if present.get(event.vehicle_code) is not event.region:
                    raise ConfigurationError(
                        f"{event.vehicle_code} departs at {event.tick} without matching arrival"
                    )
                del present[event.vehicle_code]
            else:
                raise ConfigurationError(f"unknown scenario event kind {event.kind!r}")

    def stays(self) -> list[tuple[str, Region, int, Optional[int]]]:
        """(code, region, arrive_tick, depart_tick|None) in script order."""
        out = []
        open_idx: dict[str, int] = {}
        for event in self.events:
            if event.kind == "arrive":
                open_idx[event.vehicle_code] = len(out)
                out.append((event.vehicle_code, event.region, event.tick, None))
            else:
                idx = open_idx.pop(event.vehicle_code)
                code, region, arrive, _ = out[idx]
                out[idx] = (code, region, arrive, event.tick)
        return out

    def vehicle_codes(self) -> set[str]:
        return {e.vehicle_code for e in self.events}


def parse_scenario(text: str) -> tuple[Scenario, list[Terminal]]:
    """Line format::

        seed 42
        duration 2000
        loss 0.2
        terminal DB scan_interval=10 absence_threshold=3
        arrive 100 V-001 DB
        depart 700 V-001 DB

    '#' starts a comment; terminals default to one per region mentioned.
    """
    seed = 0
    duration = None
    loss = 0.0
    terminals: list[Terminal] = []
    events: list[StayEvent] = []
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0].lower()
        try:
            if kind == "seed":
                seed = int(parts[1])
            elif kind == "duration":
                duration = int(parts[1])
            elif kind == "loss":
                loss = float(parts[1])
            elif kind == "terminal":
                options = dict(p.split("=", 1) for p in parts[2:])
                terminals.append(
                    Terminal(
                        region=parse_region(parts[1]),
                        scan_interval=int(options.get("scan_interval", 10)),
                        absence_threshold=int(options.get("absence_threshold", 3)),
                    )
                )
            elif kind in ("arrive", "depart"):
                events.append(
                    StayEvent(
                        tick=int(parts[1]),
                        vehicle_code=parts[2],
                        region=parse_region(parts[3]),
                        kind=kind,
                    )
                )
            else:
                raise ValueError("unrecognized directive")
        except (ValueError, IndexError, KeyError) as exc:
            raise ConfigurationError(
                f"bad scenario line {lineno}: {raw_line!r} ({exc})"
            ) from None
    if duration is None:
        raise ConfigurationError("scenario must declare a duration")
    if not terminals:
        regions = sorted({e.region for e in events}, key=lambda r: r.value)
        terminals = [Terminal(region=r) for r in regions]
    return Scenario(seed=seed, duration=duration, probe_loss_rate=loss,
                    events=tuple(events)), terminals


# ---------------------------------------------------------------------------
# report


@dataclass(frozen=True)
class SubmittedEntry:
    op: str
    uid: str
    region: Region
    tick: int
    entry_id: str
    time_ms: int


@dataclass(frozen=True)
class StayOutcome:
    vehicle_code: str
    region: Region
    arrive_tick: int
    depart_tick: Optional[int]
    checkin_tick: Optional[int]
    checkout_tick: Optional[int]

    @property
    def true_dwell(self) -> Optional[int]:
        if self.depart_tick is None:
            return None
        return self.depart_tick - self.arrive_tick

    @property
    def reconstructed_dwell(self) -> Optional[int]:
        if self.checkin_tick is None or self.checkout_tick is None:
            return None
        return self.checkout_tick - self.checkin_tick

    @property
    def reconstruction_error(self) -> Optional[int]:
        if self.true_dwell is None or self.reconstructed_dwell is None:
            return None
        return abs(self.reconstructed_dwell - self.true_dwell)


@dataclass
class PresenceReport:
    seed: int
    submissions: list  # list[SubmittedEntry]
    stays: list  # list[StayOutcome]

    def alternation_ok(self) -> bool:
        """Per vehicle, submissions strictly alternate starting with check-in."""
        by_code: dict[str, list[str]] = {}
        for sub in self.submissions:
            by_code.setdefault(sub.uid, []).append(sub.op)
        for ops in by_code.values():
            expected = OP_CHECK_IN
            for op in ops:
                if op != expected:
                    return False
                expected = "check_out" if expected == OP_CHECK_IN else OP_CHECK_IN
        return True

    def max_reconstruction_error(self) -> Optional[int]:
        errors = [s.reconstruction_error for s in self.stays if s.reconstruction_error is not None]
        return max(errors) if errors else None

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "submissions": [
                {
                    "op": s.op,
                    "uid": s.uid,
                    "region": s.region.value,
                    "tick": s.tick,
                    "entry_id": s.entry_id,
                    "time_ms": s.time_ms,
                }
                for s in self.submissions
            ],
            "stays": [
                {
                    "vehicle_code": s.vehicle_code,
                    "region": s.region.value,
                    "arrive_tick": s.arrive_tick,
                    "depart_tick": s.depart_tick,
                    "checkin_tick": s.checkin_tick,
                    "checkout_tick": s.checkout_tick,
                    "true_dwell": s.true_dwell,
                    "reconstructed_dwell": s.reconstructed_dwell,
                    "reconstruction_error": s.reconstruction_error,
                }
                for s in self.stays
            ],
            "alternation_ok": self.alternation_ok(),
            "max_reconstruction_error": self.max_reconstruction_error(),
        }


# ---------------------------------------------------------------------------
# runner


def run_scenario(
    scenario: Scenario,
    terminals: Iterable[Terminal],
    submitter: Submitter,
) -> PresenceReport:
    terminals = sorted(terminals, key=lambda t: t.region.value)
    regions = {t.region for t in terminals}
    for event in scenario.events:
        if event.region not in regions:
            raise ConfigurationError(
                f"scenario uses region {event.region.value} with no terminal"
            )

    rng = random.Random(scenario.seed)
    present: dict[Region, set[str]] = {t.region: set() for t in terminals}
    events = deque(scenario.events)
    pending_retries: deque[LedgerSubmission] = deque()
    submissions: list[SubmittedEntry] = []

    def push(submission: LedgerSubmission) -> None:
        try:
            entry = submitter.submit(
                submission.op, submission.uid, submission.region, submission.tick
            )
        except RejectedError:
            pending_retries.append(submission)
            return
        submissions.append(
            SubmittedEntry(
                op=submission.op,
                uid=submission.uid,
                region=submission.region,
                tick=submission.tick,
                entry_id=entry.id,
                time_ms=entry.time,
            )
        )

    for tick in range(scenario.duration + 1):
        if hasattr(submitter, "advance"):
            submitter.advance(tick)
        while events and events[0].tick <= tick:
            event = events.popleft()
            if event.kind == "arrive":
                present[event.region].add(event.vehicle_code)
            else:
                present[event.region].discard(event.vehicle_code)
        if pending_retries:
            for _ in range(len(pending_retries)):
                retry = pending_retries.popleft()
                push(LedgerSubmission(retry.op, retry.uid, retry.region, tick))
        for terminal in terminals:
            if not terminal.scans_at(tick):
                continue
            frames = [
                ProbeFrame(code, tick, terminal.region)
                for code in sorted(present[terminal.region])
                if rng.random() >= scenario.probe_loss_rate
            ]
            for submission in terminal.scan_cycle(tick, frames):
                push(submission)

    return PresenceReport(
        seed=scenario.seed,
        submissions=submissions,
        stays=_match_stays(scenario, submissions),
    )


def _match_stays(scenario: Scenario, submissions: list) -> list:
    """Pair each scripted stay with its reconstructed check-in/out, in order."""
    pairs_by_code: dict[str, list[list[Optional[int]]]] = {}
    for sub in submissions:
        slots = pairs_by_code.setdefault(sub.uid, [])
        if sub.op == OP_CHECK_IN:
            slots.append([sub.time_ms // MS_PER_TICK, None])
        elif slots and slots[-1][1] is None:
            slots[-1][1] = sub.time_ms // MS_PER_TICK

    outcomes = []
    consumed: dict[str, int] = {}
    for code, region, arrive, depart in scenario.stays():
        idx = consumed.get(code, 0)
        consumed[code] = idx + 1
        pair = pairs_by_code.get(code, [])
        checkin_tick, checkout_tick = (pair[idx] if idx < len(pair) else (None, None))
        outcomes.append(
            StayOutcome(
                vehicle_code=code,
                region=region,
                arrive_tick=arrive,
                depart_tick=depart,
                checkin_tick=checkin_tick,
                checkout_tick=checkout_tick,
            )
        )
    return outcomes

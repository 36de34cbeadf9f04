"""Pairing raw check-in/check-out logs into tickets, flagging anomalies.

One deterministic pass over the (time, id)-sorted entries of a single
vehicle. The rules:

  * a check-in while no ticket is open starts a ticket
  * further check-ins on an open ticket are duplicates; the earliest wins
  * a check-out on an open ticket closes it
  * further check-outs right after a closed ticket are duplicates
  * a check-out with no open check-in and no ticket just closed is an
    orphan and produces no ticket
  * a trailing open check-in yields an Open ticket, flagged MissingCheckOut
    only once it is older than the staleness horizon

Pure function: identical input always yields identical output.
"""
from __future__ import annotations

from enum import Enum, auto
from typing import Iterable, Optional

from smartpark.errors import ValidationError
from smartpark.ledger.entries import Action, TimesheetEntry
from smartpark.billing.tickets import (
    AnomalyFlag,
    AnomalyKind,
    DEFAULT_STALENESS_MS,
    ParkingTicket,
    TicketStatus,
    duration_minutes,
    ticket_id_for,
)


class _State(Enum):
    IDLE = auto()      # nothing open, nothing just closed
    OPEN = auto()      # a check-in is waiting for its check-out
    CLOSED = auto()    # last action closed a ticket


def reconcile(
    entries: Iterable[TimesheetEntry],
    now: Optional[int] = None,
    staleness_ms: int = DEFAULT_STALENESS_MS,
) -> tuple[list[ParkingTicket], list[AnomalyFlag]]:
    """Pair one vehicle's entries into tickets; returns (tickets, anomalies).

    ``now`` anchors the MissingCheckOut staleness check for a trailing open
    check-in; omit it to skip that flag entirely (useful for pure pairing).
    """
    ordered = sorted(entries, key=TimesheetEntry.sort_key)
    uids = {e.uid for e in ordered}
    if len(uids) > 1:
        raise ValidationError(f"entries span multiple vehicle codes: {sorted(uids)}")

    tickets: list[ParkingTicket] = []
    flags: list[AnomalyFlag] = []
    state = _State.IDLE
    open_entry: Optional[TimesheetEntry] = None
    open_flags: list[AnomalyFlag] = []
    open_ids: list[str] = []

    def close_ticket(out_entry: Optional[TimesheetEntry]) -> None:
        nonlocal open_entry, open_flags, open_ids
        assert open_entry is not None
        if out_entry is not None:
            ids = tuple(open_ids + [out_entry.id])
            tickets.append(
                ParkingTicket(
                    ticket_id=ticket_id_for(open_entry.uid, open_entry.id, out_entry.id),
                    uid=open_entry.uid,
                    region=open_entry.region,
                    check_in=open_entry.time,
                    check_out=out_entry.time,
                    duration_minutes=duration_minutes(open_entry.time, out_entry.time),
                    status=TicketStatus.UNPAID,
                    anomalies=tuple(open_flags),
                    entry_ids=ids,
                )
            )
        open_entry = None
        open_flags = []
        open_ids = []

    for entry in ordered:
        if entry.action is Action.CHECK_IN:
            if state is _State.OPEN:
                flag = AnomalyFlag(AnomalyKind.DUPLICATE_CHECK_IN, (entry.id,))
                flags.append(flag)
                open_flags.append(flag)
                open_ids.append(entry.id)
            else:
                state = _State.OPEN
                open_entry = entry
                open_ids = [entry.id]
        else:  # CHECK_OUT
            if state is _State.OPEN:
                close_ticket(entry)
                state = _State.CLOSED
            elif state is _State.CLOSED:
                flags.append(AnomalyFlag(AnomalyKind.DUPLICATE_CHECK_OUT, (entry.id,)))
            else:
                flags.append(AnomalyFlag(AnomalyKind.ORPHAN_CHECK_OUT, (entry.id,)))

    if state is _State.OPEN and open_entry is not None:
        stale = now is not None and now - open_entry.time > staleness_ms
        if stale:
            flag = AnomalyFlag(AnomalyKind.MISSING_CHECK_OUT, (open_entry.id,))
            flags.append(flag)
            open_flags.append(flag)
        tickets.append(
            ParkingTicket(
                ticket_id=ticket_id_for(open_entry.uid, open_entry.id, None),
                uid=open_entry.uid,
                region=open_entry.region,
                check_in=open_entry.time,
                status=TicketStatus.OPEN,
                anomalies=tuple(open_flags),
                entry_ids=tuple(open_ids),
            )
        )
    return tickets, flags

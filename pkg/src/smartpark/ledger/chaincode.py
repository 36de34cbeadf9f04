"""Native transaction logic for the timesheet ledger.

Two operations exist: check_in and check_out. Peers re-execute
``validate_payload`` during endorsement (it is deterministic and touches no
state), and the orderer calls ``materialize`` at commit time, which is where
the entry id and committed timestamp get assigned.

Duplicate open check-ins are deliberately accepted here: anomaly handling
belongs to reconciliation downstream, not to the transaction logic.
"""
from __future__ import annotations

from typing import Optional

from smartpark.errors import ValidationError
from smartpark.ledger.entries import (
    Action,
    Region,
    TimesheetEntry,
    new_entry_id,
    parse_region,
)

OP_CHECK_IN = "check_in"
OP_CHECK_OUT = "check_out"

_OP_ACTIONS = {
    OP_CHECK_IN: Action.CHECK_IN,
    OP_CHECK_OUT: Action.CHECK_OUT,
}


def known_ops() -> tuple[str, ...]:
    return tuple(_OP_ACTIONS)


def validate_payload(op: str, args: dict) -> None:
    """Precondition checks shared by submitters and endorsing peers."""
    if op not in _OP_ACTIONS:
        raise ValidationError(f"unknown chaincode operation: {op!r}")
    uid = args.get("uid")
    if not isinstance(uid, str) or not uid:
        raise ValidationError("uid must be a non-empty string")
    region = args.get("region")
    if isinstance(region, Region):
        return
    if not isinstance(region, str):
        raise ValidationError("region must be a region code string")
    parse_region(region)


def materialize(
    op: str,
    args: dict,
    time_ms: int,
    entry_id: Optional[str] = None,
    rng: Optional[object] = None,
) -> TimesheetEntry:
    """Build the committed entry for a validated payload.

    ``time_ms`` comes from the orderer's clock so replicas agree
    byte-for-byte; ``entry_id`` defaults to a fresh 128-bit identifier.
    """
    validate_payload(op, args)
    region = args["region"]
    if not isinstance(region, Region):
        region = parse_region(region)
    return TimesheetEntry(
        id=entry_id if entry_id is not None else new_entry_id(rng),
        uid=args["uid"],
        time=time_ms,
        action=_OP_ACTIONS[op],
        region=region,
    )

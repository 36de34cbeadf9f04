from smartpark.ledger.entries import (
    Action,
    DomainEvent,
    Region,
    TimesheetEntry,
    event_for,
    new_entry_id,
)
from smartpark.ledger.codec import Block, CommittedTx, Endorsement
from smartpark.ledger.chain import Ledger, VerificationReport
from smartpark.ledger.acl import AclAction, AclOperation, AclPolicy, AclRule, default_policy

__all__ = [
    "Action",
    "AclAction",
    "AclOperation",
    "AclPolicy",
    "AclRule",
    "Block",
    "CommittedTx",
    "DomainEvent",
    "Endorsement",
    "Ledger",
    "Region",
    "TimesheetEntry",
    "VerificationReport",
    "default_policy",
    "event_for",
    "new_entry_id",
]

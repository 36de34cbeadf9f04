"""Message and effect types exchanged between peers, orderer, and clients.

Actors are transport-free state machines: they consume messages and return
effects (sends, timers, event emissions). The deterministic simulator and
the socket transport both interpret the same effects, so the endorsement
logic is identical in every mode.
"""
from __future__ import annotations

import hashlib
import hmac
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

from smartpark.ledger.entries import DomainEvent, TimesheetEntry


class ProposalStatus(Enum):
    PENDING = "Pending"
    ENDORSED = "Endorsed"
    COMMITTED = "Committed"
    REJECTED = "Rejected"


class PeerRole(Enum):
    HEAVY = "heavy"
    LIGHT = "light"


@dataclass(frozen=True)
class Payload:
    """One chaincode invocation: operation name, arguments, and who submits."""

    op: str
    args: dict
    submitter: str


@dataclass
class TransactionProposal:
    proposal_id: str
    payload: Payload
    endorsements: dict = field(default_factory=dict)  # peer_id -> signature bytes
    status: ProposalStatus = ProposalStatus.PENDING


def proposal_digest(proposal_id: str, payload: Payload) -> bytes:
    """Stable digest peers sign: id, op, and canonical-JSON args."""
    args_json = json.dumps(payload.args, sort_keys=True, separators=(",", ":"))
    material = "\x00".join([proposal_id, payload.op, payload.submitter, args_json])
    return hashlib.sha256(material.encode("utf-8")).digest()


def endorsement_signature(key: bytes, proposal_id: str, payload: Payload) -> bytes:
    return hmac.new(key, proposal_digest(proposal_id, payload), hashlib.sha256).digest()


# ---------------------------------------------------------------------------
# wire messages


@dataclass(frozen=True)
class SubmitRequest:
    proposal_id: str
    payload: Payload


@dataclass(frozen=True)
class ValidateRequest:
    proposal_id: str
    payload: Payload


@dataclass(frozen=True)
class EndorsementMsg:
    proposal_id: str
    peer_id: str
    ok: bool
    signature: bytes = b""
    reason: str = ""


@dataclass(frozen=True)
class BlockAnnounce:
    raw_block: bytes


@dataclass(frozen=True)
class SyncRequest:
    from_height: int


@dataclass(frozen=True)
class SyncResponse:
    raw_blocks: tuple


@dataclass(frozen=True)
class SubmitReply:
    proposal_id: str
    status: ProposalStatus
    entry: Optional[TimesheetEntry] = None
    block_height: Optional[int] = None
    reason: str = ""
    error_kind: str = ""  # "", "validation", "acl", "timeout", "rejected"


Message = Union[
    SubmitRequest,
    ValidateRequest,
    EndorsementMsg,
    BlockAnnounce,
    SyncRequest,
    SyncResponse,
    SubmitReply,
]


# ---------------------------------------------------------------------------
# effects returned by actors


@dataclass(frozen=True)
class Send:
    dst: str
    msg: Message


@dataclass(frozen=True)
class StartTimer:
    timer_id: str
    delay: int  # simulator ticks or milliseconds, owned by the runtime


@dataclass(frozen=True)
class Emit:
    event: DomainEvent


Effect = Union[Send, StartTimer, Emit]

"""Peer node actor: validates proposals, endorses, replicates blocks.

Heavy peers keep a full chain replica and vote during endorsement; light
peers hold no replica and refuse to endorse. Validation is a deterministic
re-execution of the chaincode preconditions plus the submitter's ACL
check, so honest peers always agree on a given payload.
"""
from __future__ import annotations

from typing import Optional

from smartpark.errors import IntegrityError, ValidationError
from smartpark.ledger import chaincode
from smartpark.ledger.acl import AclOperation, AclPolicy, TIMESHEET_RESOURCE, default_policy
from smartpark.ledger.chain import Ledger
from smartpark.ledger import codec
from smartpark.consensus.messages import (
    BlockAnnounce,
    Effect,
    EndorsementMsg,
    Message,
    PeerRole,
    Send,
    SyncRequest,
    SyncResponse,
    ValidateRequest,
    endorsement_signature,
)


class PeerNode:
    def __init__(
        self,
        peer_id: str,
        key: bytes,
        orderer_id: str,
        role: PeerRole = PeerRole.HEAVY,
        acl: Optional[AclPolicy] = None,
        ledger: Optional[Ledger] = None,
    ):
        self.peer_id = peer_id
        self.key = key
        self.orderer_id = orderer_id
        self.role = role
        self.acl = acl if acl is not None else default_policy()
        self.ledger: Optional[Ledger]
        if role is PeerRole.HEAVY:
            self.ledger = ledger if ledger is not None else Ledger()
        else:
            self.ledger = None  # light peers hold no replica

    def handle(self, src: str, msg: Message) -> list[Effect]:
        if isinstance(msg, ValidateRequest):
            return [Send(self.orderer_id, self._endorse(msg))]
        if isinstance(msg, BlockAnnounce):
            return self._on_block(msg.raw_block)
        if isinstance(msg, SyncResponse):
            self.apply_sync(msg.raw_blocks)
            return []
        return []

    def on_restart(self) -> list[Effect]:
        """Catch-up request after a crash; the chain survives the restart."""
        if self.role is not PeerRole.HEAVY:
            return []
        return [Send(self.orderer_id, SyncRequest(from_height=self.ledger.height + 1))]

    # -- endorsement ----------------------------------------------------------

    def _endorse(self, msg: ValidateRequest) -> EndorsementMsg:
        if self.role is not PeerRole.HEAVY:
            return EndorsementMsg(
                proposal_id=msg.proposal_id,
                peer_id=self.peer_id,
                ok=False,
                reason="light peer cannot endorse",
            )
        try:
            chaincode.validate_payload(msg.payload.op, msg.payload.args)
        except ValidationError as exc:
            return EndorsementMsg(
                proposal_id=msg.proposal_id, peer_id=self.peer_id, ok=False, reason=str(exc)
            )
        if not self.acl.allows(msg.payload.submitter, AclOperation.CREATE, TIMESHEET_RESOURCE):
            return EndorsementMsg(
                proposal_id=msg.proposal_id,
                peer_id=self.peer_id,
                ok=False,
                reason="submitter denied by access rules",
            )
        return EndorsementMsg(
            proposal_id=msg.proposal_id,
            peer_id=self.peer_id,
            ok=True,
            signature=endorsement_signature(self.key, msg.proposal_id, msg.payload),
        )

    # -- replication ----------------------------------------------------------

    def _on_block(self, raw: bytes) -> list[Effect]:
        if self.role is not PeerRole.HEAVY:
            return []
        try:
            block = codec.decode_block(raw)
        except Exception:
            return []  # corrupt announce; a later sync will repair
        if block.height <= self.ledger.height:
            return []  # already have it
        if block.height > self.ledger.height + 1:
            return [Send(self.orderer_id, SyncRequest(from_height=self.ledger.height + 1))]
        self.ledger.append_block(raw)
        return []

    def apply_sync(self, raw_blocks: tuple) -> int:
        """Append fetched blocks after verifying the whole batch links cleanly.

        Returns the number of blocks appended; on any verification failure
        the local chain is left untouched.
        """
        if self.role is not PeerRole.HEAVY:
            raise ValidationError("light peers keep no replica to sync")
        relevant = []
        expected_height = self.ledger.height + 1
        prev_hash = self.ledger.tip_hash
        for raw in raw_blocks:
            try:
                block = codec.decode_block(raw)
            except Exception as exc:
                raise IntegrityError(f"undecodable block in sync batch: {exc}") from None
            if block.height < expected_height:
                continue  # overlap with what we already hold
            if block.height != expected_height:
                raise IntegrityError(
                    f"sync gap: expected height {expected_height}, got {block.height}"
                )
            if block.prev_hash != prev_hash:
                raise IntegrityError(f"sync back-link mismatch at height {block.height}")
            if codec.recompute_block_hash(raw) != block.block_hash:
                raise IntegrityError(f"sync hash mismatch at height {block.height}")
            relevant.append(raw)
            prev_hash = block.block_hash
            expected_height += 1
        for raw in relevant:
            self.ledger.append_block(raw)
        return len(relevant)

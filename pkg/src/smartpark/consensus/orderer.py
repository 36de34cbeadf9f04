"""The single sequencing node: collects endorsements, cuts blocks, fans out.

The orderer owns the commit path end to end. It validates submissions,
asks every eligible heavy peer to endorse, and once the quorum is reached
it materializes the entry (assigning id and committed timestamp), appends
a block to its own chain, answers the submitter, emits the domain event,
and broadcasts the block to all heavy peers. Proposals that any peers
reject below quorum, or that time out, are rejected and reach no replica.
"""
from __future__ import annotations

import random
import time
from dataclasses import dataclass
from typing import Callable, Optional

from smartpark.errors import ValidationError
from smartpark.ledger import chaincode
from smartpark.ledger.acl import AclOperation, AclPolicy, TIMESHEET_RESOURCE, default_policy
from smartpark.ledger.chain import Ledger
from smartpark.ledger.codec import CommittedTx, Endorsement, build_block
from smartpark.ledger.entries import event_for
from smartpark.consensus.messages import (
    BlockAnnounce,
    Effect,
    Emit,
    EndorsementMsg,
    Message,
    PeerRole,
    ProposalStatus,
    Send,
    StartTimer,
    SubmitReply,
    SubmitRequest,
    SyncRequest,
    SyncResponse,
    TransactionProposal,
    ValidateRequest,
    endorsement_signature,
)

DEFAULT_ENDORSE_TIMEOUT = 50


@dataclass
class _Pending:
    proposal: TransactionProposal
    client: str
    rejections: dict  # peer_id -> reason


def _wall_clock_ms() -> int:
    return int(time.time() * 1000)


class Orderer:
    def __init__(
        self,
        orderer_id: str,
        peer_keys: dict,
        peer_roles: dict,
        quorum: int,
        acl: Optional[AclPolicy] = None,
        clock: Optional[Callable[[], int]] = None,
        rng: Optional[random.Random] = None,
        endorse_timeout: int = DEFAULT_ENDORSE_TIMEOUT,
        ledger: Optional[Ledger] = None,
    ):
        eligible = sorted(p for p, role in peer_roles.items() if role is PeerRole.HEAVY)
        if not 1 <= quorum <= len(eligible):
            raise ValidationError(
                f"quorum {quorum} out of range for {len(eligible)} eligible peers"
            )
        self.orderer_id = orderer_id
        self.peer_keys = peer_keys
        self.peer_roles = peer_roles
        self.eligible_peers = eligible
        self.quorum = quorum
        self.acl = acl if acl is not None else default_policy()
        self.clock = clock if clock is not None else _wall_clock_ms
        self.rng = rng
        self.endorse_timeout = endorse_timeout
        self.ledger = ledger if ledger is not None else Ledger()
        self.pending: dict[str, _Pending] = {}
        self.proposals: dict[str, TransactionProposal] = {}

    # -- message handling ---------------------------------------------------

    def handle(self, src: str, msg: Message) -> list[Effect]:
        if isinstance(msg, SubmitRequest):
            return self._on_submit(src, msg)
        if isinstance(msg, EndorsementMsg):
            return self._on_endorsement(msg)
        if isinstance(msg, SyncRequest):
            return [Send(src, SyncResponse(tuple(self.ledger.blocks_from(msg.from_height))))]
        return []

    def on_timer(self, timer_id: str) -> list[Effect]:
        pending = self.pending.pop(timer_id, None)
        if pending is None:
            return []
        pending.proposal.status = ProposalStatus.REJECTED
        return [
            Send(
                pending.client,
                SubmitReply(
                    proposal_id=timer_id,
                    status=ProposalStatus.REJECTED,
                    reason="endorsement timeout: quorum unreachable",
                    error_kind="timeout",
                ),
            )
        ]

    # -- submission ---------------------------------------------------------

    def _on_submit(self, client: str, msg: SubmitRequest) -> list[Effect]:
        proposal = TransactionProposal(proposal_id=msg.proposal_id, payload=msg.payload)
        self.proposals[msg.proposal_id] = proposal

        def reject(reason: str, kind: str) -> list[Effect]:
            proposal.status = ProposalStatus.REJECTED
            return [
                Send(
                    client,
                    SubmitReply(
                        proposal_id=msg.proposal_id,
                        status=ProposalStatus.REJECTED,
                        reason=reason,
                        error_kind=kind,
                    ),
                )
            ]

        try:
            chaincode.validate_payload(msg.payload.op, msg.payload.args)
        except ValidationError as exc:
            return reject(str(exc), "validation")
        if not self.acl.allows(msg.payload.submitter, AclOperation.CREATE, TIMESHEET_RESOURCE):
            return reject("submitter denied by access rules", "acl")

        self.pending[msg.proposal_id] = _Pending(
            proposal=proposal, client=client, rejections={}
        )
        effects: list[Effect] = [
            Send(peer_id, ValidateRequest(msg.proposal_id, msg.payload))
            for peer_id in self.eligible_peers
        ]
        effects.append(StartTimer(msg.proposal_id, self.endorse_timeout))
        return effects

    # -- endorsement collection ----------------------------------------------

    def _on_endorsement(self, msg: EndorsementMsg) -> list[Effect]:
        pending = self.pending.get(msg.proposal_id)
        if pending is None:
            return []  # late, duplicate, or already settled
        if msg.peer_id not in self.eligible_peers:
            return []  # light or unknown peers cannot endorse
        proposal = pending.proposal
        if not msg.ok:
            pending.rejections[msg.peer_id] = msg.reason
            remaining = len(self.eligible_peers) - len(pending.rejections)
            if remaining < self.quorum:
                del self.pending[msg.proposal_id]
                proposal.status = ProposalStatus.REJECTED
                return [
                    Send(
                        pending.client,
                        SubmitReply(
                            proposal_id=msg.proposal_id,
                            status=ProposalStatus.REJECTED,
                            reason=msg.reason or "rejected by peers",
                            error_kind="rejected",
                        ),
                    )
                ]
            return []

        expected = endorsement_signature(
            self.peer_keys[msg.peer_id], msg.proposal_id, proposal.payload
        )
        if msg.signature != expected:
            pending.rejections[msg.peer_id] = "bad endorsement signature"
            return []
        proposal.endorsements[msg.peer_id] = msg.signature
        if len(proposal.endorsements) < self.quorum:
            return []
        proposal.status = ProposalStatus.ENDORSED
        del self.pending[msg.proposal_id]
        return self._commit(pending)

    # -- commit -------------------------------------------------------------

    def _commit(self, pending: _Pending) -> list[Effect]:
        proposal = pending.proposal
        now = self.clock()
        entry = chaincode.materialize(
            proposal.payload.op, proposal.payload.args, time_ms=now, rng=self.rng
        )
        tx = CommittedTx(
            proposal_id=proposal.proposal_id,
            entry=entry,
            endorsements=tuple(
                Endorsement(peer_id=p, signature=s)
                for p, s in sorted(proposal.endorsements.items())
            ),
        )
        raw = build_block(self.ledger.height + 1, self.ledger.tip_hash, now, [tx])
        block = self.ledger.append_block(raw)
        proposal.status = ProposalStatus.COMMITTED

        effects: list[Effect] = [
            Send(
                pending.client,
                SubmitReply(
                    proposal_id=proposal.proposal_id,
                    status=ProposalStatus.COMMITTED,
                    entry=entry,
                    block_height=block.height,
                ),
            ),
            Emit(event_for(entry)),
        ]
        effects.extend(Send(peer_id, BlockAnnounce(raw)) for peer_id in self.eligible_peers)
        return effects

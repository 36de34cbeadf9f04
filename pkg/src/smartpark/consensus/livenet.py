"""In-process endorsement network: the gateway's embedded ledger backend.

Runs the same orderer/peer actors as the simulator but delivers messages
synchronously, so a submission resolves before ``submit`` returns. All
mutation is serialized through one lock (single-writer commit path);
queries take the same lock briefly and read committed state only.
"""
from __future__ import annotations

import os
import random
import threading
from collections import deque
from typing import Callable, Optional

from smartpark.errors import (
    AccessDeniedError,
    RejectedError,
    ValidationError,
)
from smartpark.ledger.acl import AclPolicy
from smartpark.ledger.chain import Ledger, VerificationReport
from smartpark.ledger.entries import DomainEvent, TimesheetEntry
from smartpark.consensus.messages import (
    BlockAnnounce,
    Emit,
    Payload,
    PeerRole,
    ProposalStatus,
    Send,
    StartTimer,
    SubmitReply,
    SubmitRequest,
    SyncResponse,
)
from smartpark.consensus.netconfig import NetworkConfig, default_network_config
from smartpark.consensus.orderer import Orderer
from smartpark.consensus.peer import PeerNode

_CLIENT = "_local_client"


class LocalNetwork:
    def __init__(
        self,
        config: Optional[NetworkConfig] = None,
        acl: Optional[AclPolicy] = None,
        clock: Optional[Callable[[], int]] = None,
        rng: Optional[random.Random] = None,
        ledger_path: Optional[str] = None,
    ):
        self.config = config if config is not None else default_network_config()
        self._lock = threading.RLock()
        self._subscribers: list[Callable[[DomainEvent], None]] = []
        self._counter = 0
        self._down: set[str] = set()
        self._ledger_path = ledger_path
        self._persisted_height = 0

        ledger = None
        if ledger_path is not None and os.path.exists(ledger_path):
            ledger = Ledger.load(ledger_path)

        keys = self.config.keys()
        roles = self.config.roles()
        self.peers = {
            p.peer_id: PeerNode(
                p.peer_id, p.key, self.config.orderer_id, role=p.role, acl=acl
            )
            for p in self.config.peers
        }
        self.orderer = Orderer(
            orderer_id=self.config.orderer_id,
            peer_keys=keys,
            peer_roles=roles,
            quorum=self.config.quorum,
            acl=acl,
            clock=clock,
            rng=rng,
            ledger=ledger,
        )
        if ledger is not None:
            self._persisted_height = ledger.height
            # bring replicas level with the restored world ledger
            for peer in self.peers.values():
                if peer.role is PeerRole.HEAVY:
                    peer.apply_sync(tuple(self.orderer.ledger.blocks_from(1)))

    # -- submission -----------------------------------------------------------

    def submit(self, op: str, args: dict, submitter: str) -> SubmitReply:
        """Run one proposal through endorsement; returns the final reply."""
        with self._lock:
            self._counter += 1
            proposal_id = f"tx-{self._counter:08d}"
            request = SubmitRequest(proposal_id, Payload(op=op, args=args, submitter=submitter))
            replies: dict[str, SubmitReply] = {}
            queue: deque = deque([(_CLIENT, self.config.orderer_id, request)])
            while queue:
                src, dst, msg = queue.popleft()
                if dst == _CLIENT:
                    if isinstance(msg, SubmitReply):
                        replies[msg.proposal_id] = msg
                    continue
                if dst in self._down:
                    continue
                if dst == self.config.orderer_id:
                    effects = self.orderer.handle(src, msg)
                elif dst in self.peers:
                    effects = self.peers[dst].handle(src, msg)
                else:
                    continue
                for effect in effects:
                    if isinstance(effect, Send):
                        queue.append((dst, effect.dst, effect.msg))
                    elif isinstance(effect, Emit):
                        self._notify(effect.event)
                    elif isinstance(effect, StartTimer):
                        pass  # synchronous mode settles timeouts below
            if proposal_id not in replies:
                # quorum unreachable with the peers currently up
                for effect in self.orderer.on_timer(proposal_id):
                    if isinstance(effect, Send) and isinstance(effect.msg, SubmitReply):
                        replies[effect.msg.proposal_id] = effect.msg
            reply = replies[proposal_id]
            if reply.status is ProposalStatus.COMMITTED:
                self._persist_new_blocks()
            return reply

    def submit_or_raise(self, op: str, args: dict, submitter: str) -> SubmitReply:
        reply = self.submit(op, args, submitter)
        if reply.status is ProposalStatus.COMMITTED:
            return reply
        if reply.error_kind == "validation":
            raise ValidationError(reply.reason)
        if reply.error_kind == "acl":
            raise AccessDeniedError(reply.reason)
        raise RejectedError(reply.reason)

    def _persist_new_blocks(self) -> None:
        if self._ledger_path is None:
            return
        ledger = self.orderer.ledger
        if self._persisted_height == 0 and not os.path.exists(self._ledger_path):
            ledger.append_frame(self._ledger_path, ledger.raw_block(0))
        for height in range(self._persisted_height + 1, ledger.height + 1):
            ledger.append_frame(self._ledger_path, ledger.raw_block(height))
        self._persisted_height = ledger.height

    # -- events ----------------------------------------------------------------

    def subscribe(self, callback: Callable[[DomainEvent], None]) -> None:
        self._subscribers.append(callback)

    def _notify(self, event: DomainEvent) -> None:
        for callback in list(self._subscribers):
            callback(event)

    # -- queries -----------------------------------------------------------------

    def logs_for(self, uid: str) -> list[TimesheetEntry]:
        with self._lock:
            return self.orderer.ledger.logs_for(uid)

    def last_checked_in(self, uid: str) -> Optional[TimesheetEntry]:
        with self._lock:
            return self.orderer.ledger.last_checked_in(uid)

    def verify(self) -> VerificationReport:
        with self._lock:
            return self.orderer.ledger.verify()

    def status(self) -> dict:
        with self._lock:
            return {
                "height": self.orderer.ledger.height,
                "entries": self.orderer.ledger.entry_count(),
                "quorum": self.config.quorum,
                "peers": [
                    {
                        "id": p.peer_id,
                        "role": p.role.value,
                        "up": p.peer_id not in self._down,
                        "height": (
                            self.peers[p.peer_id].ledger.height
                            if self.peers[p.peer_id].role is PeerRole.HEAVY
                            else None
                        ),
                    }
                    for p in self.config.peers
                ],
            }

    # -- fault injection (tests) ---------------------------------------------------

    def mark_down(self, peer_id: str) -> None:
        with self._lock:
            self._down.add(peer_id)

    def mark_up(self, peer_id: str) -> int:
        """Bring a peer back and let it catch up; returns blocks fetched."""
        with self._lock:
            self._down.discard(peer_id)
            peer = self.peers[peer_id]
            if peer.role is not PeerRole.HEAVY:
                return 0
            return self.sync_peer(peer_id)

    def sync_peer(self, peer_id: str) -> int:
        with self._lock:
            peer = self.peers[peer_id]
            blocks = tuple(self.orderer.ledger.blocks_from(peer.ledger.height + 1))
            return peer.apply_sync(blocks)

    def replicas(self) -> dict:
        with self._lock:
            return {
                pid: peer.ledger
                for pid, peer in self.peers.items()
                if peer.role is PeerRole.HEAVY
            }

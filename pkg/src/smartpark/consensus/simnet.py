"""Deterministic network simulation: seeded scheduler, scripted faults.

Peers and the orderer run as sequential actors; the scheduler totally
orders message delivery by (tick, enqueue sequence), so a (seed, script)
pair always produces the same trace and the same final ledgers, byte for
byte. Faults are scripted: crash and restart peers, or add link delay to
a peer for a window of ticks.
"""
from __future__ import annotations

import hashlib
import heapq
import random
from dataclasses import dataclass, field
from typing import Optional, Union

from smartpark.errors import ConfigurationError
from smartpark.ledger.chain import Ledger
from smartpark.ledger.entries import DomainEvent
from smartpark.consensus.messages import (
    BlockAnnounce,
    Emit,
    EndorsementMsg,
    Message,
    Payload,
    PeerRole,
    ProposalStatus,
    Send,
    StartTimer,
    SubmitReply,
    SubmitRequest,
    SyncRequest,
    SyncResponse,
    ValidateRequest,
)
from smartpark.consensus.orderer import Orderer
from smartpark.consensus.peer import PeerNode

CLIENT = "client"
ORDERER = "orderer"
BASE_LATENCY = 1

SIM_SUBMITTER = "parking.sim.harness"


# ---------------------------------------------------------------------------
# fault / submission script


@dataclass(frozen=True)
class Submit:
    tick: int
    op: str
    uid: str
    region: str
    submitter: str = SIM_SUBMITTER


@dataclass(frozen=True)
class Crash:
    tick: int
    peer_id: str


@dataclass(frozen=True)
class Restart:
    tick: int
    peer_id: str


@dataclass(frozen=True)
class DelayLink:
    tick: int
    peer_id: str
    extra: int
    until: int


ScriptEvent = Union[Submit, Crash, Restart, DelayLink]


def parse_script(text: str) -> list[ScriptEvent]:
    """Line format: ``submit T OP UID REGION`` | ``crash T PEER`` |
    ``restart T PEER`` | ``delay T PEER EXTRA UNTIL``; '#' starts a comment."""
    events: list[ScriptEvent] = []
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0].lower()
        try:
            if kind == "submit" and len(parts) == 5:
                events.append(Submit(int(parts[1]), parts[2], parts[3], parts[4]))
            elif kind == "crash" and len(parts) == 3:
                events.append(Crash(int(parts[1]), parts[2]))
            elif kind == "restart" and len(parts) == 3:
                events.append(Restart(int(parts[1]), parts[2]))
            elif kind == "delay" and len(parts) == 5:
                events.append(DelayLink(int(parts[1]), parts[2], int(parts[3]), int(parts[4])))
            else:
                raise ValueError("unrecognized event")
        except ValueError as exc:
            raise ConfigurationError(f"bad script line {lineno}: {raw_line!r} ({exc})") from None
    return sorted(events, key=lambda e: e.tick)


def sim_peer_key(peer_id: str) -> bytes:
    return hashlib.sha256(b"sim-peer-key:" + peer_id.encode()).digest()


# ---------------------------------------------------------------------------
# report


@dataclass
class SimReport:
    seed: int
    trace: list[str]
    results: dict  # proposal_id -> SubmitReply
    events: list[DomainEvent]
    orderer_ledger: Ledger
    peer_ledgers: dict  # peer_id -> Ledger (heavy only)

    def committed_ids(self) -> list[str]:
        return sorted(
            pid for pid, r in self.results.items() if r.status is ProposalStatus.COMMITTED
        )

    def converged(self) -> bool:
        return all(
            ledger.same_chain(self.orderer_ledger) for ledger in self.peer_ledgers.values()
        )

    def trace_text(self) -> str:
        return "\n".join(self.trace) + "\n"


# ---------------------------------------------------------------------------
# simulator


class SimNetwork:
    def __init__(
        self,
        seed: int,
        script: list[ScriptEvent],
        n_peers: int = 3,
        quorum: int = 2,
        n_light: int = 0,
        endorse_timeout: int = 30,
    ):
        self.seed = seed
        self.script = sorted(script, key=lambda e: e.tick)
        self.now = 0
        self._seq = 0
        self._heap: list = []
        self.trace: list[str] = []
        self.results: dict[str, SubmitReply] = {}
        self.events: list[DomainEvent] = []
        self._submit_counter = 0

        peer_ids = [f"peer-{i + 1}" for i in range(n_peers + n_light)]
        roles = {
            pid: (PeerRole.HEAVY if i < n_peers else PeerRole.LIGHT)
            for i, pid in enumerate(peer_ids)
        }
        keys = {pid: sim_peer_key(pid) for pid in peer_ids}
        self.peers = {
            pid: PeerNode(pid, keys[pid], ORDERER, role=roles[pid]) for pid in peer_ids
        }
        self.orderer = Orderer(
            orderer_id=ORDERER,
            peer_keys=keys,
            peer_roles=roles,
            quorum=quorum,
            clock=lambda: self.now,
            rng=random.Random(seed),
            endorse_timeout=endorse_timeout,
        )
        self.crashed: set[str] = set()
        self.delays: dict[str, tuple[int, int]] = {}  # peer -> (extra, until)
        for event in self.script:
            if isinstance(event, (Crash, Restart, DelayLink)) and event.peer_id not in self.peers:
                raise ConfigurationError(f"script names unknown peer {event.peer_id!r}")

    # -- scheduling ------------------------------------------------------------

    def _push(self, tick: int, kind: str, data) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (tick, self._seq, kind, data))

    def _latency(self, src: str, dst: str) -> int:
        latency = BASE_LATENCY
        for actor in (src, dst):
            window = self.delays.get(actor)
            if window and self.now < window[1]:
                latency += window[0]
        return latency

    def _dispatch_effects(self, actor: str, effects) -> None:
        for effect in effects:
            if isinstance(effect, Send):
                self._push(
                    self.now + self._latency(actor, effect.dst),
                    "deliver",
                    (actor, effect.dst, effect.msg),
                )
            elif isinstance(effect, StartTimer):
                self._push(self.now + effect.delay, "timer", (actor, effect.timer_id))
            elif isinstance(effect, Emit):
                self.events.append(effect.event)
                self._log(f"event {effect.event.type} uid={effect.event.uid} "
                          f"entry={effect.event.entry_id}")

    def _log(self, text: str) -> None:
        self.trace.append(f"{self.now:08d} {text}")

    # -- message summaries for the trace ----------------------------------------

    @staticmethod
    def _summary(msg: Message) -> str:
        if isinstance(msg, SubmitRequest):
            return f"SubmitRequest {msg.proposal_id} {msg.payload.op} {msg.payload.args.get('uid')}"
        if isinstance(msg, ValidateRequest):
            return f"ValidateRequest {msg.proposal_id}"
        if isinstance(msg, EndorsementMsg):
            vote = "ok" if msg.ok else f"refuse({msg.reason})"
            return f"Endorsement {msg.proposal_id} {msg.peer_id} {vote}"
        if isinstance(msg, BlockAnnounce):
            return f"BlockAnnounce len={len(msg.raw_block)} h={msg.raw_block[:8].hex()}"
        if isinstance(msg, SyncRequest):
            return f"SyncRequest from={msg.from_height}"
        if isinstance(msg, SyncResponse):
            return f"SyncResponse n={len(msg.raw_blocks)}"
        if isinstance(msg, SubmitReply):
            extra = msg.entry.id if msg.entry else msg.reason
            return f"SubmitReply {msg.proposal_id} {msg.status.value} {extra}"
        return type(msg).__name__

    # -- run ---------------------------------------------------------------------

    def run(self) -> SimReport:
        for event in self.script:
            self._push(event.tick, "script", event)
        while self._heap:
            tick, _, kind, data = heapq.heappop(self._heap)
            self.now = tick
            if kind == "script":
                self._run_script_event(data)
            elif kind == "timer":
                actor, timer_id = data
                if actor == ORDERER:
                    effects = self.orderer.on_timer(timer_id)
                    if effects:
                        self._log(f"orderer timeout {timer_id}")
                    self._dispatch_effects(ORDERER, effects)
            elif kind == "deliver":
                src, dst, msg = data
                self._deliver(src, dst, msg)
        return SimReport(
            seed=self.seed,
            trace=self.trace,
            results=self.results,
            events=self.events,
            orderer_ledger=self.orderer.ledger,
            peer_ledgers={
                pid: peer.ledger
                for pid, peer in self.peers.items()
                if peer.role is PeerRole.HEAVY
            },
        )

    def _run_script_event(self, event: ScriptEvent) -> None:
        if isinstance(event, Submit):
            self._submit_counter += 1
            proposal_id = f"p-{self._submit_counter:06d}"
            payload = Payload(
                op=event.op,
                args={"uid": event.uid, "region": event.region},
                submitter=event.submitter,
            )
            self._log(f"client submit {proposal_id} {event.op} {event.uid} {event.region}")
            self._push(
                self.now + self._latency(CLIENT, ORDERER),
                "deliver",
                (CLIENT, ORDERER, SubmitRequest(proposal_id, payload)),
            )
        elif isinstance(event, Crash):
            self.crashed.add(event.peer_id)
            self._log(f"fault crash {event.peer_id}")
        elif isinstance(event, Restart):
            if event.peer_id in self.crashed:
                self.crashed.discard(event.peer_id)
                self._log(f"fault restart {event.peer_id}")
                peer = self.peers[event.peer_id]
                self._dispatch_effects(event.peer_id, peer.on_restart())
        elif isinstance(event, DelayLink):
            self.delays[event.peer_id] = (event.extra, event.until)
            self._log(f"fault delay {event.peer_id} +{event.extra} until {event.until}")

    def _deliver(self, src: str, dst: str, msg: Message) -> None:
        if dst in self.crashed:
            self._log(f"drop {src}->{dst} {self._summary(msg)} (crashed)")
            return
        if src in self.crashed and src in self.peers:
            # a crashed peer's in-flight messages die with it
            self._log(f"drop {src}->{dst} {self._summary(msg)} (sender crashed)")
            return
        self._log(f"deliver {src}->{dst} {self._summary(msg)}")
        if dst == ORDERER:
            self._dispatch_effects(ORDERER, self.orderer.handle(src, msg))
        elif dst == CLIENT:
            if isinstance(msg, SubmitReply):
                self.results[msg.proposal_id] = msg
        elif dst in self.peers:
            peer = self.peers[dst]
            if isinstance(msg, SyncResponse):
                try:
                    fetched = peer.apply_sync(msg.raw_blocks)
                    self._log(f"sync {dst} fetched={fetched} height={peer.ledger.height}")
                except Exception as exc:
                    self._log(f"sync {dst} aborted: {exc}")
            else:
                self._dispatch_effects(dst, peer.handle(src, msg))


def run_deterministic(
    seed: int,
    script: list[ScriptEvent],
    n_peers: int = 3,
    quorum: int = 2,
    n_light: int = 0,
    endorse_timeout: int = 30,
) -> SimReport:
    """Run the scripted network once; same (seed, script) -> same trace."""
    net = SimNetwork(
        seed=seed,
        script=script,
        n_peers=n_peers,
        quorum=quorum,
        n_light=n_light,
        endorse_timeout=endorse_timeout,
    )
    return net.run()

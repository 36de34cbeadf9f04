"""Framed socket transport for multi-process deployments.

Every frame is ``u32 length + payload``; the payload is a typed envelope:

    u32 type_len  | type (UTF-8)
    u32 meta_len  | meta (canonical JSON, UTF-8)
    u32 body_len  | body (canonical ledger bytes, or empty)

Blocks, entries, and sync batches travel in the body using the canonical
serialization from the ledger codec; everything else rides in the JSON
meta. The orderer process is the hub: peers and clients all connect to
it, which mirrors the single-orderer commit path of the embedded mode.
"""
from __future__ import annotations

import json
import socket
import struct
import threading
from typing import Callable, Optional

from smartpark.errors import CodecError, RejectedError, SmartParkError
from smartpark.ledger import codec
from smartpark.ledger.entries import DomainEvent, TimesheetEntry
from smartpark.consensus.messages import (
    BlockAnnounce,
    Emit,
    EndorsementMsg,
    Message,
    Payload,
    ProposalStatus,
    Send,
    StartTimer,
    SubmitReply,
    SubmitRequest,
    SyncRequest,
    SyncResponse,
    ValidateRequest,
)
from smartpark.consensus.netconfig import NetworkConfig, parse_address
from smartpark.consensus.orderer import Orderer
from smartpark.consensus.peer import PeerNode

MAX_FRAME = 64 * 1024 * 1024


# ---------------------------------------------------------------------------
# frame + envelope I/O


def write_frame(sock: socket.socket, type_: str, meta: dict, body: bytes = b"") -> None:
    type_raw = type_.encode("utf-8")
    meta_raw = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    payload = (
        struct.pack(">I", len(type_raw))
        + type_raw
        + struct.pack(">I", len(meta_raw))
        + meta_raw
        + struct.pack(">I", len(body))
        + body
    )
    sock.sendall(struct.pack(">I", len(payload)) + payload)


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    chunks = []
    remaining = n
    while remaining:
        chunk = sock.recv(remaining)
        if not chunk:
            raise ConnectionError("peer closed connection")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_frame(sock: socket.socket) -> tuple[str, dict, bytes]:
    (length,) = struct.unpack(">I", _recv_exact(sock, 4))
    if length > MAX_FRAME:
        raise CodecError(f"frame too large: {length}")
    payload = _recv_exact(sock, length)
    pos = 0

    def take_chunk() -> bytes:
        nonlocal pos
        (n,) = struct.unpack(">I", payload[pos : pos + 4])
        start = pos + 4
        end = start + n
        if end > len(payload):
            raise CodecError("truncated frame chunk")
        chunk = payload[start:end]
        pos = end
        return chunk

    type_ = take_chunk().decode("utf-8")
    meta = json.loads(take_chunk().decode("utf-8"))
    body = take_chunk()
    return type_, meta, body


def pack_blobs(blobs) -> bytes:
    out = b""
    for blob in blobs:
        out += struct.pack(">I", len(blob)) + blob
    return out


def unpack_blobs(body: bytes) -> list[bytes]:
    blobs = []
    pos = 0
    while pos < len(body):
        (n,) = struct.unpack(">I", body[pos : pos + 4])
        blobs.append(body[pos + 4 : pos + 4 + n])
        pos += 4 + n
    return blobs


# ---------------------------------------------------------------------------
# message <-> envelope


def message_to_wire(msg: Message) -> tuple[str, dict, bytes]:
    if isinstance(msg, SubmitRequest):
        return (
            "submit",
            {
                "proposal_id": msg.proposal_id,
                "op": msg.payload.op,
                "args": msg.payload.args,
                "submitter": msg.payload.submitter,
            },
            b"",
        )
    if isinstance(msg, ValidateRequest):
        return (
            "validate",
            {
                "proposal_id": msg.proposal_id,
                "op": msg.payload.op,
                "args": msg.payload.args,
                "submitter": msg.payload.submitter,
            },
            b"",
        )
    if isinstance(msg, EndorsementMsg):
        return (
            "endorse",
            {
                "proposal_id": msg.proposal_id,
                "peer_id": msg.peer_id,
                "ok": msg.ok,
                "reason": msg.reason,
                "signature": msg.signature.hex(),
            },
            b"",
        )
    if isinstance(msg, BlockAnnounce):
        return ("announce", {}, msg.raw_block)
    if isinstance(msg, SyncRequest):
        return ("sync_req", {"from_height": msg.from_height}, b"")
    if isinstance(msg, SyncResponse):
        return ("sync_resp", {}, pack_blobs(msg.raw_blocks))
    if isinstance(msg, SubmitReply):
        body = codec.encode_entry(msg.entry) if msg.entry is not None else b""
        return (
            "reply",
            {
                "proposal_id": msg.proposal_id,
                "status": msg.status.value,
                "block_height": msg.block_height,
                "reason": msg.reason,
                "error_kind": msg.error_kind,
            },
            body,
        )
    raise CodecError(f"cannot encode message {type(msg).__name__}")


def message_from_wire(type_: str, meta: dict, body: bytes) -> Message:
    if type_ == "submit":
        return SubmitRequest(
            meta["proposal_id"],
            Payload(op=meta["op"], args=meta["args"], submitter=meta["submitter"]),
        )
    if type_ == "validate":
        return ValidateRequest(
            meta["proposal_id"],
            Payload(op=meta["op"], args=meta["args"], submitter=meta["submitter"]),
        )
    if type_ == "endorse":
        return EndorsementMsg(
            proposal_id=meta["proposal_id"],
            peer_id=meta["peer_id"],
            ok=meta["ok"],
            signature=bytes.fromhex(meta["signature"]),
            reason=meta.get("reason", ""),
        )
    if type_ == "announce":
        return BlockAnnounce(body)
    if type_ == "sync_req":
        return SyncRequest(meta["from_height"])
    if type_ == "sync_resp":
        return SyncResponse(tuple(unpack_blobs(body)))
    if type_ == "reply":
        entry = codec.decode_entry(body) if body else None
        return SubmitReply(
            proposal_id=meta["proposal_id"],
            status=ProposalStatus(meta["status"]),
            entry=entry,
            block_height=meta.get("block_height"),
            reason=meta.get("reason", ""),
            error_kind=meta.get("error_kind", ""),
        )
    raise CodecError(f"cannot decode message type {type_!r}")


# ---------------------------------------------------------------------------
# orderer server


class OrdererServer:
    """TCP hub running the orderer actor; peers and clients connect to it."""

    def __init__(self, config: NetworkConfig, ledger_path: Optional[str] = None):
        self.config = config
        self._lock = threading.RLock()
        ledger = None
        if ledger_path is not None:
            import os

            if os.path.exists(ledger_path):
                from smartpark.ledger.chain import Ledger

                ledger = Ledger.load(ledger_path)
        self.orderer = Orderer(
            orderer_id=config.orderer_id,
            peer_keys=config.keys(),
            peer_roles=config.roles(),
            quorum=config.quorum,
            endorse_timeout=config.endorse_timeout_ms,
            ledger=ledger,
        )
        self._ledger_path = ledger_path
        self._persisted_height = self.orderer.ledger.height if ledger is not None else 0
        self._peer_conns: dict[str, socket.socket] = {}
        self._client_conns: dict[str, socket.socket] = {}
        self._subscribers: set[str] = set()
        self._conn_counter = 0
        self._server_sock: Optional[socket.socket] = None
        self._stopped = threading.Event()

    # -- lifecycle --

    def start(self) -> tuple[str, int]:
        host, port = parse_address(self.config.orderer_address)
        self._server_sock = socket.create_server((host, port))
        self._server_sock.settimeout(0.2)
        bound = self._server_sock.getsockname()
        threading.Thread(target=self._accept_loop, daemon=True).start()
        return bound[0], bound[1]

    def stop(self) -> None:
        self._stopped.set()
        if self._server_sock is not None:
            self._server_sock.close()

    def _accept_loop(self) -> None:
        while not self._stopped.is_set():
            try:
                conn, _ = self._server_sock.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            self._conn_counter += 1
            conn_id = f"conn-{self._conn_counter}"
            threading.Thread(
                target=self._serve_connection, args=(conn, conn_id), daemon=True
            ).start()

    # -- per-connection loop --

    def _serve_connection(self, conn: socket.socket, conn_id: str) -> None:
        actor = conn_id
        is_peer = False
        with self._lock:
            self._client_conns[conn_id] = conn
        try:
            while not self._stopped.is_set():
                type_, meta, body = read_frame(conn)
                if type_ == "hello":
                    peer_id = meta["peer_id"]
                    with self._lock:
                        self._peer_conns[peer_id] = conn
                        self._client_conns.pop(conn_id, None)
                    actor = peer_id
                    is_peer = True
                    continue
                if type_ == "subscribe":
                    with self._lock:
                        self._subscribers.add(conn_id)
                    continue
                if type_ in ("query_logs", "query_last", "status", "verify"):
                    self._handle_query(conn, type_, meta)
                    continue
                msg = message_from_wire(type_, meta, body)
                with self._lock:
                    effects = self.orderer.handle(actor, msg)
                    self._dispatch(effects)
                    self._persist_new_blocks()
        except (ConnectionError, OSError):
            pass
        finally:
            with self._lock:
                self._client_conns.pop(conn_id, None)
                self._subscribers.discard(conn_id)
                if is_peer:
                    for peer_id, sock_ in list(self._peer_conns.items()):
                        if sock_ is conn:
                            del self._peer_conns[peer_id]
            conn.close()

    def _handle_query(self, conn: socket.socket, type_: str, meta: dict) -> None:
        with self._lock:
            ledger = self.orderer.ledger
            if type_ == "query_logs":
                entries = ledger.logs_for(meta["uid"])
                write_frame(
                    conn, "entries", {"n": len(entries)},
                    pack_blobs(codec.encode_entry(e) for e in entries),
                )
            elif type_ == "query_last":
                entry = ledger.last_checked_in(meta["uid"])
                body = codec.encode_entry(entry) if entry else b""
                write_frame(conn, "entries", {"n": 1 if entry else 0}, body)
            elif type_ == "status":
                write_frame(
                    conn,
                    "status_resp",
                    {
                        "height": ledger.height,
                        "entries": ledger.entry_count(),
                        "quorum": self.config.quorum,
                        "peers_connected": sorted(self._peer_conns),
                    },
                )
            elif type_ == "verify":
                report = ledger.verify()
                write_frame(
                    conn,
                    "verify_resp",
                    {"valid": report.valid, "first_bad_height": report.first_bad_height},
                )

    # -- effect dispatch --

    def _dispatch(self, effects) -> None:
        for effect in effects:
            if isinstance(effect, Send):
                self._send_to(effect.dst, effect.msg)
            elif isinstance(effect, Emit):
                event = effect.event
                meta = {
                    "uid": event.uid,
                    "time": event.time,
                    "type": event.type,
                    "entry_id": event.entry_id,
                }
                for conn_id in sorted(self._subscribers):
                    conn = self._client_conns.get(conn_id)
                    if conn is not None:
                        try:
                            write_frame(conn, "event", meta)
                        except OSError:
                            pass
            elif isinstance(effect, StartTimer):
                timer = threading.Timer(
                    effect.delay / 1000.0, self._fire_timer, args=(effect.timer_id,)
                )
                timer.daemon = True
                timer.start()

    def _fire_timer(self, timer_id: str) -> None:
        with self._lock:
            self._dispatch(self.orderer.on_timer(timer_id))

    def _send_to(self, dst: str, msg: Message) -> None:
        conn = self._peer_conns.get(dst) or self._client_conns.get(dst)
        if conn is None:
            return  # offline peer: it will sync when it reconnects
        try:
            write_frame(conn, *message_to_wire(msg))
        except OSError:
            pass

    def _persist_new_blocks(self) -> None:
        if self._ledger_path is None:
            return
        import os

        ledger = self.orderer.ledger
        if self._persisted_height == 0 and not os.path.exists(self._ledger_path):
            ledger.append_frame(self._ledger_path, ledger.raw_block(0))
        for height in range(self._persisted_height + 1, ledger.height + 1):
            ledger.append_frame(self._ledger_path, ledger.raw_block(height))
        self._persisted_height = ledger.height


# ---------------------------------------------------------------------------
# peer daemon


class PeerDaemon:
    """Runs one peer actor against a remote orderer."""

    def __init__(self, config: NetworkConfig, peer_id: str, ledger_path: Optional[str] = None):
        peer_cfg = config.peer(peer_id)
        ledger = None
        if ledger_path is not None:
            import os

            if os.path.exists(ledger_path):
                from smartpark.ledger.chain import Ledger

                ledger = Ledger.load(ledger_path)
        self.config = config
        self.peer = PeerNode(
            peer_id, peer_cfg.key, config.orderer_id, role=peer_cfg.role, ledger=ledger
        )
        self._ledger_path = ledger_path
        self._persisted_height = self.peer.ledger.height if ledger is not None else 0
        self._sock: Optional[socket.socket] = None
        self._stopped = threading.Event()

    def connect(self, address: Optional[str] = None) -> None:
        host, port = parse_address(address or self.config.orderer_address)
        self._sock = socket.create_connection((host, port))
        write_frame(self._sock, "hello", {"peer_id": self.peer.peer_id})
        for effect in self.peer.on_restart():
            if isinstance(effect, Send):
                write_frame(self._sock, *message_to_wire(effect.msg))

    def run(self) -> None:
        try:
            while not self._stopped.is_set():
                type_, meta, body = read_frame(self._sock)
                msg = message_from_wire(type_, meta, body)
                if isinstance(msg, SyncResponse):
                    self.peer.apply_sync(msg.raw_blocks)
                else:
                    for effect in self.peer.handle(self.config.orderer_id, msg):
                        if isinstance(effect, Send):
                            write_frame(self._sock, *message_to_wire(effect.msg))
                self._persist_new_blocks()
        except (ConnectionError, OSError):
            pass

    def stop(self) -> None:
        self._stopped.set()
        if self._sock is not None:
            self._sock.close()

    def _persist_new_blocks(self) -> None:
        if self._ledger_path is None or self.peer.ledger is None:
            return
        import os

        ledger = self.peer.ledger
        if self._persisted_height == 0 and not os.path.exists(self._ledger_path):
            ledger.append_frame(self._ledger_path, ledger.raw_block(0))
        for height in range(self._persisted_height + 1, ledger.height + 1):
            ledger.append_frame(self._ledger_path, ledger.raw_block(height))
        self._persisted_height = ledger.height


# ---------------------------------------------------------------------------
# client


class RemoteClient:
    """Submit/query client for a remote orderer.

    Event subscription opens its own connection so the request/response
    socket never has two readers.
    """

    def __init__(self, address: str, submitter: str = "parking.gateway"):
        self._address = address
        host, port = parse_address(address)
        self._sock = socket.create_connection((host, port))
        self._submitter = submitter
        self._counter = 0
        self._lock = threading.Lock()
        self._event_sock: Optional[socket.socket] = None

    def close(self) -> None:
        self._sock.close()
        if self._event_sock is not None:
            self._event_sock.close()

    def _request(self, type_: str, meta: dict, body: bytes = b"") -> tuple[str, dict, bytes]:
        with self._lock:
            write_frame(self._sock, type_, meta, body)
            return read_frame(self._sock)

    def submit(self, op: str, args: dict, submitter: Optional[str] = None) -> SubmitReply:
        self._counter += 1
        proposal_id = f"c-{id(self) & 0xFFFF:04x}-{self._counter:06d}"
        payload = Payload(op=op, args=args, submitter=submitter or self._submitter)
        msg = SubmitRequest(proposal_id, payload)
        rtype, rmeta, rbody = self._request(*message_to_wire(msg))
        reply = message_from_wire(rtype, rmeta, rbody)
        if isinstance(reply, SubmitReply) and reply.proposal_id == proposal_id:
            return reply
        raise SmartParkError(f"unexpected frame {rtype} in reply to {proposal_id}")

    def submit_or_raise(self, op: str, args: dict, submitter: Optional[str] = None) -> SubmitReply:
        reply = self.submit(op, args, submitter)
        if reply.status is not ProposalStatus.COMMITTED:
            raise RejectedError(reply.reason)
        return reply

    def logs_for(self, uid: str) -> list[TimesheetEntry]:
        _, _, body = self._request("query_logs", {"uid": uid})
        return [codec.decode_entry(blob) for blob in unpack_blobs(body)]

    def last_checked_in(self, uid: str) -> Optional[TimesheetEntry]:
        _, meta, body = self._request("query_last", {"uid": uid})
        return codec.decode_entry(body) if meta.get("n") else None

    def status(self) -> dict:
        _, meta, _ = self._request("status", {})
        return meta

    def verify(self) -> dict:
        _, meta, _ = self._request("verify", {})
        return meta

    def subscribe(self, callback: Callable[[DomainEvent], None]) -> None:
        """Open a dedicated event connection and stream pushes to the callback."""
        host, port = parse_address(self._address)
        self._event_sock = socket.create_connection((host, port))
        write_frame(self._event_sock, "subscribe", {})
        threading.Thread(target=self._event_loop, args=(callback,), daemon=True).start()

    def _event_loop(self, callback: Callable[[DomainEvent], None]) -> None:
        try:
            while True:
                rtype, rmeta, _ = read_frame(self._event_sock)
                if rtype == "event":
                    callback(
                        DomainEvent(
                            uid=rmeta["uid"],
                            time=rmeta["time"],
                            type=rmeta["type"],
                            entry_id=rmeta["entry_id"],
                        )
                    )
        except (ConnectionError, OSError):
            pass

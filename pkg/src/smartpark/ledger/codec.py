"""Canonical binary serialization for entries, transactions, and blocks.

The encoding is length-prefixed and field-ordered so that every replica
produces identical bytes for identical content, which is what makes the
hash chain comparable across peers and processes. See docs/WIRE_FORMAT.md
for the byte-level layout; tests pin the format with golden digests.

Primitives (all integers big-endian):
  u32           4-byte unsigned
  u64           8-byte unsigned
  str           u32 byte length + UTF-8 bytes
  bytes         u32 byte length + raw bytes

Entry     := str id | str uid | u64 time_ms | str action | str region
Endorsed  := str peer_id | bytes signature
Tx        := str proposal_id | Entry | u32 n_endorsements | Endorsed*
Block     := u64 height | 32B prev_hash | u64 commit_time_ms
             | u32 n_tx | (u32 tx_len + Tx bytes)* | 32B block_hash
block_hash = SHA-256 over every byte of the block that precedes it.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

from smartpark.errors import CodecError
from smartpark.ledger.entries import TimesheetEntry, parse_action, parse_region

HASH_SIZE = 32
GENESIS_PREV_HASH = b"\x00" * HASH_SIZE


# ---------------------------------------------------------------------------
# primitive writers / reader


def _u32(value: int) -> bytes:
    return struct.pack(">I", value)


def _u64(value: int) -> bytes:
    return struct.pack(">Q", value)


def _str(value: str) -> bytes:
    raw = value.encode("utf-8")
    return _u32(len(raw)) + raw


def _bytes(value: bytes) -> bytes:
    return _u32(len(value)) + value


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CodecError("truncated input")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack(">I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self.take(8))[0]

    def str(self) -> str:
        raw = self.take(self.u32())
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CodecError(f"invalid UTF-8 in string field: {exc}") from None

    def bytes(self) -> bytes:
        return self.take(self.u32())

    def done(self) -> bool:
        return self.pos == len(self.data)


# ---------------------------------------------------------------------------
# structures


@dataclass(frozen=True)
class Endorsement:
    peer_id: str
    signature: bytes


@dataclass(frozen=True)
class CommittedTx:
    """One chaincode invocation as committed: the entry plus who endorsed it."""

    proposal_id: str
    entry: TimesheetEntry
    endorsements: tuple[Endorsement, ...]


@dataclass(frozen=True)
class Block:
    height: int
    prev_hash: bytes
    commit_time: int  # UTC epoch milliseconds, assigned by the orderer
    txs: tuple[CommittedTx, ...]
    block_hash: bytes


# ---------------------------------------------------------------------------
# entry


def encode_entry(entry: TimesheetEntry) -> bytes:
    return (
        _str(entry.id)
        + _str(entry.uid)
        + _u64(entry.time)
        + _str(entry.action.value)
        + _str(entry.region.value)
    )


def _read_entry(r: _Reader) -> TimesheetEntry:
    entry_id = r.str()
    uid = r.str()
    time_ms = r.u64()
    try:
        action = parse_action(r.str())
        region = parse_region(r.str())
    except Exception as exc:
        raise CodecError(str(exc)) from None
    return TimesheetEntry(id=entry_id, uid=uid, time=time_ms, action=action, region=region)


def decode_entry(data: bytes) -> TimesheetEntry:
    r = _Reader(data)
    entry = _read_entry(r)
    if not r.done():
        raise CodecError("trailing bytes after entry")
    return entry


# ---------------------------------------------------------------------------
# committed transaction


def encode_tx(tx: CommittedTx) -> bytes:
    # Endorsements sort by peer id so the committed bytes never depend on
    # arrival order.
    endorsements = sorted(tx.endorsements, key=lambda e: e.peer_id)
    out = _str(tx.proposal_id) + encode_entry(tx.entry) + _u32(len(endorsements))
    for endorsement in endorsements:
        out += _str(endorsement.peer_id) + _bytes(endorsement.signature)
    return out


def _read_tx(r: _Reader) -> CommittedTx:
    proposal_id = r.str()
    entry = _read_entry(r)
    n = r.u32()
    endorsements = tuple(Endorsement(peer_id=r.str(), signature=r.bytes()) for _ in range(n))
    return CommittedTx(proposal_id=proposal_id, entry=entry, endorsements=endorsements)


def decode_tx(data: bytes) -> CommittedTx:
    r = _Reader(data)
    tx = _read_tx(r)
    if not r.done():
        raise CodecError("trailing bytes after transaction")
    return tx


# ---------------------------------------------------------------------------
# block


def encode_block_body(height: int, prev_hash: bytes, commit_time: int, tx_blobs: list[bytes]) -> bytes:
    if len(prev_hash) != HASH_SIZE:
        raise CodecError("prev_hash must be 32 bytes")
    out = _u64(height) + prev_hash + _u64(commit_time) + _u32(len(tx_blobs))
    for blob in tx_blobs:
        out += _bytes(blob)
    return out


def build_block(
    height: int, prev_hash: bytes, commit_time: int, txs: list[CommittedTx]
) -> bytes:
    """Encode a block and stamp its hash; returns the canonical block bytes."""
    body = encode_block_body(height, prev_hash, commit_time, [encode_tx(t) for t in txs])
    return body + hashlib.sha256(body).digest()


def decode_block(data: bytes) -> Block:
    r = _Reader(data)
    height = r.u64()
    prev_hash = r.take(HASH_SIZE)
    commit_time = r.u64()
    n_tx = r.u32()
    txs = []
    for _ in range(n_tx):
        blob = r.bytes()
        txs.append(decode_tx(blob))
    block_hash = r.take(HASH_SIZE)
    if not r.done():
        raise CodecError("trailing bytes after block")
    return Block(
        height=height,
        prev_hash=prev_hash,
        commit_time=commit_time,
        txs=tuple(txs),
        block_hash=block_hash,
    )


def recompute_block_hash(data: bytes) -> bytes:
    """Hash of the block contents, ignoring the stored trailing hash field."""
    if len(data) < HASH_SIZE:
        raise CodecError("block shorter than a hash")
    return hashlib.sha256(data[:-HASH_SIZE]).digest()


def stored_block_hash(data: bytes) -> bytes:
    if len(data) < HASH_SIZE:
        raise CodecError("block shorter than a hash")
    return data[-HASH_SIZE:]


def genesis_block() -> bytes:
    """The fixed height-0 block every chain starts from."""
    return build_block(0, GENESIS_PREV_HASH, 0, [])

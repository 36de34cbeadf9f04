"""Append-only hash-chained ledger with a rebuildable world-state index.

The authoritative representation of every block is its canonical byte
string; replicas are considered converged when their byte sequences are
identical. Decoded views and the per-vehicle index are derived state,
rebuilt from the bytes on load.
"""
from __future__ import annotations

import bisect
import os
import struct
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from smartpark.errors import CodecError, IntegrityError
from smartpark.ledger import codec
from smartpark.ledger.codec import Block, CommittedTx
from smartpark.ledger.entries import Action, TimesheetEntry


@dataclass(frozen=True)
class VerificationReport:
    valid: bool
    first_bad_height: Optional[int]


def verify_blocks(raw_blocks: Iterable[bytes]) -> VerificationReport:
    """Recompute hashes and back-links over raw block bytes, genesis first."""
    prev_hash = codec.GENESIS_PREV_HASH
    height = -1
    for height, raw in enumerate(raw_blocks):
        try:
            block = codec.decode_block(raw)
        except CodecError:
            return VerificationReport(valid=False, first_bad_height=height)
        if (
            block.height != height
            or block.prev_hash != prev_hash
            or codec.recompute_block_hash(raw) != block.block_hash
            or (height > 0 and not block.txs)
        ):
            return VerificationReport(valid=False, first_bad_height=height)
        prev_hash = block.block_hash
    if height < 0:
        return VerificationReport(valid=False, first_bad_height=0)
    return VerificationReport(valid=True, first_bad_height=None)


class Ledger:
    """One replica's chain: genesis plus every committed block, in order."""

    def __init__(self, raw_blocks: Optional[Iterable[bytes]] = None, verify: bool = True):
        self._raw: list[bytes] = []
        self._decoded: list[Optional[Block]] = []
        # world state: uid -> entries kept sorted by (time, id)
        self._by_uid: dict[str, list[TimesheetEntry]] = {}
        blocks = list(raw_blocks) if raw_blocks is not None else [codec.genesis_block()]
        for raw in blocks:
            self._append_unchecked(raw)
        if verify:
            report = self.verify()
            if not report.valid:
                raise IntegrityError(f"chain invalid at height {report.first_bad_height}")

    # -- construction -------------------------------------------------------

    def _append_unchecked(self, raw: bytes) -> Optional[Block]:
        block: Optional[Block]
        try:
            block = codec.decode_block(raw)
        except CodecError:
            block = None
        self._raw.append(bytes(raw))
        self._decoded.append(block)
        if block is not None:
            for tx in block.txs:
                self._index_entry(tx.entry)
        return block

    def _index_entry(self, entry: TimesheetEntry) -> None:
        entries = self._by_uid.setdefault(entry.uid, [])
        bisect.insort(entries, entry, key=TimesheetEntry.sort_key)

    def append_block(self, raw: bytes) -> Block:
        """Validate and append one block; raises IntegrityError if it does not
        extend the current tip."""
        try:
            block = codec.decode_block(raw)
        except CodecError as exc:
            raise IntegrityError(f"undecodable block: {exc}") from None
        if codec.recompute_block_hash(raw) != block.block_hash:
            raise IntegrityError(f"block hash mismatch at height {block.height}")
        if block.height != self.height + 1:
            raise IntegrityError(
                f"expected height {self.height + 1}, block carries {block.height}"
            )
        if block.prev_hash != self.tip_hash:
            raise IntegrityError(f"back-link mismatch at height {block.height}")
        if not block.txs:
            raise IntegrityError("non-genesis block with no transactions")
        self._append_unchecked(raw)
        return block

    # -- inspection ---------------------------------------------------------

    @property
    def height(self) -> int:
        return len(self._raw) - 1

    @property
    def tip_hash(self) -> bytes:
        return codec.stored_block_hash(self._raw[-1])

    def raw_block(self, height: int) -> bytes:
        return self._raw[height]

    def raw_blocks(self) -> list[bytes]:
        return list(self._raw)

    def blocks_from(self, height: int) -> list[bytes]:
        return self._raw[height:]

    def block(self, height: int) -> Block:
        decoded = self._decoded[height]
        if decoded is None:
            raise IntegrityError(f"block {height} is not decodable")
        return decoded

    def transactions(self) -> Iterator[CommittedTx]:
        for block in self._decoded:
            if block is not None:
                yield from block.txs

    def entry_count(self) -> int:
        return sum(len(b.txs) for b in self._decoded if b is not None)

    # -- queries ------------------------------------------------------------

    def logs_for(self, uid: str) -> list[TimesheetEntry]:
        """Every committed entry for the vehicle code, (time, id) ascending."""
        return list(self._by_uid.get(uid, []))

    def last_checked_in(self, uid: str) -> Optional[TimesheetEntry]:
        """The check-in with maximal (time, id) for the vehicle code, if any."""
        for entry in reversed(self._by_uid.get(uid, [])):
            if entry.action is Action.CHECK_IN:
                return entry
        return None

    def known_uids(self) -> list[str]:
        return sorted(self._by_uid)

    # -- integrity ----------------------------------------------------------

    def verify(self) -> VerificationReport:
        """Recompute every block hash and back-link from the stored bytes."""
        return verify_blocks(self._raw)

    # -- persistence --------------------------------------------------------
    # On disk a ledger is a sequence of frames, one per block:
    #   u32 block byte length | block bytes
    # Appending a block appends one frame; startup replays the file.

    def append_frame(self, path: str, raw: bytes) -> None:
        with open(path, "ab") as fh:
            fh.write(struct.pack(">I", len(raw)) + raw)

    def save(self, path: str) -> None:
        tmp = path + ".tmp"
        with open(tmp, "wb") as fh:
            for raw in self._raw:
                fh.write(struct.pack(">I", len(raw)) + raw)
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str, verify: bool = True) -> "Ledger":
        blocks = []
        with open(path, "rb") as fh:
            data = fh.read()
        pos = 0
        while pos < len(data):
            if pos + 4 > len(data):
                raise CodecError("truncated block frame header")
            (length,) = struct.unpack(">I", data[pos : pos + 4])
            pos += 4
            if pos + length > len(data):
                raise CodecError("truncated block frame")
            blocks.append(data[pos : pos + length])
            pos += length
        return cls(raw_blocks=blocks, verify=verify)

    # -- equality -----------------------------------------------------------

    def same_chain(self, other: "Ledger") -> bool:
        return self._raw == other._raw

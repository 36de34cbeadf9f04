"""Embedded relational store for gateway metadata.

SQLite behind a small interface: accounts, vehicles, recorded payments,
and the per-entry notification ledger. One connection, one lock; every
mutation runs inside a transaction, and ticket payment additionally takes
a per-ticket mutex so a charge can never race its own bookkeeping.
"""
from __future__ import annotations

import contextlib
import secrets
import sqlite3
import threading
import time
from dataclasses import dataclass
from typing import Optional

from smartpark.errors import ConflictError, NotFoundError

_SCHEMA = """
CREATE TABLE IF NOT EXISTS accounts (
    account_id            TEXT PRIMARY KEY,
    email                 TEXT NOT NULL UNIQUE,
    password_hash         TEXT NOT NULL,
    activated             INTEGER NOT NULL DEFAULT 0,
    activation_code       TEXT,
    activation_expires_ms INTEGER,
    reset_code            TEXT,
    reset_expires_ms      INTEGER,
    license_name          TEXT,
    license_number        TEXT,
    card_token            TEXT,
    device_push_token     TEXT,
    created_ms            INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS vehicles (
    vehicle_id  TEXT PRIMARY KEY,
    owner       TEXT NOT NULL REFERENCES accounts(account_id),
    model       TEXT NOT NULL,
    make        TEXT NOT NULL,
    plate       TEXT NOT NULL,
    device_code TEXT NOT NULL UNIQUE,
    active      INTEGER NOT NULL DEFAULT 0,
    UNIQUE(owner, plate)
);
CREATE TABLE IF NOT EXISTS payments (
    ticket_id   TEXT PRIMARY KEY,
    payment_ref TEXT NOT NULL,
    amount      INTEGER NOT NULL,
    paid_ms     INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS notified_entries (
    entry_id    TEXT PRIMARY KEY,
    pushed      INTEGER NOT NULL,
    notified_ms INTEGER NOT NULL
);
"""


@dataclass(frozen=True)
class DriverAccount:
    account_id: str
    email: str
    password_hash: str
    activated: bool
    activation_code: Optional[str]
    activation_expires_ms: Optional[int]
    reset_code: Optional[str]
    reset_expires_ms: Optional[int]
    license_name: Optional[str]
    license_number: Optional[str]
    card_token: Optional[str]
    device_push_token: Optional[str]

    @property
    def license_present(self) -> bool:
        return self.license_number is not None

    @property
    def card_present(self) -> bool:
        return self.card_token is not None


@dataclass(frozen=True)
class Vehicle:
    vehicle_id: str
    owner: str
    model: str
    make: str
    plate: str
    device_code: str
    active: bool

    def to_json(self) -> dict:
        return {
            "vehicle_id": self.vehicle_id,
            "model": self.model,
            "make": self.make,
            "plate": self.plate,
            "device_code": self.device_code,
            "active": self.active,
        }


def _now_ms() -> int:
    return int(time.time() * 1000)


class GatewayStore:
    def __init__(self, path: str = ":memory:"):
        self._conn = sqlite3.connect(path, check_same_thread=False)
        self._conn.row_factory = sqlite3.Row
        self._lock = threading.RLock()
        self._ticket_locks: dict[str, threading.Lock] = {}
        with self._lock:
            self._conn.executescript(_SCHEMA)
            self._conn.commit()

    def close(self) -> None:
        self._conn.close()

    @contextlib.contextmanager
    def _tx(self):
        with self._lock:
            try:
                yield self._conn
                self._conn.commit()
            except Exception:
                self._conn.rollback()
                raise

    # -- accounts -------------------------------------------------------------

    def create_account(
        self,
        email: str,
        password_hash: str,
        activation_code: str,
        activation_expires_ms: int,
    ) -> DriverAccount:
        account_id = f"acct_{secrets.token_hex(8)}"
        with self._tx() as conn:
            try:
                conn.execute(
                    "INSERT INTO accounts (account_id, email, password_hash, activated,"
                    " activation_code, activation_expires_ms, created_ms)"
                    " VALUES (?, ?, ?, 0, ?, ?, ?)",
                    (account_id, email, password_hash, activation_code,
                     activation_expires_ms, _now_ms()),
                )
            except sqlite3.IntegrityError:
                raise ConflictError(f"email {email!r} is already registered") from None
        return self.account_by_id(account_id)

    def _account_from_row(self, row: sqlite3.Row) -> DriverAccount:
        return DriverAccount(
            account_id=row["account_id"],
            email=row["email"],
            password_hash=row["password_hash"],
            activated=bool(row["activated"]),
            activation_code=row["activation_code"],
            activation_expires_ms=row["activation_expires_ms"],
            reset_code=row["reset_code"],
            reset_expires_ms=row["reset_expires_ms"],
            license_name=row["license_name"],
            license_number=row["license_number"],
            card_token=row["card_token"],
            device_push_token=row["device_push_token"],
        )

    def account_by_email(self, email: str) -> Optional[DriverAccount]:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM accounts WHERE email = ?", (email,)
            ).fetchone()
        return self._account_from_row(row) if row else None

    def account_by_id(self, account_id: str) -> DriverAccount:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM accounts WHERE account_id = ?", (account_id,)
            ).fetchone()
        if row is None:
            raise NotFoundError(f"no account {account_id!r}")
        return self._account_from_row(row)

    def update_account(self, account_id: str, **fields) -> None:
        if not fields:
            return
        keys = sorted(fields)
        assignments = ", ".join(f"{k} = ?" for k in keys)
        with self._tx() as conn:
            cur = conn.execute(
                f"UPDATE accounts SET {assignments} WHERE account_id = ?",
                [fields[k] for k in keys] + [account_id],
            )
            if cur.rowcount == 0:
                raise NotFoundError(f"no account {account_id!r}")

    # -- vehicles -------------------------------------------------------------

    def add_vehicle(
        self,
        owner: str,
        model: str,
        make: str,
        plate: str,
        device_code: str,
        active: bool,
    ) -> Vehicle:
        vehicle_id = f"veh_{secrets.token_hex(8)}"
        with self._tx() as conn:
            try:
                conn.execute(
                    "INSERT INTO vehicles (vehicle_id, owner, model, make, plate,"
                    " device_code, active) VALUES (?, ?, ?, ?, ?, ?, ?)",
                    (vehicle_id, owner, model, make, plate, device_code, int(active)),
                )
            except sqlite3.IntegrityError as exc:
                if "device_code" in str(exc):
                    raise ConflictError("device code collision") from None
                raise ConflictError(
                    f"plate {plate!r} is already registered on this account"
                ) from None
        return self.vehicle_by_id(vehicle_id)

    def _vehicle_from_row(self, row: sqlite3.Row) -> Vehicle:
        return Vehicle(
            vehicle_id=row["vehicle_id"],
            owner=row["owner"],
            model=row["model"],
            make=row["make"],
            plate=row["plate"],
            device_code=row["device_code"],
            active=bool(row["active"]),
        )

    def vehicle_by_id(self, vehicle_id: str) -> Vehicle:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM vehicles WHERE vehicle_id = ?", (vehicle_id,)
            ).fetchone()
        if row is None:
            raise NotFoundError(f"no vehicle {vehicle_id!r}")
        return self._vehicle_from_row(row)

    def vehicle_by_device_code(self, device_code: str) -> Optional[Vehicle]:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM vehicles WHERE device_code = ?", (device_code,)
            ).fetchone()
        return self._vehicle_from_row(row) if row else None

    def vehicles_of(self, owner: str) -> list[Vehicle]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT * FROM vehicles WHERE owner = ? ORDER BY vehicle_id", (owner,)
            ).fetchall()
        return [self._vehicle_from_row(r) for r in rows]

    def update_vehicle(self, vehicle_id: str, **fields) -> None:
        if not fields:
            return
        keys = sorted(fields)
        assignments = ", ".join(f"{k} = ?" for k in keys)
        with self._tx() as conn:
            try:
                cur = conn.execute(
                    f"UPDATE vehicles SET {assignments} WHERE vehicle_id = ?",
                    [fields[k] for k in keys] + [vehicle_id],
                )
            except sqlite3.IntegrityError:
                raise ConflictError("vehicle update violates a uniqueness rule") from None
            if cur.rowcount == 0:
                raise NotFoundError(f"no vehicle {vehicle_id!r}")

    def set_active_vehicle(self, owner: str, vehicle_id: str) -> None:
        """At most one active vehicle per owner, atomically."""
        with self._tx() as conn:
            row = conn.execute(
                "SELECT vehicle_id FROM vehicles WHERE vehicle_id = ? AND owner = ?",
                (vehicle_id, owner),
            ).fetchone()
            if row is None:
                raise NotFoundError(f"no vehicle {vehicle_id!r} for this account")
            conn.execute("UPDATE vehicles SET active = 0 WHERE owner = ?", (owner,))
            conn.execute("UPDATE vehicles SET active = 1 WHERE vehicle_id = ?", (vehicle_id,))

    def delete_vehicle(self, vehicle_id: str) -> None:
        with self._tx() as conn:
            cur = conn.execute("DELETE FROM vehicles WHERE vehicle_id = ?", (vehicle_id,))
            if cur.rowcount == 0:
                raise NotFoundError(f"no vehicle {vehicle_id!r}")

    # -- payments ---------------------------------------------------------------

    @contextlib.contextmanager
    def ticket_lock(self, ticket_id: str):
        with self._lock:
            lock = self._ticket_locks.setdefault(ticket_id, threading.Lock())
        with lock:
            yield

    def get_payment(self, ticket_id: str) -> Optional[dict]:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM payments WHERE ticket_id = ?", (ticket_id,)
            ).fetchone()
        if row is None:
            return None
        return {
            "ticket_id": row["ticket_id"],
            "payment_ref": row["payment_ref"],
            "amount": row["amount"],
            "paid_ms": row["paid_ms"],
        }

    def record_payment(self, ticket_id: str, payment_ref: str, amount: int) -> None:
        with self._tx() as conn:
            conn.execute(
                "INSERT INTO payments (ticket_id, payment_ref, amount, paid_ms)"
                " VALUES (?, ?, ?, ?)",
                (ticket_id, payment_ref, amount, _now_ms()),
            )

    def payments_total(self) -> int:
        with self._lock:
            row = self._conn.execute("SELECT COALESCE(SUM(amount), 0) AS t FROM payments").fetchone()
        return row["t"]

    # -- notification ledger ------------------------------------------------------

    def mark_notified(self, entry_id: str, pushed: bool) -> bool:
        """Record delivery for an entry; False if it was already recorded."""
        with self._tx() as conn:
            try:
                conn.execute(
                    "INSERT INTO notified_entries (entry_id, pushed, notified_ms)"
                    " VALUES (?, ?, ?)",
                    (entry_id, int(pushed), _now_ms()),
                )
            except sqlite3.IntegrityError:
                return False
        return True

"""Billing domain types: tickets, anomaly flags, and the tariff table.

Money is integer minor units throughout; durations are integer minutes,
rounded up, with a one-minute floor.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

from smartpark.errors import ConfigurationError
from smartpark.ledger.entries import Region

MS_PER_MINUTE = 60_000
DEFAULT_STALENESS_MS = 24 * 60 * 60 * 1000  # open check-ins older than this are flagged

DEFAULT_RATES = {Region.DB: 3, Region.LN: 2, Region.CK: 2}


class TicketStatus(Enum):
    OPEN = "Open"
    UNPAID = "Unpaid"
    PAID = "Paid"


class AnomalyKind(Enum):
    DUPLICATE_CHECK_IN = "DuplicateCheckIn"
    DUPLICATE_CHECK_OUT = "DuplicateCheckOut"
    ORPHAN_CHECK_OUT = "OrphanCheckOut"
    MISSING_CHECK_OUT = "MissingCheckOut"


@dataclass(frozen=True)
class AnomalyFlag:
    kind: AnomalyKind
    entry_ids: tuple[str, ...]

    def __post_init__(self):
        if not self.entry_ids:
            raise ValueError("anomaly flag must implicate at least one entry")


@dataclass(frozen=True)
class RateTable:
    per_region: dict
    minimum_charge_minutes: int = 1

    def validate(self) -> None:
        if self.minimum_charge_minutes < 1:
            raise ConfigurationError("minimum_charge_minutes must be >= 1")
        for region in Region:
            rate = self.per_region.get(region)
            if not isinstance(rate, int) or rate <= 0:
                raise ConfigurationError(f"missing or bad rate for region {region.value}")

    def rate_for(self, region: Region) -> int:
        rate = self.per_region.get(region)
        if rate is None:
            raise ConfigurationError(f"no rate configured for region {region.value}")
        return rate


def default_rate_table() -> RateTable:
    return RateTable(per_region=dict(DEFAULT_RATES), minimum_charge_minutes=1)


def duration_minutes(check_in_ms: int, check_out_ms: int) -> int:
    """Ceiling-rounded minutes between the timestamps, at least 1."""
    delta = check_out_ms - check_in_ms
    if delta < 0:
        raise ValueError("check_out precedes check_in")
    return max(1, math.ceil(delta / MS_PER_MINUTE))


def ticket_id_for(uid: str, check_in_entry_id: str, check_out_entry_id: Optional[str]) -> str:
    """Stable ticket identity: the same ledger pairing always yields the same id."""
    material = "|".join([uid, check_in_entry_id, check_out_entry_id or "open"])
    return hashlib.sha256(material.encode("utf-8")).hexdigest()[:32]


@dataclass(frozen=True)
class ParkingTicket:
    ticket_id: str
    uid: str
    region: Region
    check_in: int
    check_out: Optional[int] = None
    duration_minutes: Optional[int] = None
    cost_minor_units: Optional[int] = None
    status: TicketStatus = TicketStatus.OPEN
    payment_ref: Optional[str] = None
    anomalies: tuple[AnomalyFlag, ...] = ()
    entry_ids: tuple[str, ...] = field(default=(), compare=False)

    @property
    def closed(self) -> bool:
        return self.check_out is not None

    def with_payment(self, payment_ref: str) -> "ParkingTicket":
        return replace(self, status=TicketStatus.PAID, payment_ref=payment_ref)

    def to_json(self) -> dict:
        return {
            "ticket_id": self.ticket_id,
            "uid": self.uid,
            "region": self.region.value,
            "check_in": self.check_in,
            "check_out": self.check_out,
            "duration_minutes": self.duration_minutes,
            "cost_minor_units": self.cost_minor_units,
            "status": self.status.value,
            "payment_ref": self.payment_ref,
            "anomalies": [
                {"kind": a.kind.value, "entry_ids": list(a.entry_ids)} for a in self.anomalies
            ],
        }

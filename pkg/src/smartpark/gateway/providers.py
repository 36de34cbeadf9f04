"""In-process provider fakes: email, push, and payments.

Each mock keeps an inspectable delivery/charge log so tests (and the
acceptance suite) can assert exactly what went out. The payment mock
speaks a sandbox nonce vocabulary: a valid nonce tokenizes normally, a
fraud nonce is refused at tokenization, and a decline nonce tokenizes
but every later charge on it is declined.
"""
from __future__ import annotations

import secrets
import threading
from dataclasses import dataclass, field
from typing import Optional

from smartpark.errors import SmartParkError

NONCE_VALID = "fake-valid-nonce"
NONCE_DECLINE = "fake-decline-nonce"
NONCE_FRAUD = "fake-fraud-nonce"


class ProviderError(SmartParkError):
    """The provider refused the request (fraud screen, bad nonce, bad token)."""


class DeclinedError(SmartParkError):
    """The charge was declined; the ticket stays unpaid."""


class ProviderUnreachableError(SmartParkError):
    """Transport failure before the provider saw the request; safe to retry."""


@dataclass(frozen=True)
class EmailMessage:
    to: str
    subject: str
    body: str


class MockEmailProvider:
    def __init__(self):
        self.sent: list[EmailMessage] = []

    def send(self, to: str, subject: str, body: str) -> None:
        self.sent.append(EmailMessage(to=to, subject=subject, body=body))

    def last_to(self, to: str) -> Optional[EmailMessage]:
        for message in reversed(self.sent):
            if message.to == to:
                return message
        return None


@dataclass(frozen=True)
class PushMessage:
    device_token: str
    title: str
    body: str
    data: dict


class MockPushProvider:
    def __init__(self):
        self.pushed: list[PushMessage] = []

    def push(self, device_token: str, title: str, body: str, data: Optional[dict] = None) -> None:
        self.pushed.append(
            PushMessage(device_token=device_token, title=title, body=body, data=data or {})
        )

    def count_for_entry(self, entry_id: str) -> int:
        return sum(1 for p in self.pushed if p.data.get("entry_id") == entry_id)


@dataclass(frozen=True)
class ChargeRecord:
    reference: str
    card_token: str
    amount: int
    outcome: str  # "approved" | "declined"
    payment_ref: Optional[str]


class MockPaymentProvider:
    def __init__(self):
        self._lock = threading.Lock()
        self.customers: dict[str, str] = {}  # card_token -> behavior
        self.charges: list[ChargeRecord] = []
        self.unreachable = False

    # -- tokenization --

    def create_customer(self, nonce: str) -> str:
        if self.unreachable:
            raise ProviderUnreachableError("payment provider unreachable")
        if nonce == NONCE_FRAUD:
            raise ProviderError("card refused: failed fraud screening")
        if nonce == NONCE_VALID:
            behavior = "ok"
        elif nonce == NONCE_DECLINE:
            behavior = "decline"
        else:
            raise ProviderError(f"invalid payment nonce {nonce!r}")
        token = f"card_{secrets.token_hex(8)}"
        with self._lock:
            self.customers[token] = behavior
        return token

    # -- charging --

    def charge(self, card_token: str, amount_minor: int, reference: str) -> str:
        if self.unreachable:
            raise ProviderUnreachableError("payment provider unreachable")
        with self._lock:
            behavior = self.customers.get(card_token)
            if behavior is None:
                raise ProviderError(f"unknown card token {card_token!r}")
            if behavior == "decline":
                self.charges.append(
                    ChargeRecord(
                        reference=reference,
                        card_token=card_token,
                        amount=amount_minor,
                        outcome="declined",
                        payment_ref=None,
                    )
                )
                raise DeclinedError("card declined by issuer")
            payment_ref = f"pay_{secrets.token_hex(8)}"
            self.charges.append(
                ChargeRecord(
                    reference=reference,
                    card_token=card_token,
                    amount=amount_minor,
                    outcome="approved",
                    payment_ref=payment_ref,
                )
            )
            return payment_ref

    # -- inspection --

    def approved_charges(self, reference: Optional[str] = None) -> list[ChargeRecord]:
        return [
            c
            for c in self.charges
            if c.outcome == "approved" and (reference is None or c.reference == reference)
        ]

    def total_approved(self) -> int:
        return sum(c.amount for c in self.approved_charges())

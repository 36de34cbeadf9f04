"""Charging unpaid tickets through the payment provider.

A ticket can be charged at most once, ever: the charge and the paid-state
record happen inside a per-ticket critical section keyed by ticket_id, and
a recorded payment short-circuits any later attempt.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol

from smartpark.errors import StateError, ValidationError
from smartpark.billing.tickets import ParkingTicket, TicketStatus


class PaymentStore(Protocol):
    """Durable paid-state with per-ticket mutual exclusion."""

    def ticket_lock(self, ticket_id: str): ...  # context manager

    def get_payment(self, ticket_id: str) -> Optional[dict]: ...

    def record_payment(self, ticket_id: str, payment_ref: str, amount: int) -> None: ...


class ChargeProvider(Protocol):
    def charge(self, card_token: str, amount_minor: int, reference: str) -> str: ...


@dataclass(frozen=True)
class PaymentResult:
    ticket_id: str
    ok: bool
    payment_ref: Optional[str] = None
    amount: Optional[int] = None
    reason: str = ""


def pay_ticket(
    ticket: ParkingTicket,
    card_token: str,
    provider: ChargeProvider,
    store: PaymentStore,
) -> PaymentResult:
    if ticket.status is TicketStatus.OPEN or not ticket.closed:
        raise StateError(f"ticket {ticket.ticket_id} is still open")
    if ticket.cost_minor_units is None:
        raise ValidationError(f"ticket {ticket.ticket_id} has no computed cost")
    with store.ticket_lock(ticket.ticket_id):
        if store.get_payment(ticket.ticket_id) is not None:
            raise StateError(f"ticket {ticket.ticket_id} is already paid")
        payment_ref = provider.charge(
            card_token, ticket.cost_minor_units, reference=ticket.ticket_id
        )
        store.record_payment(ticket.ticket_id, payment_ref, ticket.cost_minor_units)
    return PaymentResult(
        ticket_id=ticket.ticket_id,
        ok=True,
        payment_ref=payment_ref,
        amount=ticket.cost_minor_units,
    )

"""Ticket pricing: per-minute tariff with a minimum charge."""
from __future__ import annotations

from dataclasses import replace
from typing import Iterable, Optional

from smartpark.errors import NotFoundError, ValidationError
from smartpark.ledger.entries import TimesheetEntry
from smartpark.billing.reconcile import reconcile
from smartpark.billing.tickets import (
    ParkingTicket,
    RateTable,
    TicketStatus,
    duration_minutes,
)


def cost_for(duration_min: int, region, rates: RateTable) -> int:
    billed_minutes = max(duration_min, rates.minimum_charge_minutes)
    return billed_minutes * rates.rate_for(region)


def price(ticket: ParkingTicket, rates: RateTable) -> ParkingTicket:
    """Fill in cost for a closed ticket; Open status becomes Unpaid."""
    if not ticket.closed or ticket.duration_minutes is None:
        raise ValidationError("cannot price an open ticket")
    cost = cost_for(ticket.duration_minutes, ticket.region, rates)
    status = ticket.status if ticket.status is TicketStatus.PAID else TicketStatus.UNPAID
    return replace(ticket, cost_minor_units=cost, status=status)


def price_all(tickets: Iterable[ParkingTicket], rates: RateTable) -> list[ParkingTicket]:
    return [price(t, rates) if t.closed else t for t in tickets]


def open_checkin_cost_preview(
    entries: Iterable[TimesheetEntry], now: int, rates: RateTable
) -> int:
    """Project the cost of checking out right now; mutates nothing.

    Raises NotFoundError when the vehicle has no open check-in.
    """
    tickets, _ = reconcile(entries, now=None)
    open_tickets = [t for t in tickets if not t.closed]
    if not open_tickets:
        raise NotFoundError("no open check-in for this vehicle")
    open_ticket = open_tickets[-1]
    if now < open_ticket.check_in:
        raise ValidationError("preview time precedes the open check-in")
    return cost_for(duration_minutes(open_ticket.check_in, now), open_ticket.region, rates)

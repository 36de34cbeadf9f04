from smartpark.billing.tickets import (
    AnomalyFlag,
    AnomalyKind,
    ParkingTicket,
    RateTable,
    TicketStatus,
    default_rate_table,
    duration_minutes,
    ticket_id_for,
)
from smartpark.billing.reconcile import reconcile
from smartpark.billing.pricing import cost_for, open_checkin_cost_preview, price, price_all
from smartpark.billing.payment import PaymentResult, pay_ticket

__all__ = [
    "AnomalyFlag",
    "AnomalyKind",
    "ParkingTicket",
    "PaymentResult",
    "RateTable",
    "TicketStatus",
    "cost_for",
    "default_rate_table",
    "duration_minutes",
    "open_checkin_cost_preview",
    "pay_ticket",
    "price",
    "price_all",
    "reconcile",
    "ticket_id_for",
]

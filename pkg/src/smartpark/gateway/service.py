"""Gateway business logic, independent of the HTTP layer.

Everything an authenticated endpoint can reach is scoped to the caller's
account: vehicles are looked up by owner, ticket views are derived from
that vehicle's ledger entries, and payment only touches tickets belonging
to the account's own vehicles.
"""
from __future__ import annotations

import re
import secrets
import time
from datetime import datetime, timezone
from typing import Callable, Optional

from smartpark.errors import (
    AccessDeniedError,
    AuthError,
    ConflictError,
    NotFoundError,
    StateError,
    ValidationError,
)
from smartpark.ledger.chaincode import OP_CHECK_IN, OP_CHECK_OUT
from smartpark.ledger.entries import DomainEvent, Region, TimesheetEntry, parse_region
from smartpark.billing.payment import PaymentResult, pay_ticket
from smartpark.billing.pricing import open_checkin_cost_preview, price_all
from smartpark.billing.reconcile import reconcile
from smartpark.billing.tickets import ParkingTicket, RateTable, TicketStatus
from smartpark.gateway.providers import DeclinedError, ProviderError
from smartpark.gateway.security import (
    TokenSigner,
    hash_password,
    strip_bearer,
    verify_password,
)
from smartpark.gateway.store import DriverAccount, GatewayStore, Vehicle

ACTIVATION_TTL_MS = 15 * 60 * 1000
RESET_TTL_MS = 15 * 60 * 1000
_EMAIL_RE = re.compile(r"^[^@\s]+@[^@\s]+\.[^@\s]+$")

DEVICE_SUBMITTER = "parking.device"


def _require_email(email: str) -> str:
    if not _EMAIL_RE.match(email or ""):
        raise ValidationError(f"not a valid email address: {email!r}")
    return email.lower()


def _require_strong_password(password: str) -> None:
    if len(password or "") < 8:
        raise ValidationError("password must be at least 8 characters")
    if not re.search(r"[A-Za-z]", password) or not re.search(r"\d", password):
        raise ValidationError("password must mix letters and digits")


def entry_to_json(entry: TimesheetEntry) -> dict:
    return {
        "id": entry.id,
        "uid": entry.uid,
        "time": entry.time,
        "action": entry.action.value,
        "region": entry.region.value,
    }


class GatewayService:
    def __init__(
        self,
        store: GatewayStore,
        network,
        signer: TokenSigner,
        email_provider,
        push_provider,
        payment_provider,
        rates: RateTable,
        hash_rounds: int = 10,
        staleness_ms: int = 24 * 60 * 60 * 1000,
        now_ms: Optional[Callable[[], int]] = None,
    ):
        self.store = store
        self.network = network
        self.signer = signer
        self.email = email_provider
        self.push = push_provider
        self.payments = payment_provider
        self.rates = rates
        self.hash_rounds = hash_rounds
        self.staleness_ms = staleness_ms
        self._now_ms = now_ms if now_ms is not None else (lambda: int(time.time() * 1000))
        network.subscribe(self.on_ledger_event)

    def now_ms(self) -> int:
        return self._now_ms()

    # -- registration & auth ---------------------------------------------------

    def register(self, email: str, password: str) -> DriverAccount:
        email = _require_email(email)
        _require_strong_password(password)
        code = f"{secrets.randbelow(1_000_000):06d}"
        account = self.store.create_account(
            email=email,
            password_hash=hash_password(password, self.hash_rounds),
            activation_code=code,
            activation_expires_ms=self.now_ms() + ACTIVATION_TTL_MS,
        )
        self.email.send(
            to=email,
            subject="Activate your parking account",
            body=f"Your activation code is {code}. It expires in 15 minutes.",
        )
        return account

    def activate(self, email: str, code: str) -> DriverAccount:
        account = self.store.account_by_email(_require_email(email))
        if account is None or account.activated or account.activation_code is None:
            raise AuthError("no pending activation for this email")
        if self.now_ms() > (account.activation_expires_ms or 0):
            raise StateError("activation code expired; request a new one")
        if code != account.activation_code:
            raise AuthError("wrong activation code")
        self.store.update_account(
            account.account_id, activated=1, activation_code=None,
            activation_expires_ms=None,
        )
        return self.store.account_by_id(account.account_id)

    def reissue_activation(self, email: str) -> None:
        account = self.store.account_by_email(_require_email(email))
        if account is None or account.activated:
            raise AuthError("no pending activation for this email")
        code = f"{secrets.randbelow(1_000_000):06d}"
        self.store.update_account(
            account.account_id,
            activation_code=code,
            activation_expires_ms=self.now_ms() + ACTIVATION_TTL_MS,
        )
        self.email.send(
            to=account.email,
            subject="Your new activation code",
            body=f"Your activation code is {code}. It expires in 15 minutes.",
        )

    def login(
        self, email: str, password: str, device_push_token: Optional[str] = None
    ) -> dict:
        account = self.store.account_by_email((email or "").lower())
        # one indistinguishable message for unknown email and wrong password
        if account is None or not verify_password(password, account.password_hash):
            raise AuthError("invalid email or password")
        if not account.activated:
            raise AuthError("account is not activated")
        if device_push_token:
            self.store.update_account(account.account_id, device_push_token=device_push_token)
            account = self.store.account_by_id(account.account_id)
        token = self.signer.issue(account.account_id, now_s=self.now_ms() // 1000)
        return {"token": token, **self.bootstrap_payload(account)}

    def bootstrap_payload(self, account: DriverAccount) -> dict:
        vehicles = self.store.vehicles_of(account.account_id)
        month_start = self._month_start_ms()
        now = self.now_ms()
        logs: list[dict] = []
        tickets: list[dict] = []
        for vehicle in vehicles:
            entries = self.network.logs_for(vehicle.device_code)
            month_entries = [e for e in entries if month_start <= e.time <= now]
            logs.extend(entry_to_json(e) for e in month_entries)
            vehicle_tickets = self._tickets_for_entries(vehicle.device_code, entries)
            tickets.extend(
                t.to_json() for t in vehicle_tickets if t.check_in >= month_start
            )
        return {
            "account": {
                "account_id": account.account_id,
                "email": account.email,
                "license": (
                    {"name": account.license_name, "license_number": account.license_number}
                    if account.license_present
                    else None
                ),
                "card_present": account.card_present,
                "push_registered": account.device_push_token is not None,
            },
            "vehicles": [v.to_json() for v in vehicles],
            "logs": logs,
            "tickets": tickets,
        }

    def _month_start_ms(self) -> int:
        now = datetime.fromtimestamp(self.now_ms() / 1000, tz=timezone.utc)
        start = now.replace(day=1, hour=0, minute=0, second=0, microsecond=0)
        return int(start.timestamp() * 1000)

    def authenticate(
        self, authorization: Optional[str], access_token: Optional[str] = None
    ) -> DriverAccount:
        raw = None
        if authorization:
            raw = strip_bearer(authorization)
        elif access_token:
            raw = access_token
        if not raw:
            raise AuthError("No access token found")
        account_id = self.signer.verify(raw, now_s=self.now_ms() // 1000)
        try:
            account = self.store.account_by_id(account_id)
        except NotFoundError:
            raise AuthError("token subject no longer exists") from None
        if not account.activated:
            raise AuthError("account is not activated")
        return account

    # -- password reset -----------------------------------------------------------

    def forgot_password(self, email: str) -> None:
        account = self.store.account_by_email(_require_email(email))
        if account is None:
            return  # no account enumeration via this endpoint
        code = f"{secrets.randbelow(1_000_000):06d}"
        self.store.update_account(
            account.account_id,
            reset_code=code,
            reset_expires_ms=self.now_ms() + RESET_TTL_MS,
        )
        self.email.send(
            to=account.email,
            subject="Password reset code",
            body=f"Your password reset code is {code}. It expires in 15 minutes.",
        )

    def reset_password(self, email: str, code: str, new_password: str) -> None:
        account = self.store.account_by_email(_require_email(email))
        if account is None or account.reset_code is None:
            raise AuthError("no pending password reset for this email")
        if self.now_ms() > (account.reset_expires_ms or 0):
            raise StateError("reset code expired; request a new one")
        if code != account.reset_code:
            raise AuthError("wrong reset code")
        _require_strong_password(new_password)
        self.store.update_account(
            account.account_id,
            password_hash=hash_password(new_password, self.hash_rounds),
            reset_code=None,
            reset_expires_ms=None,
        )

    # -- profile --------------------------------------------------------------------

    def set_license(self, account: DriverAccount, name: str, license_number: str) -> None:
        if not name or not license_number:
            raise ValidationError("license name and number are required")
        self.store.update_account(
            account.account_id, license_name=name, license_number=license_number
        )

    def add_card(self, account: DriverAccount, payment_nonce: str) -> str:
        # the provider performs validity and fraud screening; its message
        # travels back verbatim on failure
        token = self.payments.create_customer(payment_nonce)
        self.store.update_account(account.account_id, card_token=token)
        return token

    # -- vehicles ----------------------------------------------------------------------

    def add_vehicle(self, account: DriverAccount, model: str, make: str, plate: str) -> Vehicle:
        for label, value in (("model", model), ("make", make), ("plate", plate)):
            if not value or not str(value).strip():
                raise ValidationError(f"vehicle {label} is required")
        first = not self.store.vehicles_of(account.account_id)
        for _ in range(8):
            device_code = f"PV-{secrets.token_hex(5).upper()}"
            try:
                return self.store.add_vehicle(
                    owner=account.account_id,
                    model=model.strip(),
                    make=make.strip(),
                    plate=plate.strip(),
                    device_code=device_code,
                    active=first,
                )
            except ConflictError as exc:
                if "device code" in str(exc):
                    continue  # astronomically unlikely; draw again
                raise
        raise ConflictError("could not allocate a unique device code")

    def seed_vehicle(
        self, account: DriverAccount, device_code: str, model: str = "sim",
        make: str = "sim", plate: Optional[str] = None, active: bool = True,
    ) -> Vehicle:
        """Register a vehicle with a caller-chosen device code (simulation only)."""
        return self.store.add_vehicle(
            owner=account.account_id,
            model=model,
            make=make,
            plate=plate if plate is not None else device_code,
            device_code=device_code,
            active=active,
        )

    def _owned_vehicle(self, account: DriverAccount, vehicle_id: str) -> Vehicle:
        vehicle = self.store.vehicle_by_id(vehicle_id)
        if vehicle.owner != account.account_id:
            raise AccessDeniedError("vehicle belongs to a different account")
        return vehicle

    def update_vehicle(
        self,
        account: DriverAccount,
        vehicle_id: str,
        model: Optional[str] = None,
        make: Optional[str] = None,
        plate: Optional[str] = None,
        activate: Optional[bool] = None,
    ) -> Vehicle:
        vehicle = self._owned_vehicle(account, vehicle_id)
        fields = {}
        if model is not None:
            fields["model"] = model
        if make is not None:
            fields["make"] = make
        if plate is not None:
            fields["plate"] = plate
        if fields:
            self.store.update_vehicle(vehicle.vehicle_id, **fields)
        if activate:
            self.store.set_active_vehicle(account.account_id, vehicle.vehicle_id)
        return self.store.vehicle_by_id(vehicle.vehicle_id)

    def delete_vehicle(self, account: DriverAccount, vehicle_id: str) -> None:
        vehicle = self._owned_vehicle(account, vehicle_id)
        tickets = self._tickets_for_entries(
            vehicle.device_code, self.network.logs_for(vehicle.device_code)
        )
        if any(t.status is TicketStatus.OPEN for t in tickets):
            raise StateError("vehicle has an open parking ticket; check out first")
        self.store.delete_vehicle(vehicle.vehicle_id)

    # -- parking data -------------------------------------------------------------------

    def parking_logs(self, account: DriverAccount, vehicle_id: str) -> dict:
        vehicle = self._owned_vehicle(account, vehicle_id)
        entries = self.network.logs_for(vehicle.device_code)
        _, flags = reconcile(entries, now=self.now_ms(), staleness_ms=self.staleness_ms)
        return {
            "vehicle_id": vehicle.vehicle_id,
            "device_code": vehicle.device_code,
            "entries": [entry_to_json(e) for e in entries],
            "anomalies": [
                {"kind": f.kind.value, "entry_ids": list(f.entry_ids)} for f in flags
            ],
        }

    def _tickets_for_entries(
        self, device_code: str, entries: list[TimesheetEntry]
    ) -> list[ParkingTicket]:
        tickets, _ = reconcile(entries, now=self.now_ms(), staleness_ms=self.staleness_ms)
        tickets = price_all(tickets, self.rates)
        out = []
        for ticket in tickets:
            payment = self.store.get_payment(ticket.ticket_id)
            out.append(ticket.with_payment(payment["payment_ref"]) if payment else ticket)
        return out

    def tickets(self, account: DriverAccount, vehicle_id: str) -> list[ParkingTicket]:
        vehicle = self._owned_vehicle(account, vehicle_id)
        return self._tickets_for_entries(
            vehicle.device_code, self.network.logs_for(vehicle.device_code)
        )

    def open_ticket_preview(self, account: DriverAccount, vehicle_id: str) -> dict:
        vehicle = self._owned_vehicle(account, vehicle_id)
        now = self.now_ms()
        cost = open_checkin_cost_preview(
            self.network.logs_for(vehicle.device_code), now, self.rates
        )
        return {"vehicle_id": vehicle_id, "projected_cost_minor_units": cost, "as_of": now}

    # -- payment ----------------------------------------------------------------------------

    def pay(self, account: DriverAccount, ticket_ids: list[str]) -> list[PaymentResult]:
        if not account.card_token:
            raise ValidationError("no card on file; add one under profile first")
        if not ticket_ids:
            raise ValidationError("no ticket ids given")
        owned: dict[str, ParkingTicket] = {}
        for vehicle in self.store.vehicles_of(account.account_id):
            for ticket in self._tickets_for_entries(
                vehicle.device_code, self.network.logs_for(vehicle.device_code)
            ):
                owned[ticket.ticket_id] = ticket
        results: list[PaymentResult] = []
        for ticket_id in ticket_ids:
            ticket = owned.get(ticket_id)
            if ticket is None:
                results.append(
                    PaymentResult(ticket_id=ticket_id, ok=False,
                                  reason="ticket not found on this account")
                )
                continue
            try:
                results.append(
                    pay_ticket(ticket, account.card_token, self.payments, self.store)
                )
            except StateError as exc:
                results.append(PaymentResult(ticket_id=ticket_id, ok=False, reason=str(exc)))
            except DeclinedError as exc:
                results.append(PaymentResult(ticket_id=ticket_id, ok=False, reason=str(exc)))
            except ProviderError as exc:
                results.append(PaymentResult(ticket_id=ticket_id, ok=False, reason=str(exc)))
        return results

    # -- device + ledger surface ---------------------------------------------------------------

    def _device_submit(self, op: str, device_code: str, region: str) -> dict:
        vehicle = self.store.vehicle_by_device_code(device_code)
        if vehicle is None or not vehicle.active:
            raise NotFoundError(f"no active vehicle with device code {device_code!r}")
        region_v: Region = parse_region(region)
        reply = self.network.submit_or_raise(
            op,
            {"uid": device_code, "region": region_v.value, "at": self.now_ms()},
            submitter=f"{DEVICE_SUBMITTER}.{device_code}",
        )
        return {
            "status": reply.status.value,
            "block_height": reply.block_height,
            "entry": entry_to_json(reply.entry),
        }

    def device_checkin(self, device_code: str, region: str) -> dict:
        return self._device_submit(OP_CHECK_IN, device_code, region)

    def device_checkout(self, device_code: str, region: str) -> dict:
        return self._device_submit(OP_CHECK_OUT, device_code, region)

    def ledger_status(self) -> dict:
        status = self.network.status()
        report = self.network.verify()
        if isinstance(report, dict):
            status["chain_valid"] = report["valid"]
        else:
            status["chain_valid"] = report.valid
        return status

    # -- ledger events -> push notifications -----------------------------------------------------

    def on_ledger_event(self, event: DomainEvent) -> None:
        """At-least-once event stream in, at-most-one push per entry out."""
        if not self.store.mark_notified(event.entry_id, pushed=False):
            return  # duplicate delivery
        vehicle = self.store.vehicle_by_device_code(event.uid)
        if vehicle is None:
            return
        try:
            owner = self.store.account_by_id(vehicle.owner)
        except NotFoundError:
            return
        if not owner.device_push_token:
            return
        verb = "checked in" if event.type == "CheckIn" else "checked out"
        self.push.push(
            device_token=owner.device_push_token,
            title=f"Vehicle {verb}",
            body=f"{vehicle.make} {vehicle.model} ({vehicle.plate}) just {verb}.",
            data={"entry_id": event.entry_id, "uid": event.uid, "type": event.type,
                  "time": event.time},
        )

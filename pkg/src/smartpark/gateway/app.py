"""REST surface of the gateway.

JSON in, JSON out. Auth rides in ``Authorization: Bearer <token>`` with an
``access_token`` query parameter fallback. A missing or bad token yields
401 on every endpoint except register/activate/login/reset and the device
check-in/out hooks.
"""
from __future__ import annotations

import os
from typing import Optional

from fastapi import Depends, FastAPI, Query, Request
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from smartpark.errors import (
    AccessDeniedError,
    AuthError,
    ConfigurationError,
    ConflictError,
    NotFoundError,
    RejectedError,
    StateError,
    ValidationError,
)
from smartpark.gateway.providers import (
    DeclinedError,
    ProviderError,
    ProviderUnreachableError,
)
from smartpark.gateway.service import GatewayService

_STATUS_BY_ERROR = [
    (ValidationError, 400),
    (AuthError, 401),
    (AccessDeniedError, 403),
    (NotFoundError, 404),
    (ConflictError, 409),
    (StateError, 409),
    (DeclinedError, 402),
    (ProviderUnreachableError, 503),
    (ProviderError, 402),
    (RejectedError, 502),
    (ConfigurationError, 500),
]


class RegisterBody(BaseModel):
    email: str
    password: str


class ActivateBody(BaseModel):
    email: str
    code: str


class LoginBody(BaseModel):
    email: str
    password: str
    device_push_token: Optional[str] = None


class ForgotBody(BaseModel):
    email: str


class ResetBody(BaseModel):
    email: str
    code: str
    new_password: str


class VehicleBody(BaseModel):
    model: str
    make: str
    plate: str


class VehiclePatchBody(BaseModel):
    model: Optional[str] = None
    make: Optional[str] = None
    plate: Optional[str] = None
    activate: Optional[bool] = None


class LicenseBody(BaseModel):
    name: str
    license_number: str


class CardBody(BaseModel):
    payment_nonce: str


class PayBody(BaseModel):
    ticket_ids: list[str]


class DeviceBody(BaseModel):
    device_code: str
    region: str


def create_app(
    service: GatewayService, static_dir: Optional[str] = None, debug: bool = False
) -> FastAPI:
    app = FastAPI(title="smartpark gateway", version="0.1.0", openapi_url="/openapi.json")
    app.state.service = service

    for error_type, status in _STATUS_BY_ERROR:
        def _handler(request: Request, exc: Exception, status=status):
            return JSONResponse(status_code=status, content={"error": str(exc)})

        app.add_exception_handler(error_type, _handler)

    def current_account(
        request: Request, access_token: Optional[str] = Query(default=None)
    ):
        return service.authenticate(request.headers.get("authorization"), access_token)

    # -- auth --

    @app.post("/auth/register", status_code=201)
    def register(body: RegisterBody):
        account = service.register(body.email, body.password)
        return {"account_id": account.account_id, "email": account.email,
                "activated": account.activated}

    @app.post("/auth/activate")
    def activate(body: ActivateBody):
        account = service.activate(body.email, body.code)
        return {"account_id": account.account_id, "activated": account.activated}

    @app.post("/auth/reissue")
    def reissue(body: ForgotBody):
        service.reissue_activation(body.email)
        return {"sent": True}

    @app.post("/auth/login")
    def login(body: LoginBody):
        return service.login(body.email, body.password, body.device_push_token)

    @app.post("/auth/forgot")
    def forgot(body: ForgotBody):
        service.forgot_password(body.email)
        return {"sent": True}

    @app.post("/auth/reset")
    def reset(body: ResetBody):
        service.reset_password(body.email, body.code, body.new_password)
        return {"reset": True}

    # -- profile --

    @app.get("/profile")
    def profile(account=Depends(current_account)):
        return service.bootstrap_payload(account)

    @app.put("/profile/license")
    def put_license(body: LicenseBody, account=Depends(current_account)):
        service.set_license(account, body.name, body.license_number)
        return {"stored": True}

    @app.put("/profile/card")
    def put_card(body: CardBody, account=Depends(current_account)):
        service.add_card(account, body.payment_nonce)
        return {"stored": True, "message": "Credit Card Added"}

    # -- vehicles --

    @app.get("/vehicles")
    def list_vehicles(account=Depends(current_account)):
        return {"vehicles": [v.to_json() for v in service.store.vehicles_of(account.account_id)]}

    @app.post("/vehicles", status_code=201)
    def add_vehicle(body: VehicleBody, account=Depends(current_account)):
        return service.add_vehicle(account, body.model, body.make, body.plate).to_json()

    @app.patch("/vehicles/{vehicle_id}")
    def patch_vehicle(vehicle_id: str, body: VehiclePatchBody, account=Depends(current_account)):
        vehicle = service.update_vehicle(
            account, vehicle_id, model=body.model, make=body.make,
            plate=body.plate, activate=body.activate,
        )
        return vehicle.to_json()

    @app.delete("/vehicles/{vehicle_id}")
    def delete_vehicle(vehicle_id: str, account=Depends(current_account)):
        service.delete_vehicle(account, vehicle_id)
        return {"deleted": True}

    @app.get("/vehicles/{vehicle_id}/logs")
    def vehicle_logs(vehicle_id: str, account=Depends(current_account)):
        return service.parking_logs(account, vehicle_id)

    @app.get("/vehicles/{vehicle_id}/tickets")
    def vehicle_tickets(vehicle_id: str, account=Depends(current_account)):
        return {"tickets": [t.to_json() for t in service.tickets(account, vehicle_id)]}

    @app.get("/vehicles/{vehicle_id}/preview")
    def vehicle_preview(vehicle_id: str, account=Depends(current_account)):
        return service.open_ticket_preview(account, vehicle_id)

    # -- payment --

    @app.post("/tickets/pay")
    def pay(body: PayBody, account=Depends(current_account)):
        results = service.pay(account, body.ticket_ids)
        return {
            "results": [
                {
                    "ticket_id": r.ticket_id,
                    "ok": r.ok,
                    "payment_ref": r.payment_ref,
                    "amount": r.amount,
                    "reason": r.reason,
                }
                for r in results
            ]
        }

    # -- device hooks (unauthenticated by design: terminals carry no account) --

    @app.post("/device/checkin")
    def device_checkin(body: DeviceBody):
        return service.device_checkin(body.device_code, body.region)

    @app.post("/device/checkout")
    def device_checkout(body: DeviceBody):
        return service.device_checkout(body.device_code, body.region)

    # -- inspection --

    @app.get("/ledger/status")
    def ledger_status():
        return service.ledger_status()

    @app.get("/openapi")
    def openapi_dump():
        return app.openapi()

    if debug:
        # demo/dev mode only: expose the payment mock's charge log

        @app.get("/debug/charges")
        def debug_charges():
            return {
                "charges": [
                    {
                        "reference": c.reference,
                        "amount": c.amount,
                        "outcome": c.outcome,
                        "payment_ref": c.payment_ref,
                    }
                    for c in service.payments.charges
                ]
            }

    # -- dashboard bundle --

    if static_dir and os.path.isdir(static_dir):
        app.mount("/app", StaticFiles(directory=static_dir, html=True), name="app")
    else:

        @app.get("/app")
        def app_placeholder():
            return {
                "message": "dashboard bundle not installed; build frontend/ and point "
                           "the gateway at its dist directory"
            }

    return app

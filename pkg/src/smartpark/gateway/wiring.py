"""Assembly: build a gateway service and app from configuration."""
from __future__ import annotations

from typing import Optional

from smartpark.billing.tickets import RateTable
from smartpark.consensus.livenet import LocalNetwork
from smartpark.consensus.netconfig import default_network_config
from smartpark.gateway.app import create_app
from smartpark.gateway.config import GatewayConfig
from smartpark.gateway.providers import (
    MockEmailProvider,
    MockPaymentProvider,
    MockPushProvider,
)
from smartpark.gateway.security import TokenSigner
from smartpark.gateway.service import GatewayService
from smartpark.gateway.store import GatewayStore


def build_service(
    config: Optional[GatewayConfig] = None,
    network=None,
    store: Optional[GatewayStore] = None,
    now_ms=None,
    clock=None,
) -> GatewayService:
    config = config if config is not None else GatewayConfig()
    if network is None:
        if config.ledger_mode == "remote":
            from smartpark.consensus.wire import RemoteClient

            network = RemoteClient(config.ledger_address)
        else:
            network = LocalNetwork(
                config=default_network_config(
                    n_peers=config.ledger_peers, quorum=config.ledger_quorum
                ),
                clock=clock,
                ledger_path=config.ledger_path,
            )
    store = store if store is not None else GatewayStore(config.store_path)
    rates: RateTable = config.rates
    rates.validate()
    return GatewayService(
        store=store,
        network=network,
        signer=TokenSigner(config.secret.encode("utf-8"), lifetime_s=config.token_lifetime_s),
        email_provider=MockEmailProvider(),
        push_provider=MockPushProvider(),
        payment_provider=MockPaymentProvider(),
        rates=rates,
        hash_rounds=config.hash_rounds,
        staleness_ms=config.staleness_hours * 60 * 60 * 1000,
        now_ms=now_ms,
    )


def build_app(config: Optional[GatewayConfig] = None, static_dir: Optional[str] = None, **kwargs):
    service = build_service(config, **kwargs)
    return create_app(service, static_dir=static_dir)


def seed_demo_data(service: GatewayService) -> dict:
    """One activated demo driver with a card, a vehicle, and three closed
    stays on the ledger. Returns the credentials for display."""
    from smartpark.gateway.providers import NONCE_VALID

    email = "driver@example.com"
    password = "demo-pass-123"
    service.register(email, password)
    code = service.email.last_to(email).body.split("code is ")[1].split(".")[0]
    account = service.activate(email, code)
    vehicle = service.add_vehicle(account, "Model 3", "Tesla", "D-001")
    service.add_card(account, NONCE_VALID)
    for _ in range(3):
        service.device_checkin(vehicle.device_code, "DB")
        service.device_checkout(vehicle.device_code, "DB")
    return {"email": email, "password": password, "device_code": vehicle.device_code}

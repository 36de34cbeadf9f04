"""Gateway configuration: bind address, secret, tariff, providers, ledger."""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

import yaml

from smartpark.errors import ConfigurationError
from smartpark.ledger.entries import Region
from smartpark.billing.tickets import RateTable, default_rate_table

ENV_SECRET = "PARKGW_SECRET"
ENV_PORT = "PARKGW_PORT"


@dataclass(frozen=True)
class GatewayConfig:
    host: str = "127.0.0.1"
    port: int = 3000
    secret: str = "dev-secret-change-me"
    hash_rounds: int = 10
    token_lifetime_s: int = 24 * 60 * 60
    rates: RateTable = field(default_factory=default_rate_table)
    providers: str = "mock"
    store_path: str = ":memory:"
    ledger_mode: str = "embedded"  # embedded | remote
    ledger_address: Optional[str] = None
    ledger_path: Optional[str] = None
    ledger_peers: int = 3
    ledger_quorum: int = 2
    staleness_hours: int = 24


def load_gateway_config(path: Optional[str] = None) -> GatewayConfig:
    doc = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh) or {}
        if not isinstance(doc, dict):
            raise ConfigurationError("gateway config must be a mapping")
    return gateway_config_from_dict(doc)


def gateway_config_from_dict(doc: dict) -> GatewayConfig:
    bind = str(doc.get("bind", "127.0.0.1:3000"))
    host, _, port_s = bind.rpartition(":")
    if not host or not port_s.isdigit():
        raise ConfigurationError(f"bad bind address {bind!r}")

    rates_doc = doc.get("rates")
    if rates_doc is None:
        rates = default_rate_table()
    else:
        per_region = {}
        for key, value in rates_doc.items():
            try:
                per_region[Region(key)] = int(value)
            except (ValueError, TypeError):
                raise ConfigurationError(f"bad rate entry {key!r}: {value!r}") from None
        rates = RateTable(
            per_region=per_region,
            minimum_charge_minutes=int(doc.get("minimum_charge_minutes", 1)),
        )
    rates.validate()

    providers = str(doc.get("providers", "mock"))
    if providers != "mock":
        raise ConfigurationError(
            f"unknown provider set {providers!r}; only 'mock' ships in-repo"
        )

    ledger_doc = doc.get("ledger") or {}
    mode = str(ledger_doc.get("mode", "embedded"))
    if mode not in ("embedded", "remote"):
        raise ConfigurationError(f"ledger mode must be embedded or remote, got {mode!r}")
    if mode == "remote" and not ledger_doc.get("address"):
        raise ConfigurationError("remote ledger mode requires an address")

    port = int(os.environ.get(ENV_PORT, port_s))
    secret = os.environ.get(ENV_SECRET, str(doc.get("secret", "dev-secret-change-me")))

    return GatewayConfig(
        host=host,
        port=port,
        secret=secret,
        hash_rounds=int(doc.get("hash_rounds", 10)),
        token_lifetime_s=int(doc.get("token_lifetime_s", 24 * 60 * 60)),
        rates=rates,
        providers=providers,
        store_path=str(doc.get("store_path", ":memory:")),
        ledger_mode=mode,
        ledger_address=ledger_doc.get("address"),
        ledger_path=ledger_doc.get("path"),
        ledger_peers=int(ledger_doc.get("peers", 3)),
        ledger_quorum=int(ledger_doc.get("quorum", 2)),
        staleness_hours=int(doc.get("staleness_hours", 24)),
    )

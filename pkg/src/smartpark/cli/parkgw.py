"""Run the REST gateway."""
from __future__ import annotations

import click
import uvicorn
import yaml

from smartpark.errors import SmartParkError
from smartpark.gateway.config import load_gateway_config


@click.group()
def main():
    """The driver-facing REST gateway."""


@main.command()
@click.option("--config", "config_path", default=None, help="gateway config YAML")
@click.option("--static", "static_dir", default=None,
              help="directory with the built dashboard bundle (served at /app)")
@click.option("--demo", is_flag=True,
              help="seed a demo driver with tickets and enable /debug/charges")
def serve(config_path, static_dir, demo):
    """Start the gateway (default 127.0.0.1:3000, embedded ledger network)."""
    from smartpark.gateway.app import create_app
    from smartpark.gateway.wiring import build_service, seed_demo_data

    try:
        config = load_gateway_config(config_path)
        service = build_service(config)
        app = create_app(service, static_dir=static_dir, debug=demo)
        if demo:
            credentials = seed_demo_data(service)
            click.echo(f"demo driver: {credentials['email']} / {credentials['password']} "
                       f"(device {credentials['device_code']})")
    except SmartParkError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"gateway listening on {config.host}:{config.port}")
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")


@main.command("init-config")
@click.argument("path")
def init_config(path):
    """Write a gateway config template."""
    doc = {
        "bind": "127.0.0.1:3000",
        "secret": "change-me",
        "hash_rounds": 10,
        "token_lifetime_s": 86400,
        "rates": {"DB": 3, "LN": 2, "CK": 2},
        "minimum_charge_minutes": 1,
        "providers": "mock",
        "store_path": "gateway.db",
        "staleness_hours": 24,
        "ledger": {"mode": "embedded", "peers": 3, "quorum": 2, "path": "ledger.dat"},
    }
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)
    click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()

"""Ledger inspection and ticket export against a persisted chain file."""
from __future__ import annotations

import json
import sys
import time

import click

from smartpark.errors import SmartParkError
from smartpark.ledger.chain import Ledger
from smartpark.billing.pricing import price_all
from smartpark.billing.reconcile import reconcile
from smartpark.billing.tickets import default_rate_table
from smartpark.gateway.config import load_gateway_config
from smartpark.gateway.service import entry_to_json


def _load(data: str) -> Ledger:
    try:
        return Ledger.load(data, verify=False)
    except FileNotFoundError:
        raise click.ClickException(f"no ledger file at {data!r}")
    except SmartParkError as exc:
        raise click.ClickException(str(exc))


@click.group()
def main():
    """Inspect a parking ledger and export tickets."""


@main.group()
def ledger():
    """Chain-level inspection."""


@ledger.command()
@click.option("--data", default="ledger.dat", show_default=True, help="ledger file")
def verify(data):
    """Recompute every hash and back-link; exit 1 on corruption."""
    report = _load(data).verify()
    if report.valid:
        click.echo("chain valid")
    else:
        click.echo(f"chain INVALID: first bad height {report.first_bad_height}")
        sys.exit(1)


@ledger.command()
@click.option("--from", "from_height", default=0, show_default=True, type=int)
@click.option("--data", default="ledger.dat", show_default=True)
@click.option("--json", "as_json", is_flag=True, help="emit JSON instead of text")
def blocks(from_height, data, as_json):
    """List blocks from a height: height, time, tx count, hash."""
    chain = _load(data)
    out = []
    for height in range(max(0, from_height), chain.height + 1):
        block = chain.block(height)
        record = {
            "height": block.height,
            "commit_time": block.commit_time,
            "tx_count": len(block.txs),
            "block_hash": block.block_hash.hex(),
            "prev_hash": block.prev_hash.hex(),
            "entries": [entry_to_json(tx.entry) for tx in block.txs],
        }
        out.append(record)
        if not as_json:
            click.echo(
                f"#{block.height:<6} time={block.commit_time:<15} "
                f"txs={len(block.txs)} hash={block.block_hash.hex()[:16]}…"
            )
    if as_json:
        click.echo(json.dumps(out, indent=2))


@ledger.command()
@click.option("--uid", required=True, help="vehicle device code")
@click.option("--data", default="ledger.dat", show_default=True)
@click.option("--json", "as_json", is_flag=True)
def logs(uid, data, as_json):
    """All committed entries for one vehicle code, time-ordered."""
    entries = _load(data).logs_for(uid)
    if as_json:
        click.echo(json.dumps([entry_to_json(e) for e in entries], indent=2))
        return
    for entry in entries:
        click.echo(f"{entry.time:<15} {entry.action.value:<9} {entry.region.value} {entry.id}")
    click.echo(f"{len(entries)} entries")


@main.command()
@click.option("--uid", required=True, help="vehicle device code")
@click.option("--data", default="ledger.dat", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="json",
              show_default=True)
@click.option("--config", "config_path", default=None,
              help="gateway config supplying the rate table")
def tickets(uid, data, fmt, config_path):
    """Reconcile and price one vehicle's entries into tickets."""
    rates = (
        load_gateway_config(config_path).rates if config_path else default_rate_table()
    )
    entries = _load(data).logs_for(uid)
    now = int(time.time() * 1000)
    ticket_list, flags = reconcile(entries, now=now)
    ticket_list = price_all(ticket_list, rates)
    if fmt == "json":
        click.echo(
            json.dumps(
                {
                    "tickets": [t.to_json() for t in ticket_list],
                    "anomalies": [
                        {"kind": f.kind.value, "entry_ids": list(f.entry_ids)} for f in flags
                    ],
                },
                indent=2,
            )
        )
        return
    for ticket in ticket_list:
        click.echo(
            f"{ticket.ticket_id}  {ticket.status.value:<7} "
            f"dur={ticket.duration_minutes} cost={ticket.cost_minor_units}"
        )
    click.echo(f"{len(ticket_list)} tickets, {len(flags)} anomalies")


if __name__ == "__main__":
    main()

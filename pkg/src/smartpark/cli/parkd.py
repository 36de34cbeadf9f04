"""Network daemons and the deterministic simulation harness."""
from __future__ import annotations

import json
import sys
import time

import click

from smartpark.errors import SmartParkError
from smartpark.consensus.netconfig import (
    load_network_config,
    write_network_config_template,
)
from smartpark.consensus.simnet import parse_script, run_deterministic
from smartpark.consensus.wire import OrdererServer, PeerDaemon


@click.group()
def main():
    """Run peers, the orderer, or a scripted deterministic simulation."""


@main.command()
@click.option("--config", "config_path", required=True, help="network config YAML")
@click.option("--data", default=None, help="append-only ledger file for the world ledger")
def orderer(config_path, data):
    """Run the sequencing node; peers and clients connect to its listen address."""
    config = load_network_config(config_path)
    server = OrdererServer(config, ledger_path=data)
    host, port = server.start()
    click.echo(f"orderer {config.orderer_id} listening on {host}:{port} "
               f"(quorum {config.quorum})")
    try:
        while True:
            time.sleep(1)
    except KeyboardInterrupt:
        server.stop()


@main.command()
@click.option("--config", "config_path", required=True, help="network config YAML")
@click.option("--id", "peer_id", required=True, help="which peer from the config to run")
@click.option("--data", default=None, help="append-only ledger file for this replica")
def peer(config_path, peer_id, data):
    """Run one peer: endorse proposals and replicate blocks."""
    config = load_network_config(config_path)
    daemon = PeerDaemon(config, peer_id, ledger_path=data)
    daemon.connect()
    click.echo(f"peer {peer_id} connected to {config.orderer_address}")
    try:
        daemon.run()
    except KeyboardInterrupt:
        daemon.stop()


@main.command()
@click.option("--seed", required=True, type=int)
@click.option("--script", "script_path", required=True, help="fault/submission script")
@click.option("--peers", default=3, show_default=True, type=int)
@click.option("--quorum", default=2, show_default=True, type=int)
@click.option("--trace", "trace_path", default=None, help="write the full trace here")
@click.option("--json", "as_json", is_flag=True, help="emit a JSON summary")
def simulate(seed, script_path, peers, quorum, trace_path, as_json):
    """Deterministically replay a scripted network run."""
    try:
        with open(script_path, "r", encoding="utf-8") as fh:
            script = parse_script(fh.read())
        report = run_deterministic(seed=seed, script=script, n_peers=peers, quorum=quorum)
    except SmartParkError as exc:
        raise click.ClickException(str(exc))
    if trace_path:
        with open(trace_path, "w", encoding="utf-8") as fh:
            fh.write(report.trace_text())
    committed = report.committed_ids()
    summary = {
        "seed": seed,
        "submissions": len(report.results),
        "committed": len(committed),
        "rejected": len(report.results) - len(committed),
        "orderer_height": report.orderer_ledger.height,
        "converged": report.converged(),
        "chain_valid": report.orderer_ledger.verify().valid,
    }
    if as_json:
        click.echo(json.dumps(summary, indent=2))
    else:
        for key, value in summary.items():
            click.echo(f"{key}: {value}")
    if not report.converged():
        sys.exit(1)


@main.command("init-config")
@click.argument("path")
@click.option("--peers", default=3, show_default=True, type=int)
@click.option("--quorum", default=2, show_default=True, type=int)
def init_config(path, peers, quorum):
    """Write a network config template with fresh peer keys."""
    write_network_config_template(path, n_peers=peers, quorum=quorum)
    click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()

"""Ledger submitters for the presence simulator.

DirectSubmitter drives an in-process endorsement network and keeps its
orderer clock in lockstep with the simulation, so committed timestamps
land on the tick that produced them. GatewaySubmitter posts to a running
gateway's device endpoints, which is the same path real terminals use.
"""
from __future__ import annotations

from typing import Optional

import httpx

from smartpark.errors import ConfigurationError, RejectedError
from smartpark.ledger.chaincode import OP_CHECK_IN
from smartpark.ledger.entries import Region, TimesheetEntry, parse_action, parse_region
from smartpark.consensus.livenet import LocalNetwork
from smartpark.presence.scenario import MS_PER_TICK, SimClock

TERMINAL_SUBMITTER = "parking.terminal"


class DirectSubmitter:
    def __init__(self, network: LocalNetwork, clock: Optional[SimClock] = None):
        self.network = network
        self.clock = clock

    def advance(self, tick: int) -> None:
        if self.clock is not None:
            self.clock.tick = tick

    def submit(self, op: str, uid: str, region: Region, tick: int) -> TimesheetEntry:
        reply = self.network.submit_or_raise(
            op,
            {"uid": uid, "region": region.value, "at": tick * MS_PER_TICK},
            submitter=f"{TERMINAL_SUBMITTER}.{region.value}",
        )
        return reply.entry


class GatewaySubmitter:
    def __init__(
        self,
        base_url: str,
        client: Optional[httpx.Client] = None,
        clock: Optional[SimClock] = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.client = client if client is not None else httpx.Client(timeout=30.0)
        # only set when the gateway's orderer is co-located and shares the
        # simulation clock; a remote orderer owns its own time
        self.clock = clock

    def advance(self, tick: int) -> None:
        if self.clock is not None:
            self.clock.tick = tick

    def submit(self, op: str, uid: str, region: Region, tick: int) -> TimesheetEntry:
        path = "/device/checkin" if op == OP_CHECK_IN else "/device/checkout"
        response = self.client.post(
            self.base_url + path, json={"device_code": uid, "region": region.value}
        )
        if response.status_code == 404:
            raise ConfigurationError(f"vehicle code {uid!r} is not registered")
        if response.status_code >= 400:
            raise RejectedError(f"device endpoint returned {response.status_code}")
        doc = response.json()["entry"]
        return TimesheetEntry(
            id=doc["id"],
            uid=doc["uid"],
            time=doc["time"],
            action=parse_action(doc["action"]),
            region=parse_region(doc["region"]),
        )

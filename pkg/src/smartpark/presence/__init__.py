from smartpark.presence.terminal import LedgerSubmission, ProbeFrame, Terminal, TrackedVehicle
from smartpark.presence.scenario import (
    MS_PER_TICK,
    PresenceReport,
    Scenario,
    SimClock,
    StayEvent,
    StayOutcome,
    parse_scenario,
    run_scenario,
)
from smartpark.presence.submitters import DirectSubmitter, GatewaySubmitter

__all__ = [
    "DirectSubmitter",
    "GatewaySubmitter",
    "LedgerSubmission",
    "MS_PER_TICK",
    "PresenceReport",
    "ProbeFrame",
    "Scenario",
    "SimClock",
    "StayEvent",
    "StayOutcome",
    "Terminal",
    "TrackedVehicle",
    "parse_scenario",
    "run_scenario",
]

"""Terminal scan rules and scripted scenario runs."""
import random

import pytest

from smartpark.errors import ConfigurationError, ValidationError
from smartpark.ledger.entries import Region
from smartpark.consensus.livenet import LocalNetwork
from smartpark.presence.scenario import (
    Scenario,
    SimClock,
    StayEvent,
    parse_scenario,
    run_scenario,
)
from smartpark.presence.submitters import DirectSubmitter
from smartpark.presence.terminal import ProbeFrame, Terminal


def frames(terminal, tick, codes):
    return [ProbeFrame(code, tick, terminal.region) for code in codes]


# -- scan_cycle unit behavior ----------------------------------------------------


def test_new_code_triggers_checkin():
    terminal = Terminal(region=Region.DB)
    subs = terminal.scan_cycle(0, frames(terminal, 0, ["V-42"]))
    assert [(s.op, s.uid) for s in subs] == [("check_in", "V-42")]
    assert "V-42" in terminal.present


def test_absence_threshold_triggers_exactly_one_checkout():
    terminal = Terminal(region=Region.DB, absence_threshold=3)
    terminal.scan_cycle(0, frames(terminal, 0, ["V-42"]))
    assert terminal.scan_cycle(10, []) == []
    assert terminal.scan_cycle(20, []) == []
    subs = terminal.scan_cycle(30, [])
    assert [(s.op, s.uid) for s in subs] == [("check_out", "V-42")]
    assert "V-42" not in terminal.present
    assert terminal.scan_cycle(40, []) == []  # no second checkout


def test_reappearance_below_threshold_resets_missed_count():
    terminal = Terminal(region=Region.DB, absence_threshold=3)
    terminal.scan_cycle(0, frames(terminal, 0, ["V-42"]))
    terminal.scan_cycle(10, [])
    subs = terminal.scan_cycle(20, frames(terminal, 20, ["V-42"]))
    assert subs == []
    assert terminal.present["V-42"].missed_scans == 0
    terminal.scan_cycle(30, [])
    terminal.scan_cycle(40, [])
    assert terminal.scan_cycle(50, []) != []  # threshold counted from the reset


def test_frame_for_wrong_region_rejected():
    terminal = Terminal(region=Region.DB)
    with pytest.raises(ValidationError):
        terminal.scan_cycle(0, [ProbeFrame("V-1", 0, Region.LN)])


# -- scenarios -----------------------------------------------------------------


def make_submitter(seed=0):
    clock = SimClock()
    network = LocalNetwork(clock=clock.ms, rng=random.Random(seed))
    return DirectSubmitter(network, clock), network


def one_vehicle_scenario(loss=0.0, seed=1):
    events = (
        StayEvent(10, "V-1", Region.DB, "arrive"),
        StayEvent(100, "V-1", Region.DB, "depart"),
    )
    return Scenario(seed=seed, duration=200, probe_loss_rate=loss, events=events)


def test_zero_loss_single_stay_round_trip():
    submitter, network = make_submitter()
    report = run_scenario(one_vehicle_scenario(), [Terminal(Region.DB)], submitter)
    assert [s.op for s in report.submissions] == ["check_in", "check_out"]
    assert report.alternation_ok()
    stay = report.stays[0]
    assert stay.true_dwell == 90
    # checkout lags by at most (threshold+1) scan intervals
    assert stay.reconstruction_error <= (3 + 1) * 10
    assert len(network.logs_for("V-1")) == 2


def test_empty_scenario_submits_nothing():
    submitter, _ = make_submitter()
    scenario = Scenario(seed=1, duration=50, probe_loss_rate=0.0, events=())
    report = run_scenario(scenario, [Terminal(Region.DB)], submitter)
    assert report.submissions == []


def test_lossy_run_is_deterministic():
    events = []
    rng = random.Random(7)
    for i in range(20):
        region = [Region.DB, Region.LN, Region.CK][i % 3]
        arrive = rng.randrange(0, 300)
        events.append(StayEvent(arrive, f"V-{i:02d}", region, "arrive"))
        events.append(StayEvent(arrive + rng.randrange(100, 500), f"V-{i:02d}", region, "depart"))
    scenario = Scenario(seed=33, duration=1000, probe_loss_rate=0.3, events=tuple(events))
    terminals = lambda: [Terminal(r) for r in (Region.DB, Region.LN, Region.CK)]

    submitter_a, _ = make_submitter(33)
    submitter_b, _ = make_submitter(33)
    report_a = run_scenario(scenario, terminals(), submitter_a)
    report_b = run_scenario(scenario, terminals(), submitter_b)
    assert [
        (s.op, s.uid, s.tick, s.entry_id) for s in report_a.submissions
    ] == [(s.op, s.uid, s.tick, s.entry_id) for s in report_b.submissions]


def test_no_phantom_vehicles():
    submitter, _ = make_submitter()
    scenario = one_vehicle_scenario(loss=0.25, seed=4)
    report = run_scenario(scenario, [Terminal(Region.DB)], submitter)
    assert {s.uid for s in report.submissions} <= scenario.vehicle_codes()


def test_scenario_validation():
    with pytest.raises(ConfigurationError):
        Scenario(seed=1, duration=10, probe_loss_rate=1.0, events=())
    with pytest.raises(ConfigurationError):
        Scenario(
            seed=1, duration=10, probe_loss_rate=0.0,
            events=(StayEvent(5, "V-1", Region.DB, "depart"),),
        )
    with pytest.raises(ConfigurationError):
        Scenario(
            seed=1, duration=10, probe_loss_rate=0.0,
            events=(
                StayEvent(1, "V-1", Region.DB, "arrive"),
                StayEvent(2, "V-1", Region.LN, "arrive"),
            ),
        )


def test_scenario_region_without_terminal_rejected():
    submitter, _ = make_submitter()
    scenario = one_vehicle_scenario()
    with pytest.raises(ConfigurationError):
        run_scenario(scenario, [Terminal(Region.LN)], submitter)


def test_scenario_file_parsing():
    text = """
    seed 42
    duration 500
    loss 0.1
    terminal DB scan_interval=5 absence_threshold=2
    arrive 10 V-1 DB   # comment
    depart 200 V-1 DB
    """
    scenario, terminals = parse_scenario(text)
    assert scenario.seed == 42
    assert scenario.duration == 500
    assert scenario.probe_loss_rate == 0.1
    assert len(scenario.events) == 2
    assert terminals[0].scan_interval == 5
    assert terminals[0].absence_threshold == 2
    with pytest.raises(ConfigurationError):
        parse_scenario("duration abc")
    with pytest.raises(ConfigurationError):
        parse_scenario("arrive 10 V-1 DB")  # no duration declared


def test_rejected_submission_is_retried_next_cycle():
    from smartpark.errors import RejectedError

    class FlakySubmitter:
        def __init__(self, inner, fail_first=2):
            self.inner = inner
            self.failures_left = fail_first
            self.attempts = 0

        def advance(self, tick):
            self.inner.advance(tick)

        def submit(self, op, uid, region, tick):
            self.attempts += 1
            if self.failures_left > 0:
                self.failures_left -= 1
                raise RejectedError("endorsement timeout: quorum unreachable")
            return self.inner.submit(op, uid, region, tick)

    inner, network = make_submitter()
    flaky = FlakySubmitter(inner)
    report = run_scenario(one_vehicle_scenario(), [Terminal(Region.DB)], flaky)
    # both submissions eventually land despite the first two attempts failing
    assert [s.op for s in report.submissions] == ["check_in", "check_out"]
    assert flaky.attempts == 4
    assert len(network.logs_for("V-1")) == 2


def test_multiple_stays_per_vehicle():
    events = (
        StayEvent(10, "V-1", Region.DB, "arrive"),
        StayEvent(100, "V-1", Region.DB, "depart"),
        StayEvent(300, "V-1", Region.LN, "arrive"),
        StayEvent(450, "V-1", Region.LN, "depart"),
    )
    scenario = Scenario(seed=2, duration=600, probe_loss_rate=0.0, events=events)
    submitter, _ = make_submitter()
    report = run_scenario(scenario, [Terminal(Region.DB), Terminal(Region.LN)], submitter)
    assert len(report.stays) == 2
    assert report.alternation_ok()
    assert all(s.reconstruction_error is not None for s in report.stays)
    assert all(s.reconstruction_error <= 40 for s in report.stays)

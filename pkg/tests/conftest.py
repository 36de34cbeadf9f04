import random

import pytest

from smartpark.ledger.entries import Action, Region, TimesheetEntry, new_entry_id


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)


def make_entry(uid="V-1", time=1_000_000, action=Action.CHECK_IN, region=Region.DB,
               entry_id=None, rng=None):
    return TimesheetEntry(
        id=entry_id if entry_id is not None else new_entry_id(rng),
        uid=uid,
        time=time,
        action=action,
        region=region,
    )


def entry_sequence(actions, uid="V-1", start=1_000_000, step=60_000, region=Region.DB,
                   rng=None):
    """Entries with strictly increasing timestamps from a list of Actions."""
    return [
        make_entry(uid=uid, time=start + i * step, action=action, region=region, rng=rng)
        for i, action in enumerate(actions)
    ]

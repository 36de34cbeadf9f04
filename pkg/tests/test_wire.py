"""Multi-process transport: orderer server, peer daemons, remote client."""
import threading
import time

import pytest

from smartpark.ledger import codec
from smartpark.consensus.messages import (
    BlockAnnounce,
    EndorsementMsg,
    Payload,
    ProposalStatus,
    SubmitReply,
    SubmitRequest,
    SyncRequest,
    SyncResponse,
    ValidateRequest,
)
from smartpark.consensus.netconfig import NetworkConfig, PeerConfig, default_network_config
from smartpark.consensus.wire import (
    OrdererServer,
    PeerDaemon,
    RemoteClient,
    message_from_wire,
    message_to_wire,
    pack_blobs,
    unpack_blobs,
)

from conftest import make_entry


def test_message_wire_round_trips():
    payload = Payload(op="check_in", args={"uid": "V-1", "region": "DB"}, submitter="s")
    entry = make_entry()
    messages = [
        SubmitRequest("p-1", payload),
        ValidateRequest("p-1", payload),
        EndorsementMsg("p-1", "peer-1", True, b"\x01" * 32, ""),
        EndorsementMsg("p-1", "peer-2", False, b"", "nope"),
        BlockAnnounce(codec.genesis_block()),
        SyncRequest(4),
        SyncResponse((codec.genesis_block(),)),
        SubmitReply("p-1", ProposalStatus.COMMITTED, entry=entry, block_height=3),
        SubmitReply("p-2", ProposalStatus.REJECTED, reason="r", error_kind="timeout"),
    ]
    for msg in messages:
        assert message_from_wire(*message_to_wire(msg)) == msg


def test_blob_packing_round_trip():
    blobs = [b"", b"a", b"hello" * 100]
    assert unpack_blobs(pack_blobs(blobs)) == blobs


@pytest.fixture
def cluster(tmp_path):
    config = default_network_config(n_peers=3, quorum=2)
    # port 0 lets the OS pick; rebuild the config with the bound address
    config = NetworkConfig(
        orderer_id=config.orderer_id,
        orderer_address="127.0.0.1:0",
        quorum=config.quorum,
        peers=config.peers,
        endorse_timeout_ms=2000,
    )
    server = OrdererServer(config, ledger_path=str(tmp_path / "orderer.dat"))
    host, port = server.start()
    address = f"{host}:{port}"
    daemons = []
    threads = []
    for peer_cfg in config.peers:
        daemon = PeerDaemon(config, peer_cfg.peer_id)
        daemon.connect(address)
        thread = threading.Thread(target=daemon.run, daemon=True)
        thread.start()
        daemons.append(daemon)
        threads.append(thread)
    yield server, daemons, address
    for daemon in daemons:
        daemon.stop()
    server.stop()


def wait_until(predicate, timeout=5.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if predicate():
            return True
        time.sleep(0.01)
    return False


def test_submit_query_events_over_sockets(cluster):
    server, daemons, address = cluster
    client = RemoteClient(address, submitter="parking.test")
    events = []
    client.subscribe(events.append)
    time.sleep(0.05)  # let the subscription register

    reply = client.submit_or_raise("check_in", {"uid": "V-1", "region": "DB"})
    assert reply.status is ProposalStatus.COMMITTED
    assert reply.entry.uid == "V-1"
    client.submit_or_raise("check_out", {"uid": "V-1", "region": "DB"})

    logs = client.logs_for("V-1")
    assert [e.action.value for e in logs] == ["CheckIn", "CheckOut"]
    last = client.last_checked_in("V-1")
    assert last is not None and last.id == logs[0].id
    assert client.last_checked_in("V-404") is None

    status = client.status()
    assert status["height"] == 2
    assert sorted(status["peers_connected"]) == ["peer-1", "peer-2", "peer-3"]
    assert client.verify()["valid"] is True

    assert wait_until(lambda: len(events) == 2)
    assert {e.type for e in events} == {"CheckIn", "CheckOut"}

    # all peer replicas converge to the orderer's chain
    assert wait_until(
        lambda: all(d.peer.ledger.same_chain(server.orderer.ledger) for d in daemons)
    )
    client.close()


def test_late_joining_peer_syncs_over_sockets(cluster):
    server, daemons, address = cluster
    client = RemoteClient(address, submitter="parking.test")
    for i in range(5):
        client.submit_or_raise("check_in", {"uid": f"V-{i}", "region": "LN"})

    config = default_network_config(n_peers=4, quorum=2)
    late_cfg = PeerConfig(
        peer_id="peer-4", address="", role=config.peers[3].role, key=config.peers[3].key
    )
    # the late peer is not in the server's roster, so it cannot endorse, but
    # sync is open to any heavy replica that knows the orderer
    late_config = NetworkConfig(
        orderer_id="orderer", orderer_address=address, quorum=2,
        peers=(late_cfg,),
    )
    daemon = PeerDaemon(late_config, "peer-4")
    daemon.connect(address)
    thread = threading.Thread(target=daemon.run, daemon=True)
    thread.start()
    assert wait_until(lambda: daemon.peer.ledger.height == 5)
    assert daemon.peer.ledger.same_chain(server.orderer.ledger)
    daemon.stop()
    client.close()


def test_orderer_persists_ledger(cluster, tmp_path):
    server, daemons, address = cluster
    client = RemoteClient(address, submitter="parking.test")
    client.submit_or_raise("check_in", {"uid": "V-9", "region": "CK"})
    client.close()
    from smartpark.ledger.chain import Ledger

    path = server._ledger_path
    assert wait_until(lambda: Ledger.load(path).height >= 1)
    restored = Ledger.load(path)
    assert restored.same_chain(server.orderer.ledger)

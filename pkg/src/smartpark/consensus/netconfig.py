"""Network configuration: peer roster, orderer address, endorsement quorum."""
from __future__ import annotations

import hashlib
import secrets
from dataclasses import dataclass, field

import yaml

from smartpark.errors import ConfigurationError
from smartpark.consensus.messages import PeerRole


@dataclass(frozen=True)
class PeerConfig:
    peer_id: str
    address: str
    role: PeerRole
    key: bytes


@dataclass(frozen=True)
class NetworkConfig:
    orderer_id: str
    orderer_address: str
    quorum: int
    peers: tuple[PeerConfig, ...]
    endorse_timeout_ms: int = 2000

    def heavy_peers(self) -> list[PeerConfig]:
        return [p for p in self.peers if p.role is PeerRole.HEAVY]

    def peer(self, peer_id: str) -> PeerConfig:
        for p in self.peers:
            if p.peer_id == peer_id:
                return p
        raise ConfigurationError(f"unknown peer id {peer_id!r}")

    def keys(self) -> dict:
        return {p.peer_id: p.key for p in self.peers}

    def roles(self) -> dict:
        return {p.peer_id: p.role for p in self.peers}


def default_network_config(
    n_peers: int = 3, quorum: int = 2, n_light: int = 0, base_port: int = 7150
) -> NetworkConfig:
    """Embedded-mode default: derived keys, loopback addresses."""
    peers = []
    for i in range(n_peers + n_light):
        peer_id = f"peer-{i + 1}"
        peers.append(
            PeerConfig(
                peer_id=peer_id,
                address=f"127.0.0.1:{base_port + i + 1}",
                role=PeerRole.HEAVY if i < n_peers else PeerRole.LIGHT,
                key=hashlib.sha256(b"embedded-peer-key:" + peer_id.encode()).digest(),
            )
        )
    return NetworkConfig(
        orderer_id="orderer",
        orderer_address=f"127.0.0.1:{base_port}",
        quorum=quorum,
        peers=tuple(peers),
    )


def load_network_config(path: str) -> NetworkConfig:
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    return network_config_from_dict(doc)


def network_config_from_dict(doc: dict) -> NetworkConfig:
    if not isinstance(doc, dict):
        raise ConfigurationError("network config must be a mapping")
    try:
        orderer = doc["orderer"]
        peers_doc = doc["peers"]
        quorum = int(doc["quorum"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"network config missing field: {exc}") from None
    peers = []
    for item in peers_doc:
        try:
            role = PeerRole(item.get("role", "heavy"))
            peers.append(
                PeerConfig(
                    peer_id=str(item["id"]),
                    address=str(item.get("address", "")),
                    role=role,
                    key=bytes.fromhex(item["key"]),
                )
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigurationError(f"bad peer entry {item!r}: {exc}") from None
    config = NetworkConfig(
        orderer_id=str(orderer.get("id", "orderer")),
        orderer_address=str(orderer.get("listen", "127.0.0.1:7150")),
        quorum=quorum,
        peers=tuple(peers),
        endorse_timeout_ms=int(doc.get("endorse_timeout_ms", 2000)),
    )
    n_heavy = len(config.heavy_peers())
    if not 1 <= config.quorum <= n_heavy:
        raise ConfigurationError(
            f"quorum {config.quorum} out of range for {n_heavy} heavy peers"
        )
    if len({p.peer_id for p in config.peers}) != len(config.peers):
        raise ConfigurationError("duplicate peer ids in network config")
    return config


def write_network_config_template(path: str, n_peers: int = 3, quorum: int = 2) -> None:
    doc = {
        "orderer": {"id": "orderer", "listen": "127.0.0.1:7150"},
        "quorum": quorum,
        "endorse_timeout_ms": 2000,
        "peers": [
            {
                "id": f"peer-{i + 1}",
                "address": f"127.0.0.1:{7151 + i}",
                "role": "heavy",
                "key": secrets.token_bytes(32).hex(),
            }
            for i in range(n_peers)
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)


def parse_address(address: str) -> tuple[str, int]:
    host, _, port = address.rpartition(":")
    if not host or not port.isdigit():
        raise ConfigurationError(f"bad address {address!r}, expected host:port")
    return host, int(port)

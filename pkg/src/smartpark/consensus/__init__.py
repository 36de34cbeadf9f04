from smartpark.consensus.messages import (
    Payload,
    PeerRole,
    ProposalStatus,
    SubmitReply,
    TransactionProposal,
)
from smartpark.consensus.netconfig import (
    NetworkConfig,
    PeerConfig,
    default_network_config,
    load_network_config,
)
from smartpark.consensus.livenet import LocalNetwork
from smartpark.consensus.orderer import Orderer
from smartpark.consensus.peer import PeerNode
from smartpark.consensus.simnet import (
    Crash,
    DelayLink,
    Restart,
    SimNetwork,
    SimReport,
    Submit,
    parse_script,
    run_deterministic,
)

__all__ = [
    "Crash",
    "DelayLink",
    "LocalNetwork",
    "NetworkConfig",
    "Orderer",
    "Payload",
    "PeerConfig",
    "PeerNode",
    "PeerRole",
    "ProposalStatus",
    "Restart",
    "SimNetwork",
    "SimReport",
    "Submit",
    "SubmitReply",
    "TransactionProposal",
    "default_network_config",
    "load_network_config",
    "parse_script",
    "run_deterministic",
]

from .provider import NETWORK_PROVIDER, NetworkClient, NetworkProvider
from .server import TrustStore, VerifierServer, echo_handler, server_verify
from .transport import InMemoryTransport, TlsTransport
from .types import (
    AttestedRequest,
    BindFailure,
    ChannelEvidence,
    DeviceCredential,
    EvidenceKind,
    NetProviderError,
    RejectReason,
    Rejection,
    RestatedStatement,
    RpcResponse,
    ServerView,
    StatementVerificationFailed,
    TransportError,
    TrustStoreError,
)
from .wire import CHAIN_HEADER, DEVICE_HEADER, STATEMENTS_HEADER, WireRequest

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Protocol, Tuple

from ..authority.types import Verdict
from ..core.types import Message, ProvenanceError, ResolvedChain
from ..crypto import SecretKey


class NetProviderError(ProvenanceError):
    """ Base class for errors raised by the network provider and its transports """
    pass


class StatementVerificationFailed(NetProviderError):
    """
    StatementVerificationFailed is raised by rpc when a supplied
    statement is not Valid. Nothing is transmitted.
    """

    def __init__(self, index: int, verdict: Verdict) -> None:
        super().__init__(f"statement {index} did not verify: {verdict.value}")
        self.index = index
        self.verdict = verdict


class TransportError(NetProviderError):
    """ TransportError is raised when a request cannot be delivered """
    pass


class TrustStoreError(NetProviderError):
    """ TrustStoreError is raised when a trust store is missing or unreadable """
    pass


class BindFailure(NetProviderError):
    """ BindFailure is raised when the verifier server cannot listen on its port """
    pass


class RejectReason(Enum):
    BAD_CHANNEL_AUTH = "BadChannelAuth"
    MALFORMED_HEADER = "MalformedHeader"


class EvidenceKind(Enum):
    NONE = "none"
    # HMAC over the request frame under the device channel secret
    MAC = "mac"
    # DER client certificate taken from the TLS session by the server
    X509 = "x509"


@dataclass(frozen=True)
class ChannelEvidence:
    kind: EvidenceKind = EvidenceKind.NONE
    data: bytes = b""

    @classmethod
    def none(cls) -> "ChannelEvidence":
        return cls()


@dataclass(frozen=True)
class DeviceCredential:
    """
    The device's channel credential. Only the network provider and its
    transport hold one; nothing reachable from an app handle exposes it.
    """
    device_id: str
    channel_secret: Optional[SecretKey] = field(default=None, repr=False)
    cert_path: Optional[Path] = None
    key_path: Optional[Path] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if not self.device_id:
            raise ValueError("device_id must not be empty")


@dataclass(frozen=True)
class RestatedStatement:
    """
    A statement the provider verified and now restates on the device's
    behalf. message is the canonical encoding of the original Message.
    """
    app_name: str
    message: bytes
    tag: str


@dataclass(frozen=True)
class AttestedRequest:
    """
    An outgoing request whose provenance fields were filled in by the
    network provider alone. header_chain is most recent caller first.
    """
    url: str
    payload: bytes
    device_id: str
    header_chain: ResolvedChain
    header_statements: Tuple[RestatedStatement, ...] = ()
    channel_evidence: ChannelEvidence = field(default_factory=ChannelEvidence.none)


@dataclass(frozen=True)
class ServerView:
    """ What the remote server learns from an accepted request """
    device_id: str
    # origin order, oldest caller first
    chain: Tuple[str, ...]
    statements: Tuple[Tuple[str, Message], ...]
    url: str
    payload: bytes
    attested: bool = True

    def statement_from(self, app_name: str, method: Optional[str] = None) -> Optional[Message]:
        for name, message in self.statements:
            if name == app_name and (method is None or message.method == method):
                return message
        return None


@dataclass(frozen=True)
class Rejection:
    reason: RejectReason
    detail: str = ""

    def __str__(self) -> str:
        return f"{self.reason.value}: {self.detail}" if self.detail else self.reason.value


@dataclass(frozen=True)
class RpcResponse:
    status: int
    body: bytes = b""

    @property
    def ok(self) -> bool:
        return 200 <= self.status < 300


class Transport(Protocol):
    """
    Transport is the interface of an authenticated channel to the remote
    server. It adds the channel evidence to attested requests.
    """
    device_id: str

    def send(self, request: AttestedRequest) -> RpcResponse:
        ...

    def send_plain(self, url: str, payload: bytes) -> RpcResponse:
        ...

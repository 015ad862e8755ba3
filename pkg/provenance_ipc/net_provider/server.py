"""
The remote side: a trust store, the request verifier and a small
application server routing accepted requests to handlers by URL path.
"""
from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Dict, List, Optional, Union
from urllib.parse import urlsplit

from cryptography import x509
from cryptography.exceptions import InvalidSignature
from cryptography.x509.oid import NameOID

from ..core.types import AuthTag, DecodingError
from ..crypto import SecretKey, TagLengthMismatch, mac_verify
from .types import (
    AttestedRequest,
    EvidenceKind,
    RejectReason,
    Rejection,
    RpcResponse,
    ServerView,
    TrustStoreError,
)
from .wire import (
    CHAIN_HEADER,
    DEVICE_HEADER,
    STATEMENTS_HEADER,
    WireRequest,
    decode_chain_header,
    decode_frame,
    decode_statements_header,
    to_wire,
)

logger = logging.getLogger(__name__)

CA_FILE = "ca.pem"

AppHandler = Callable[[ServerView], RpcResponse]


@dataclass
class TrustStore:
    """
    What the server trusts: per-device channel keys for the in-memory
    channel and CA certificates for TLS client certificates
    """
    channel_keys: Dict[str, SecretKey] = field(default_factory=dict, repr=False)
    ca_certs: List[x509.Certificate] = field(default_factory=list)

    def add_device(self, device_id: str, key: SecretKey) -> None:
        self.channel_keys[device_id] = key

    @classmethod
    def load(cls, path: Union[str, Path]) -> "TrustStore":
        """
        Load the CA certificates of a trust store directory

        Parameters:
        - path (Union[str, Path]): directory holding ca.pem, or the pem file

        Returns:
        - TrustStore: with the CA certificates and no channel keys

        Raises:
        - TrustStoreError: if the file is missing or holds no certificate
        """
        path = Path(path)
        pem_path = path / CA_FILE if path.is_dir() else path
        try:
            data = pem_path.read_bytes()
        except OSError as e:
            raise TrustStoreError(f"cannot read trust store {pem_path}: {e}") from e
        try:
            certs = x509.load_pem_x509_certificates(data)
        except ValueError as e:
            raise TrustStoreError(f"{pem_path} holds no usable certificate: {e}") from e
        logger.info("loaded %d CA certificate(s) from %s", len(certs), pem_path)
        return cls(ca_certs=list(certs))

    def certificate_device(self, der: bytes) -> Optional[str]:
        """
        Returns:
        - Optional[str]: the device id (subject CN) of a client certificate
            issued by a trusted CA and currently valid, else None
        """
        try:
            cert = x509.load_der_x509_certificate(der)
        except ValueError:
            return None
        now = datetime.now(timezone.utc)
        if not cert.not_valid_before_utc <= now <= cert.not_valid_after_utc:
            return None
        for ca in self.ca_certs:
            try:
                cert.verify_directly_issued_by(ca)
            except (ValueError, TypeError, InvalidSignature):
                continue
            names = cert.subject.get_attributes_for_oid(NameOID.COMMON_NAME)
            return str(names[0].value) if names else None
        return None


def _check_channel(wire: WireRequest, device_id: str, trust_store: TrustStore) -> Optional[str]:
    evidence = wire.evidence
    if evidence.kind is EvidenceKind.MAC:
        key = trust_store.channel_keys.get(device_id)
        if key is None:
            return f"no channel key for device {device_id!r}"
        try:
            ok = mac_verify(key, wire.signing_bytes(), AuthTag(evidence.data))
        except (TagLengthMismatch, ValueError):
            ok = False
        return None if ok else "channel MAC does not verify"
    if evidence.kind is EvidenceKind.X509:
        cert_device = trust_store.certificate_device(evidence.data)
        if cert_device is None:
            return "client certificate not issued by a trusted CA"
        if cert_device != device_id:
            return f"certificate names {cert_device!r}, request claims {device_id!r}"
        return None
    return "request carries no channel evidence"


def server_verify(
        request: Union[AttestedRequest, WireRequest, bytes],
        trust_store: TrustStore) -> Union[ServerView, Rejection]:
    """
    Check a received request and extract its provenance

    Parameters:
    - request (Union[AttestedRequest, WireRequest, bytes]): the request, as
        a structured value or as an in-memory frame
    - trust_store (TrustStore): channel keys and CA certificates

    Returns:
    - ServerView: the attested provenance, exactly as the device verified it
    - Rejection: MalformedHeader when the frame or a header does not parse,
        BadChannelAuth when the channel evidence does not validate
    """
    try:
        if isinstance(request, (bytes, bytearray)):
            wire = decode_frame(bytes(request))
        elif isinstance(request, AttestedRequest):
            wire = to_wire(request)
        else:
            wire = request
        device_id = wire.header(DEVICE_HEADER)
        chain = decode_chain_header(wire.header(CHAIN_HEADER))
        statements = decode_statements_header(wire.header(STATEMENTS_HEADER))
        if not device_id:
            raise DecodingError(f"empty {DEVICE_HEADER}")
    except (DecodingError, ValueError) as e:
        return Rejection(RejectReason.MALFORMED_HEADER, str(e))

    problem = _check_channel(wire, device_id, trust_store)
    if problem is not None:
        return Rejection(RejectReason.BAD_CHANNEL_AUTH, problem)
    return ServerView(
        device_id=device_id,
        chain=chain,
        statements=tuple((name, message) for name, message, _ in statements),
        url=wire.url,
        payload=wire.payload)


def echo_handler(view: ServerView) -> RpcResponse:
    return RpcResponse(200, view.payload)


def route_path(url: str) -> str:
    return urlsplit(url).path or "/"


class VerifierServer:
    """
    VerifierServer is the test server: every request is run through
    server_verify and accepted ones are handed to the handler registered
    for the URL path. Requests from several connections may arrive at
    once, the record lists are guarded by a lock.
    """
    def __init__(
            self,
            trust_store: TrustStore,
            handlers: Optional[Dict[str, AppHandler]] = None,
            plain_handlers: Optional[Dict[str, AppHandler]] = None) -> None:
        self.trust_store = trust_store
        self.handlers: Dict[str, AppHandler] = dict(handlers or {})
        self.plain_handlers: Dict[str, AppHandler] = dict(plain_handlers or {})
        self.accepted: List[ServerView] = []
        self.rejected: List[Rejection] = []
        self._lock = threading.Lock()

    def route(self, path: str, handler: AppHandler, plain: bool = False) -> None:
        (self.plain_handlers if plain else self.handlers)[path] = handler

    def handle_frame(self, frame: bytes) -> RpcResponse:
        return self.handle(frame)

    def handle(self, request: Union[AttestedRequest, WireRequest, bytes]) -> RpcResponse:
        """
        Verify request and answer it

        Returns:
        - RpcResponse: 403 with the rejection reason, 404 for unknown paths,
            otherwise the application handler's response
        """
        result = server_verify(request, self.trust_store)
        if isinstance(result, Rejection):
            with self._lock:
                self.rejected.append(result)
            logger.warning("rejected reason=%s", result)
            return RpcResponse(403, str(result).encode("utf-8"))
        with self._lock:
            self.accepted.append(result)
        logger.info("accepted device=%s chain=%s", result.device_id, ",".join(result.chain))
        return self._dispatch(self.handlers, result)

    def handle_plain(self, url: str, payload: bytes) -> RpcResponse:
        """ An unattested request, served only by plain handlers """
        view = ServerView("", (), (), url, payload, attested=False)
        return self._dispatch(self.plain_handlers, view)

    def _dispatch(self, handlers: Dict[str, AppHandler], view: ServerView) -> RpcResponse:
        handler = handlers.get(route_path(view.url))
        if handler is None:
            return RpcResponse(404, f"no handler for {route_path(view.url)}".encode("utf-8"))
        try:
            return handler(view)
        except Exception:
            logger.exception("handler for %s failed", view.url)
            return RpcResponse(500, b"handler error")

from __future__ import annotations

import logging
import threading
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Union
from urllib.parse import urljoin, urlsplit

import requests

from ..crypto import mac_create
from .server import VerifierServer, route_path
from .types import (
    AttestedRequest,
    ChannelEvidence,
    DeviceCredential,
    EvidenceKind,
    RpcResponse,
    TransportError,
)
from .wire import build_headers, encode_frame, to_wire

logger = logging.getLogger(__name__)


class InMemoryTransport:
    """
    An authenticated channel inside the process: each request frame is
    MACed with the device channel secret, which only this transport and
    the server's trust store know. Sent frames are recorded, so a test
    can tell whether anything went out.
    """
    def __init__(self, server: VerifierServer, credential: DeviceCredential) -> None:
        if credential.channel_secret is None:
            raise ValueError("the in-memory channel needs a channel secret")
        self._server = server
        self._credential = credential
        self._frames: List[bytes] = []
        self._lock = threading.Lock()

    @property
    def device_id(self) -> str:
        return self._credential.device_id

    @property
    def frames(self) -> List[bytes]:
        with self._lock:
            return list(self._frames)

    def send(self, request: AttestedRequest) -> RpcResponse:
        wire = to_wire(request)
        tag = mac_create(self._credential.channel_secret, wire.signing_bytes())
        frame = encode_frame(replace(wire, evidence=ChannelEvidence(EvidenceKind.MAC, tag.bytes)))
        with self._lock:
            self._frames.append(frame)
        logger.debug("sent %d byte frame to %s", len(frame), request.url)
        return self._server.handle_frame(frame)

    def send_plain(self, url: str, payload: bytes) -> RpcResponse:
        return self._server.handle_plain(url, payload)


class TlsTransport:
    """
    HTTPS with a TLS client certificate. The channel evidence is the
    certificate itself, presented during the handshake, so nothing is
    added to the request body.
    """
    def __init__(
            self,
            server_url: str,
            credential: DeviceCredential,
            ca_path: Union[str, Path],
            timeout: float = 10.0) -> None:
        """
        Parameters:
        - server_url (str): base URL of the verifier, e.g. https://localhost:8443
        - credential (DeviceCredential): device id, certificate and key paths
        - ca_path (Union[str, Path]): CA bundle the server certificate must chain to
        - timeout (float): per-request timeout in seconds
        """
        if credential.cert_path is None or credential.key_path is None:
            raise ValueError("the TLS channel needs a device certificate and key")
        self.server_url = server_url
        self.device_id = credential.device_id
        self.timeout = timeout
        # per request: REQUESTS_CA_BUNDLE would override a session-level verify
        self._ca_path = str(ca_path)
        self._session = requests.Session()
        self._session.cert = (str(credential.cert_path), str(credential.key_path))

    def _target(self, url: str) -> str:
        target = route_path(url)
        query = urlsplit(url).query
        return urljoin(self.server_url, target + (f"?{query}" if query else ""))

    def _post(self, url: str, payload: bytes, headers: Optional[dict] = None) -> RpcResponse:
        try:
            resp = self._session.post(self._target(url), data=payload, headers=headers,
                                      verify=self._ca_path,
                                      timeout=self.timeout)
        except requests.RequestException as e:
            raise TransportError(f"request to {self.server_url} failed: {e}") from e
        return RpcResponse(resp.status_code, resp.content)

    def send(self, request: AttestedRequest) -> RpcResponse:
        return self._post(request.url, request.payload, build_headers(request))

    def send_plain(self, url: str, payload: bytes) -> RpcResponse:
        return self._post(url, payload)

    def close(self) -> None:
        self._session.close()

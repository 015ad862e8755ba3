from __future__ import annotations

import logging
import shutil
import tempfile
from pathlib import Path
from typing import Dict, List, Optional, Union

from ..config import Config
from ..crypto import keygen
from ..ipc_bus.bus import Bus
from ..net_provider.provider import NetworkProvider
from ..net_provider.server import AppHandler, TrustStore, VerifierServer
from ..net_provider.tls import DEFAULT_DEVICE_ID, TlsVerifierServer, generate_demo_pki
from ..net_provider.transport import InMemoryTransport, TlsTransport
from ..net_provider.types import DeviceCredential

logger = logging.getLogger(__name__)


class SimulatedDevice:
    """
    A phone and the server it talks to: a bus, a NetworkProvider holding
    the device credential and a VerifierServer trusting that credential.
    config.transport picks the in-memory channel or loopback TLS with a
    throwaway PKI.
    """
    def __init__(
            self,
            config: Optional[Config] = None,
            handlers: Optional[Dict[str, AppHandler]] = None,
            plain_handlers: Optional[Dict[str, AppHandler]] = None,
            device_id: str = DEFAULT_DEVICE_ID,
            provenance: bool = True,
            pki_dir: Optional[Union[str, Path]] = None) -> None:
        self.config = config or Config()
        self.bus = Bus(self.config, provenance=provenance)
        self._tls: Optional[TlsVerifierServer] = None
        self._tmpdir: Optional[str] = None

        if self.config.transport == "tls":
            if pki_dir is None:
                self._tmpdir = tempfile.mkdtemp(prefix="provenance-pki-")
                pki_dir = self._tmpdir
            pki = generate_demo_pki(pki_dir, device_id)
            self.server = VerifierServer(TrustStore.load(pki.directory), handlers, plain_handlers)
            self._tls = TlsVerifierServer(self.server, pki.directory, port=0)
            self.transport = TlsTransport(self._tls.url, pki.device_credential(), pki.ca_cert)
        else:
            secret = keygen(self.config.mac_algorithm)
            trust_store = TrustStore()
            trust_store.add_device(device_id, secret)
            self.server = VerifierServer(trust_store, handlers, plain_handlers)
            self.transport = InMemoryTransport(self.server, DeviceCredential(device_id, secret))
        self.provider = NetworkProvider(self.bus, self.transport)

    @property
    def device_id(self) -> str:
        return self.transport.device_id

    @property
    def frames(self) -> List[bytes]:
        """ Frames sent on the in-memory channel; TLS requests are counted by the server """
        if isinstance(self.transport, InMemoryTransport):
            return self.transport.frames
        return []

    @property
    def frames_sent(self) -> int:
        if isinstance(self.transport, InMemoryTransport):
            return len(self.transport.frames)
        return len(self.server.accepted) + len(self.server.rejected)

    def start(self) -> "SimulatedDevice":
        if self._tls is not None:
            self._tls.start()
        self.bus.start()
        self.provider.install()
        return self

    def shutdown(self) -> None:
        self.bus.shutdown()
        if self._tls is not None:
            self.transport.close()
            self._tls.stop()
        if self._tmpdir is not None:
            shutil.rmtree(self._tmpdir, ignore_errors=True)

    def __enter__(self) -> "SimulatedDevice":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.shutdown()

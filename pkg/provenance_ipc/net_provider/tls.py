"""
The optional real transport: a demo PKI and an HTTPS verifier that asks
clients for a certificate. A missing or untrusted certificate is not a
handshake failure, it reaches server_verify and is rejected there, so
every attempt leaves a log line.
"""
from __future__ import annotations

import ipaddress
import logging
import ssl
import threading
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional, Tuple, Union

from cryptography import x509
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.x509.oid import ExtendedKeyUsageOID, NameOID

from .server import CA_FILE, VerifierServer
from .types import BindFailure, ChannelEvidence, DeviceCredential, EvidenceKind
from .wire import PROVENANCE_HEADERS, WireRequest, sorted_headers

logger = logging.getLogger(__name__)

DEFAULT_DEVICE_ID = "device-0001"
CERT_LIFETIME = timedelta(days=30)


@dataclass(frozen=True)
class DemoPki:
    directory: Path
    device_id: str

    @property
    def ca_cert(self) -> Path:
        return self.directory / CA_FILE

    @property
    def server_cert(self) -> Path:
        return self.directory / "server.pem"

    @property
    def server_key(self) -> Path:
        return self.directory / "server.key"

    @property
    def device_cert(self) -> Path:
        return self.directory / "device.pem"

    @property
    def device_key(self) -> Path:
        return self.directory / "device.key"

    def device_credential(self) -> DeviceCredential:
        return DeviceCredential(self.device_id, cert_path=self.device_cert, key_path=self.device_key)


def _name(common_name: str) -> x509.Name:
    return x509.Name([x509.NameAttribute(NameOID.COMMON_NAME, common_name)])


def _key_usage(ca: bool) -> x509.KeyUsage:
    return x509.KeyUsage(
        digital_signature=True,
        content_commitment=False,
        key_encipherment=False,
        data_encipherment=False,
        key_agreement=False,
        key_cert_sign=ca,
        crl_sign=ca,
        encipher_only=False,
        decipher_only=False)


def _write_key(path: Path, key: ec.EllipticCurvePrivateKey) -> None:
    path.write_bytes(key.private_bytes(
        serialization.Encoding.PEM,
        serialization.PrivateFormat.TraditionalOpenSSL,
        serialization.NoEncryption()))
    path.chmod(0o600)


def _write_cert(path: Path, cert: x509.Certificate) -> None:
    path.write_bytes(cert.public_bytes(serialization.Encoding.PEM))


def _issue(
        ca_key: ec.EllipticCurvePrivateKey,
        ca_name: x509.Name,
        common_name: str,
        usage: x509.ObjectIdentifier,
        san: Optional[x509.SubjectAlternativeName] = None) -> Tuple[ec.EllipticCurvePrivateKey, x509.Certificate]:
    key = ec.generate_private_key(ec.SECP256R1())
    now = datetime.now(timezone.utc)
    builder = (
        x509.CertificateBuilder()
        .subject_name(_name(common_name))
        .issuer_name(ca_name)
        .public_key(key.public_key())
        .serial_number(x509.random_serial_number())
        .not_valid_before(now - timedelta(minutes=5))
        .not_valid_after(now + CERT_LIFETIME)
        .add_extension(x509.BasicConstraints(ca=False, path_length=None), critical=True)
        .add_extension(_key_usage(ca=False), critical=True)
        .add_extension(x509.ExtendedKeyUsage([usage]), critical=False)
        .add_extension(x509.SubjectKeyIdentifier.from_public_key(key.public_key()), critical=False)
        .add_extension(
            x509.AuthorityKeyIdentifier.from_issuer_public_key(ca_key.public_key()), critical=False)
    )
    if san is not None:
        builder = builder.add_extension(san, critical=False)
    return key, builder.sign(private_key=ca_key, algorithm=hashes.SHA256())


def generate_demo_pki(
        directory: Union[str, Path],
        device_id: str = DEFAULT_DEVICE_ID,
        hostname: str = "localhost") -> DemoPki:
    """
    Write a throwaway CA, a server certificate and a device certificate

    Parameters:
    - directory (Union[str, Path]): created if needed; receives ca.pem,
        server.pem/key and device.pem/key
    - device_id (str): subject CN of the device certificate
    - hostname (str): DNS name of the server certificate, 127.0.0.1 is
        always included

    Returns:
    - DemoPki: the paths written
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    pki = DemoPki(directory, device_id)

    ca_key = ec.generate_private_key(ec.SECP256R1())
    ca_name = _name("provenance-ipc demo CA")
    now = datetime.now(timezone.utc)
    ca_cert = (
        x509.CertificateBuilder()
        .subject_name(ca_name)
        .issuer_name(ca_name)
        .public_key(ca_key.public_key())
        .serial_number(x509.random_serial_number())
        .not_valid_before(now - timedelta(minutes=5))
        .not_valid_after(now + CERT_LIFETIME)
        .add_extension(x509.BasicConstraints(ca=True, path_length=0), critical=True)
        .add_extension(_key_usage(ca=True), critical=True)
        .add_extension(x509.SubjectKeyIdentifier.from_public_key(ca_key.public_key()), critical=False)
    ).sign(private_key=ca_key, algorithm=hashes.SHA256())

    san = x509.SubjectAlternativeName([
        x509.DNSName(hostname),
        x509.IPAddress(ipaddress.ip_address("127.0.0.1")),
    ])
    server_key, server_cert = _issue(ca_key, ca_name, hostname, ExtendedKeyUsageOID.SERVER_AUTH, san)
    device_key, device_cert = _issue(ca_key, ca_name, device_id, ExtendedKeyUsageOID.CLIENT_AUTH)

    _write_cert(pki.ca_cert, ca_cert)
    _write_cert(pki.server_cert, server_cert)
    _write_key(pki.server_key, server_key)
    _write_cert(pki.device_cert, device_cert)
    _write_key(pki.device_key, device_key)
    logger.info("wrote demo PKI for %s to %s", device_id, directory)
    return pki


def _make_handler(verifier: VerifierServer):
    class ProvenanceRequestHandler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def do_POST(self) -> None:
            length = int(self.headers.get("Content-Length") or 0)
            payload = self.rfile.read(length)
            headers = {name: self.headers[name] for name in PROVENANCE_HEADERS
                       if self.headers.get(name) is not None}
            if not headers and self.path in verifier.plain_handlers:
                response = verifier.handle_plain(self.path, payload)
            else:
                der = self.connection.getpeercert(binary_form=True)
                evidence = (ChannelEvidence(EvidenceKind.X509, der) if der
                            else ChannelEvidence.none())
                wire = WireRequest(self.path, payload, sorted_headers(headers), evidence)
                response = verifier.handle(wire)
            self.send_response(response.status)
            self.send_header("Content-Type", "application/octet-stream")
            self.send_header("Content-Length", str(len(response.body)))
            self.end_headers()
            self.wfile.write(response.body)

        def log_message(self, format: str, *args) -> None:
            logger.debug("%s %s", self.address_string(), format % args)

    return ProvenanceRequestHandler


class TlsVerifierServer:
    """
    HTTPS front end of a VerifierServer. Use as a context manager or call
    start()/stop(); serve_forever() blocks until interrupted.
    """
    def __init__(
            self,
            verifier: VerifierServer,
            pki_dir: Union[str, Path],
            host: str = "127.0.0.1",
            port: int = 8443) -> None:
        """
        Raises:
        - BindFailure: if the port cannot be bound or the server keys are unreadable
        """
        pki_dir = Path(pki_dir)
        context = ssl.SSLContext(ssl.PROTOCOL_TLS_SERVER)
        try:
            context.load_cert_chain(pki_dir / "server.pem", pki_dir / "server.key")
            context.load_verify_locations(pki_dir / CA_FILE)
        except (OSError, ssl.SSLError) as e:
            raise BindFailure(f"cannot load server credentials from {pki_dir}: {e}") from e
        context.verify_mode = ssl.CERT_OPTIONAL
        try:
            self._httpd = ThreadingHTTPServer((host, port), _make_handler(verifier))
        except OSError as e:
            raise BindFailure(f"cannot listen on {host}:{port}: {e}") from e
        self._httpd.socket = context.wrap_socket(self._httpd.socket, server_side=True)
        self._httpd.daemon_threads = True
        self._thread: Optional[threading.Thread] = None
        self.verifier = verifier

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    @property
    def url(self) -> str:
        return f"https://127.0.0.1:{self.port}"

    def serve_forever(self) -> None:
        logger.info("verifier listening on %s", self.url)
        self._httpd.serve_forever()

    def start(self) -> "TlsVerifierServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever, name="tls-verifier",
                                        daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5.0)

    def __enter__(self) -> "TlsVerifierServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

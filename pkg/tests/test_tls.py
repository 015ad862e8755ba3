import pytest
import requests
from cryptography import x509
from cryptography.hazmat.primitives import serialization

from provenance_ipc.config import Config
from provenance_ipc.core.encoding import canonical_encode
from provenance_ipc.core.types import Message, ResolvedChain
from provenance_ipc.ipc_bus import Bus
from provenance_ipc.main import main
from provenance_ipc.net_provider import (
    AttestedRequest,
    BindFailure,
    NetworkClient,
    NetworkProvider,
    RejectReason,
    RestatedStatement,
    TlsTransport,
    TrustStore,
    TrustStoreError,
    VerifierServer,
    echo_handler,
)
from provenance_ipc.net_provider.provider import INTERNET
from provenance_ipc.net_provider.tls import TlsVerifierServer, generate_demo_pki
from provenance_ipc.net_provider.wire import build_headers
from provenance_ipc.scenarios import run_paybuddy


def der_of(path):
    return x509.load_pem_x509_certificate(path.read_bytes()).public_bytes(serialization.Encoding.DER)


@pytest.fixture
def pki(tmp_path):
    return generate_demo_pki(tmp_path / "pki", "device-42")


@pytest.fixture
def server(pki):
    verifier = VerifierServer(TrustStore.load(pki.directory), handlers={"/echo": echo_handler},
                              plain_handlers={"/echo": echo_handler})
    with TlsVerifierServer(verifier, pki.directory, port=0) as tls:
        yield tls


def test_trust_store_names_device_certificates(pki, tmp_path):
    store = TrustStore.load(pki.directory)
    assert len(store.ca_certs) == 1
    assert store.certificate_device(der_of(pki.device_cert)) == "device-42"
    stranger = generate_demo_pki(tmp_path / "other", "device-42")
    assert store.certificate_device(der_of(stranger.device_cert)) is None
    assert store.certificate_device(b"not a certificate") is None


def test_missing_trust_store(tmp_path):
    with pytest.raises(TrustStoreError):
        TrustStore.load(tmp_path)


def test_server_needs_credentials(tmp_path):
    verifier = VerifierServer(TrustStore())
    with pytest.raises(BindFailure):
        TlsVerifierServer(verifier, tmp_path, port=0)


def test_attested_request_over_tls(pki, server):
    transport = TlsTransport(server.url, pki.device_credential(), pki.ca_cert)
    try:
        with Bus(Config()) as bus:
            NetworkProvider(bus, transport).install()
            app = bus.spawn("A", 10001, {INTERNET})
            stmt = bus.make_statement(app, Message("hello", b"hi"))
            response = NetworkClient(bus, app).rpc("https://api.example/echo", b"hi", [stmt])
    finally:
        transport.close()
    assert response.status == 200
    assert response.body == b"hi"
    view = server.verifier.accepted[0]
    assert view.device_id == "device-42"
    assert view.chain == ("A",)
    assert view.statement_from("A", "hello") == Message("hello", b"hi")


def test_ca_bundle_environment_does_not_replace_device_ca(pki, server, tmp_path, monkeypatch):
    other = generate_demo_pki(tmp_path / "other")
    monkeypatch.setenv("REQUESTS_CA_BUNDLE", str(other.ca_cert))
    monkeypatch.setenv("CURL_CA_BUNDLE", str(other.ca_cert))
    transport = TlsTransport(server.url, pki.device_credential(), pki.ca_cert)
    try:
        assert transport.send_plain("https://api.example/echo", b"plain").status == 200
        with Bus(Config()) as bus:
            NetworkProvider(bus, transport).install()
            app = bus.spawn("A", 10001, {INTERNET})
            response = NetworkClient(bus, app).rpc("https://api.example/echo", b"hi")
    finally:
        transport.close()
    assert response.status == 200
    assert server.verifier.accepted[0].device_id == "device-42"


def test_paybuddy_over_tls_with_ca_bundle_set(tmp_path, monkeypatch):
    other = generate_demo_pki(tmp_path / "other")
    monkeypatch.setenv("REQUESTS_CA_BUNDLE", str(other.ca_cert))
    transcript = run_paybuddy(config=Config(transport="tls"))
    assert transcript.expected


def test_impersonation_without_certificate(pki, server):
    forged = AttestedRequest(
        url=server.url + "/echo",
        payload=b"forged",
        device_id="device-42",
        header_chain=ResolvedChain(("PayBuddy",)),
        header_statements=(RestatedStatement("PayBuddy", canonical_encode(Message("m")), "00" * 20),))
    resp = requests.post(forged.url, data=forged.payload, headers=build_headers(forged),
                         verify=str(pki.ca_cert), timeout=10)
    assert resp.status_code == 403
    assert server.verifier.rejected[0].reason is RejectReason.BAD_CHANNEL_AUTH
    assert server.verifier.accepted == []


def test_plain_request_over_tls(pki, server):
    resp = requests.post(server.url + "/echo", data=b"plain", verify=str(pki.ca_cert), timeout=10)
    assert resp.status_code == 200
    assert resp.content == b"plain"
    assert server.verifier.accepted == [] and server.verifier.rejected == []


def test_cli_verify_against_live_server(pki, server, capsys):
    base = ["--no-color", "verify", "--server", server.url, "--trust-store", str(pki.directory),
            "--device-id", "device-42"]
    assert main(base) == 0
    assert main(base + ["--impersonate"]) == 0
    out = capsys.readouterr().out
    assert "200" in out and "403" in out
    assert len(server.verifier.accepted) == 1
    assert len(server.verifier.rejected) == 1


def test_paybuddy_over_tls():
    transcript = run_paybuddy(config=Config(transport="tls"))
    assert transcript.expected
    assert transcript.server_view.chain == ("ExampleApp", "PayBuddy")

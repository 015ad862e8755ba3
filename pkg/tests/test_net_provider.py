from dataclasses import replace

import pytest

from provenance_ipc.authority import Verdict
from provenance_ipc.config import Config
from provenance_ipc.core.encoding import canonical_encode
from provenance_ipc.core.types import AuthTag, Message, Principal, ResolvedChain, Statement
from provenance_ipc.crypto import mac_create
from provenance_ipc.net_provider import (
    AttestedRequest,
    ChannelEvidence,
    EvidenceKind,
    RejectReason,
    Rejection,
    RestatedStatement,
    RpcResponse,
    ServerView,
    StatementVerificationFailed,
    echo_handler,
    server_verify,
)
from provenance_ipc.net_provider.provider import INTERNET, NETWORK_PROVIDER, NetworkClient
from provenance_ipc.net_provider.tls import DEFAULT_DEVICE_ID
from provenance_ipc.net_provider.wire import (
    CHAIN_HEADER,
    DEVICE_HEADER,
    STATEMENTS_HEADER,
    build_headers,
    decode_frame,
    encode_frame,
    to_wire,
)
from provenance_ipc.scenarios.device import SimulatedDevice

URL = "https://api.example/echo"


@pytest.fixture
def device():
    with SimulatedDevice(Config(call_timeout_s=2.0), handlers={"/echo": echo_handler},
                         plain_handlers={"/echo": echo_handler}) as d:
        yield d


def test_provider_runs_under_radio_uid(device):
    assert device.bus.lookup(NETWORK_PROVIDER).principal.uid == 1001


def test_minimal_rpc_carries_resolved_chain(device):
    app = device.bus.spawn("A", 10001, {INTERNET})
    response = NetworkClient(device.bus, app).rpc(URL, b"hello")
    assert response == RpcResponse(200, b"hello")
    view = device.server.accepted[0]
    assert view.device_id == DEFAULT_DEVICE_ID
    assert view.chain == ("A",)
    assert view.statements == ()
    assert view.payload == b"hello"
    assert len(device.frames) == 1


def test_header_text_in_payload_is_just_payload(device):
    app = device.bus.spawn("A", 10001, {INTERNET})
    smuggled = (f"\r\n{CHAIN_HEADER}: Bank\r\n{DEVICE_HEADER}: other-device\r\n"
                f"{STATEMENTS_HEADER}: 00000000\r\n\r\n").encode("ascii")
    response = NetworkClient(device.bus, app).rpc(URL, smuggled)
    assert response.status == 200
    view = device.server.accepted[0]
    assert view.chain == ("A",)
    assert view.device_id == DEFAULT_DEVICE_ID
    assert view.statements == ()
    assert view.payload == smuggled


def test_chain_through_a_relay_is_in_origin_order(device):
    bus = device.bus
    handles = {}

    def relay(ctx, message):
        return NetworkClient(bus, handles["B"]).rpc(URL, message.payload).body

    handles["B"] = bus.spawn("B", 10002, {INTERNET}, handler=relay)
    a = bus.spawn("A", 10001)
    assert bus.call(a, "B", Message("go", b"via B")).payload == b"via B"
    assert device.server.accepted[0].chain == ("A", "B")


def test_statements_are_restated_with_app_names(device):
    app = device.bus.spawn("A", 10001, {INTERNET})
    stmt = device.bus.make_statement(app, Message("upload", b"photo", 7))
    NetworkClient(device.bus, app).rpc(URL, b"photo", [stmt])
    view = device.server.accepted[0]
    assert view.statements == (("A", Message("upload", b"photo", 7)),)
    assert view.statement_from("A", "upload") == Message("upload", b"photo", 7)
    assert view.statement_from("A", "other") is None


def test_tampered_statement_is_never_sent(device):
    app = device.bus.spawn("A", 10001, {INTERNET})
    good = device.bus.make_statement(app, Message("upload", b"photo"))
    bad = Statement(good.speaker, Message("upload", b"other photo"), good.tag)
    with pytest.raises(StatementVerificationFailed) as info:
        NetworkClient(device.bus, app).rpc(URL, b"x", [bad])
    assert info.value.index == 0
    assert info.value.verdict is Verdict.INVALID_TAG
    with pytest.raises(StatementVerificationFailed) as info:
        NetworkClient(device.bus, app).rpc(URL, b"x", [good, bad])
    assert info.value.index == 1
    assert device.frames == []


def test_unknown_speaker_is_never_sent(device):
    app = device.bus.spawn("A", 10001, {INTERNET})
    ghost = Statement(Principal(4242, 1), Message("m"), AuthTag(b"\x00" * 20))
    with pytest.raises(StatementVerificationFailed) as info:
        NetworkClient(device.bus, app).rpc(URL, b"x", [ghost])
    assert info.value.verdict is Verdict.UNKNOWN_SPEAKER
    assert device.frames_sent == 0


def test_plain_requests_are_not_attested(device):
    app = device.bus.spawn("A", 10001, {INTERNET})
    response = NetworkClient(device.bus, app).send_plain(URL, b"plain")
    assert response == RpcResponse(200, b"plain")
    assert device.server.accepted == []
    assert device.frames == []


def test_every_truncated_frame_is_malformed(device):
    app = device.bus.spawn("A", 10001, {INTERNET})
    stmt = device.bus.make_statement(app, Message("upload", b"photo"))
    NetworkClient(device.bus, app).rpc(URL, b"photo", [stmt])
    frame = device.frames[0]
    trust_store = device.server.trust_store
    assert not isinstance(server_verify(frame, trust_store), Rejection)
    for end in range(0, len(frame), 3):
        result = server_verify(frame[:end], trust_store)
        assert isinstance(result, Rejection)
        assert result.reason is RejectReason.MALFORMED_HEADER


def request_for(device, chain=("A",)):
    return AttestedRequest(
        url=URL,
        payload=b"forged",
        device_id=device.device_id,
        header_chain=ResolvedChain(tuple(reversed(chain))),
        header_statements=(RestatedStatement("A", canonical_encode(Message("m")), "00" * 20),))


def test_request_signed_with_an_app_key_is_rejected(device):
    app = device.bus.spawn("A", 10001, {INTERNET})
    app_key = device.bus.register(app)
    wire = to_wire(request_for(device))
    tag = mac_create(app_key, wire.signing_bytes())
    frame = encode_frame(replace(wire, evidence=ChannelEvidence(EvidenceKind.MAC, tag.bytes)))
    response = device.server.handle_frame(frame)
    assert response.status == 403
    assert device.server.rejected[-1].reason is RejectReason.BAD_CHANNEL_AUTH
    assert device.server.accepted == []


def test_request_without_evidence_is_rejected(device):
    result = server_verify(request_for(device), device.server.trust_store)
    assert isinstance(result, Rejection)
    assert result.reason is RejectReason.BAD_CHANNEL_AUTH


def test_payload_changed_in_flight_is_rejected(device):
    app = device.bus.spawn("A", 10001, {INTERNET})
    NetworkClient(device.bus, app).rpc(URL, b"pay 1")
    wire = decode_frame(device.frames[0])
    altered = encode_frame(replace(wire, payload=b"pay 9"))
    result = server_verify(altered, device.server.trust_store)
    assert result.reason is RejectReason.BAD_CHANNEL_AUTH


def test_malformed_headers(device):
    trust_store = device.server.trust_store
    wire = to_wire(request_for(device))
    headers = dict(wire.headers)
    for name, value in [(CHAIN_HEADER, "A,,B"), (STATEMENTS_HEADER, "zz"),
                        (STATEMENTS_HEADER, "00000001")]:
        broken = replace(wire, headers=tuple(sorted({**headers, name: value}.items())))
        assert server_verify(broken, trust_store).reason is RejectReason.MALFORMED_HEADER
    missing = replace(wire, headers=tuple((k, v) for k, v in wire.headers if k != DEVICE_HEADER))
    assert server_verify(missing, trust_store).reason is RejectReason.MALFORMED_HEADER


def test_headers_layout():
    request = AttestedRequest(URL, b"", "dev-1", ResolvedChain(("PayBuddy", "ExampleApp")))
    headers = build_headers(request)
    assert headers[DEVICE_HEADER] == "dev-1"
    assert headers[CHAIN_HEADER] == "ExampleApp,PayBuddy"
    assert headers[STATEMENTS_HEADER] == "00000000"


def test_server_routing(device):
    app = device.bus.spawn("A", 10001, {INTERNET})
    net = NetworkClient(device.bus, app)
    assert net.rpc("https://api.example/missing", b"").status == 404

    def broken(view: ServerView) -> RpcResponse:
        raise RuntimeError("boom")

    device.server.route("/broken", broken)
    assert net.rpc("https://api.example/broken", b"").status == 500
    assert net.send_plain("https://api.example/missing", b"").status == 404

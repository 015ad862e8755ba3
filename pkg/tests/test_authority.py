import threading

import pytest

from provenance_ipc.authority import AuthorityManager, UnknownPrincipal, UnresolvablePrincipal, Verdict
from provenance_ipc.core.encoding import statement_signing_bytes
from provenance_ipc.core.types import AppIdentity, AuthTag, CallChain, Message, Principal, Statement
from provenance_ipc.crypto import MacAlgorithm, mac_create

EXAMPLE = Principal(10001, 1000)
PAYBUDDY = Principal(10002, 1001)


def sign(key, speaker, message):
    return Statement(speaker, message, mac_create(key, statement_signing_bytes(speaker, message)))


@pytest.fixture
def authority():
    manager = AuthorityManager()
    manager.enroll(EXAMPLE, AppIdentity("ExampleApp"))
    manager.enroll(PAYBUDDY, AppIdentity("PayBuddy", {"INTERNET"}))
    return manager


def test_register_then_verify(authority):
    key = authority.register(EXAMPLE)
    stmt = sign(key, EXAMPLE, Message("purchase_order", b"order-1", 5))
    assert authority.verify_statement(stmt) is Verdict.VALID


def test_register_unknown_principal(authority):
    with pytest.raises(UnknownPrincipal):
        authority.register(Principal(4242, 1))


def test_tampered_payload_is_invalid(authority):
    key = authority.register(EXAMPLE)
    stmt = sign(key, EXAMPLE, Message("purchase_order", b"order-1"))
    tampered = Statement(EXAMPLE, Message("purchase_order", b"Order-1"), stmt.tag)
    assert authority.verify_statement(tampered) is Verdict.INVALID_TAG


def test_statement_from_another_speaker_is_invalid(authority):
    key = authority.register(EXAMPLE)
    authority.register(PAYBUDDY)
    stmt = sign(key, EXAMPLE, Message("m"))
    assert authority.verify_statement(Statement(PAYBUDDY, stmt.message, stmt.tag)) is Verdict.INVALID_TAG


def test_never_registered_speaker(authority):
    stmt = Statement(EXAMPLE, Message("m"), AuthTag(b"\x00" * 20))
    assert authority.verify_statement(stmt) is Verdict.UNKNOWN_SPEAKER


def test_wrong_tag_length_is_invalid(authority):
    authority.register(EXAMPLE)
    stmt = Statement(EXAMPLE, Message("m"), AuthTag(b"\x00" * 32))
    assert authority.verify_statement(stmt) is Verdict.INVALID_TAG


def test_reregistration_invalidates_old_statements(authority):
    old_key = authority.register(EXAMPLE)
    statements = [sign(old_key, EXAMPLE, Message("m", bytes([i % 256]), i)) for i in range(100)]
    assert all(authority.verify_statement(s).is_valid for s in statements)
    new_key = authority.register(EXAMPLE)
    assert new_key != old_key
    assert not any(authority.verify_statement(s).is_valid for s in statements)
    assert authority.verify_statement(sign(new_key, EXAMPLE, Message("m"))).is_valid


def test_retire_destroys_key(authority):
    key = authority.register(EXAMPLE)
    stmt = sign(key, EXAMPLE, Message("m"))
    authority.retire(EXAMPLE)
    assert not authority.is_live(EXAMPLE)
    assert authority.verify_statement(stmt) is Verdict.UNKNOWN_SPEAKER


def test_resolve_chain(authority):
    assert authority.resolve_chain(CallChain.empty()).names == ()
    resolved = authority.resolve_chain(CallChain((EXAMPLE, PAYBUDDY)))
    assert resolved.names == ("ExampleApp", "PayBuddy")
    assert resolved.origin_order() == ("PayBuddy", "ExampleApp")
    assert authority.resolve_principal(PAYBUDDY).app_name == "PayBuddy"


def test_resolve_after_teardown(authority):
    authority.retire(EXAMPLE)
    with pytest.raises(UnresolvablePrincipal) as info:
        authority.resolve_chain(CallChain((EXAMPLE,)))
    assert info.value.index == 0
    with pytest.raises(UnresolvablePrincipal) as info:
        authority.resolve_chain(CallChain((PAYBUDDY, EXAMPLE)))
    assert info.value.index == 1


def test_directory_snapshot(authority):
    directory = authority.directory()
    directory.clear()
    assert set(authority.directory()) == {EXAMPLE.uid, PAYBUDDY.uid}


def test_sha256_authority():
    manager = AuthorityManager(MacAlgorithm.HMAC_SHA256)
    manager.enroll(EXAMPLE, AppIdentity("ExampleApp"))
    key = manager.register(EXAMPLE)
    stmt = sign(key, EXAMPLE, Message("m"))
    assert len(stmt.tag.bytes) == 32
    assert manager.verify_statement(stmt).is_valid


def test_verify_never_sees_half_replaced_key(authority):
    key = authority.register(EXAMPLE)
    stmt = sign(key, EXAMPLE, Message("m"))
    verdicts = []
    stop = threading.Event()

    def verifier():
        while not stop.is_set():
            verdicts.append(authority.verify_statement(stmt))

    workers = [threading.Thread(target=verifier) for _ in range(4)]
    for w in workers:
        w.start()
    for _ in range(200):
        authority.register(EXAMPLE)
    stop.set()
    for w in workers:
        w.join()
    assert verdicts
    assert set(verdicts) <= {Verdict.VALID, Verdict.INVALID_TAG}
    assert authority.verify_statement(stmt) is Verdict.INVALID_TAG


def test_authority_over_ipc(bus):
    app = bus.spawn("ExampleApp", 10001)
    other = bus.spawn("PayBuddy", 10002)
    stmt = bus.make_statement(app, Message("purchase_order", b"o1"))
    assert bus.verify(other, stmt) is Verdict.VALID
    bad = Statement(stmt.speaker, Message("purchase_order", b"o2"), stmt.tag)
    assert bus.verify(other, bad) is Verdict.INVALID_TAG
    chain = CallChain((other.principal, app.principal))
    assert bus.resolve(app, chain).names == ("PayBuddy", "ExampleApp")


def test_unresolvable_over_ipc(bus):
    app = bus.spawn("ExampleApp", 10001)
    ghost = bus.spawn("Ghost", 10003)
    bus.teardown(ghost)
    with pytest.raises(UnresolvablePrincipal) as info:
        bus.resolve(app, CallChain((app.principal, ghost.principal)))
    assert info.value.index == 1

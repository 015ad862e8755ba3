import pytest

from provenance_ipc.authority import Verdict
from provenance_ipc.config import Config
from provenance_ipc.core.types import Message, Statement
from provenance_ipc.scenarios import ClickAttack, ClickVerdict, InputEvent, run_clickfraud
from provenance_ipc.scenarios.clickfraud import (
    HostApp,
    InputDispatcher,
    SeenEvents,
    ad_validate,
    signed_event,
)
from provenance_ipc.scenarios.clock import DEFAULT_EPOCH_MS

FRESHNESS = 500


@pytest.fixture
def dispatcher(bus, clock):
    return InputDispatcher(bus, clock)


@pytest.fixture
def host(bus):
    return HostApp(bus)


def validate(bus, dispatcher, ev, now, seen=None):
    return ad_validate(ev, now, FRESHNESS, bus.authority.verify_statement, dispatcher.principal, seen)


def test_input_dispatcher_is_a_system_uid(dispatcher):
    assert dispatcher.principal.uid == 1004


def test_emitted_event_verifies(bus, dispatcher, host):
    ev = dispatcher.emit_event(120, 640)
    assert ev.event_time == DEFAULT_EPOCH_MS
    assert bus.verify(host.handle, ev.statement) is Verdict.VALID


def test_mutated_event_payload_is_invalid(bus, dispatcher, host):
    ev = dispatcher.emit_event(120, 640)
    stmt = ev.statement
    # flip the obscured byte
    payload = stmt.message.payload[:-1] + b"\x01"
    changed = Statement(stmt.speaker, Message(stmt.message.method, payload, stmt.message.timestamp),
                        stmt.tag)
    assert bus.verify(host.handle, changed) is Verdict.INVALID_TAG


def test_burst_of_sixty_events(bus, dispatcher, clock):
    events = []
    for i in range(60):
        events.append(dispatcher.emit_event(i, i))
        clock.advance(16)
    assert len({ev.statement.tag.bytes for ev in events}) == 60
    assert all(bus.authority.verify_statement(ev.statement).is_valid for ev in events)


def test_genuine_click_is_accepted(bus, dispatcher, clock):
    ev = dispatcher.emit_event(120, 640)
    assert validate(bus, dispatcher, ev, clock.now_ms()) is ClickVerdict.ACCEPT
    assert validate(bus, dispatcher, ev, clock.now_ms() + FRESHNESS) is ClickVerdict.ACCEPT


def test_synthesized_click_is_forged(bus, dispatcher, host, clock):
    ev = signed_event(bus, host.handle, 120, 640, clock.now_ms())
    assert validate(bus, dispatcher, ev, clock.now_ms()) is ClickVerdict.REJECT_FORGED


def test_moved_click_is_forged(bus, dispatcher, clock):
    ev = dispatcher.emit_event(120, 640)
    moved = InputEvent(420, 640, ev.event_time, ev.obscured, ev.statement)
    assert validate(bus, dispatcher, moved, clock.now_ms()) is ClickVerdict.REJECT_FORGED


def test_hidden_obscured_flag_is_forged(bus, dispatcher, clock):
    ev = dispatcher.emit_event(120, 640, obscured=True)
    unmasked = InputEvent(ev.x, ev.y, ev.event_time, False, ev.statement)
    assert validate(bus, dispatcher, unmasked, clock.now_ms()) is ClickVerdict.REJECT_FORGED


def test_obscured_click(bus, dispatcher, clock):
    ev = dispatcher.emit_event(120, 640, obscured=True)
    assert validate(bus, dispatcher, ev, clock.now_ms()) is ClickVerdict.REJECT_OBSCURED


def test_stale_and_future_clicks(bus, dispatcher, clock):
    ev = dispatcher.emit_event(120, 640)
    assert validate(bus, dispatcher, ev, clock.now_ms() + FRESHNESS + 1) is ClickVerdict.REJECT_STALE
    future = dispatcher.emit_event(120, 640, event_time=clock.now_ms() + FRESHNESS + 1)
    assert validate(bus, dispatcher, future, clock.now_ms()) is ClickVerdict.REJECT_STALE


def test_checks_run_signature_then_obscured_then_freshness(bus, dispatcher, host, clock):
    late = clock.now_ms() + 10 * FRESHNESS
    forged = signed_event(bus, host.handle, 1, 2, clock.now_ms(), obscured=True)
    assert validate(bus, dispatcher, forged, late) is ClickVerdict.REJECT_FORGED
    covered = dispatcher.emit_event(1, 2, obscured=True)
    assert validate(bus, dispatcher, covered, late) is ClickVerdict.REJECT_OBSCURED


def test_same_click_is_paid_once(bus, dispatcher, clock):
    seen = SeenEvents()
    ev = dispatcher.emit_event(120, 640)
    assert validate(bus, dispatcher, ev, clock.now_ms(), seen) is ClickVerdict.ACCEPT
    assert validate(bus, dispatcher, ev, clock.now_ms() + 1, seen) is ClickVerdict.REJECT_STALE
    other = dispatcher.emit_event(121, 640)
    assert validate(bus, dispatcher, other, clock.now_ms(), seen) is ClickVerdict.ACCEPT


def test_seen_set_forgets_old_events():
    seen = SeenEvents()
    assert seen.check_and_add((0, 1, 2, b"t"), 0, 0, FRESHNESS)
    assert seen.check_and_add((1000, 1, 2, b"u"), 1000, 1000, FRESHNESS)
    assert len(seen) == 1


@pytest.mark.parametrize("attack,verdict", [
    (ClickAttack.NONE, ClickVerdict.ACCEPT),
    (ClickAttack.SYNTHESIZE, ClickVerdict.REJECT_FORGED),
    (ClickAttack.OBSCURE, ClickVerdict.REJECT_OBSCURED),
    (ClickAttack.TAMPER, ClickVerdict.REJECT_FORGED),
    (ClickAttack.REPLAY, ClickVerdict.REJECT_STALE),
])
def test_scenario_outcomes(attack, verdict):
    transcript = run_clickfraud(attack)
    assert transcript.expected
    assert transcript.outcome == verdict.value


def test_accepted_click_reaches_ad_server():
    transcript = run_clickfraud()
    assert transcript.frames_sent == 1
    view = transcript.server_view
    assert view.chain == ("HostApp", "AdApp")
    assert view.statement_from("InputDispatcher", "motion_event").payload == view.payload


def test_rejected_clicks_send_nothing():
    for attack in (ClickAttack.SYNTHESIZE, ClickAttack.OBSCURE, ClickAttack.TAMPER):
        assert run_clickfraud(attack).frames_sent == 0


def test_replay_is_paid_once():
    transcript = run_clickfraud(ClickAttack.REPLAY)
    assert transcript.frames_sent == 1
    verdicts = [e.text for e in transcript.entries if e.actor == "AdApp"]
    assert verdicts[0].endswith("Accept") and verdicts[1].endswith("RejectStale")


def test_freshness_comes_from_config():
    transcript = run_clickfraud(ClickAttack.REPLAY, config=Config(freshness_ms=2000))
    assert transcript.outcome == "RejectStale"

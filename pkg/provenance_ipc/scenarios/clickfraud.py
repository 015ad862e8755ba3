"""
Click fraud prevention. The OS input dispatcher signs every touch event;
a host app relays events to an embedded advertisement app, which only
pays out for clicks the OS really delivered, on a visible ad, recently.
"""
from __future__ import annotations

import logging
import threading
from typing import Callable, Dict, Optional, Tuple

from ..authority.types import Verdict
from ..config import Config
from ..core.encoding import Reader, Writer
from ..core.types import DecodingError, Message, Principal, ProvenanceError, Statement
from ..ipc_bus.bus import FIRST_APP_UID, INPUT_UID, Bus
from ..ipc_bus.process import ProcessHandle, dispatch_table
from ..ipc_bus.types import CallContext
from ..net_provider.provider import INTERNET, NetworkClient
from ..net_provider.types import RpcResponse, ServerView
from .clock import Clock, ManualClock
from .device import SimulatedDevice
from .types import (
    ClickAttack,
    ClickVerdict,
    InputEvent,
    Transcript,
    event_fields_bytes,
    parse_event_fields,
)

logger = logging.getLogger(__name__)

INPUT_DISPATCHER = "InputDispatcher"
HOST_APP = "HostApp"
AD_APP = "AdApp"
HOST_APP_UID = FIRST_APP_UID + 10
AD_APP_UID = FIRST_APP_UID + 11

MOTION_METHOD = "motion_event"
CLICK_METHOD = "ad_click"

AD_SERVER_URL = "https://ads.example/click"
CLICK_PATH = "/click"

SeenKey = Tuple[int, int, int, bytes]


class InputDispatcher:
    """ The OS input principal: the only speaker whose motion events count """

    def __init__(self, bus: Bus, clock: Clock) -> None:
        self.bus = bus
        self.clock = clock
        self.handle = bus.spawn(INPUT_DISPATCHER, INPUT_UID)

    @property
    def principal(self) -> Principal:
        return self.handle.principal

    def emit_event(self, x: int, y: int, event_time: Optional[int] = None,
                   obscured: bool = False) -> InputEvent:
        """
        Sign a touch event

        Parameters:
        - x, y (int): screen coordinates
        - event_time (Optional[int]): ms timestamp, now if None
        - obscured (bool): whether another window covered the touched one

        Returns:
        - InputEvent: the event with the dispatcher's statement over its fields
        """
        if event_time is None:
            event_time = self.clock.now_ms()
        message = Message(MOTION_METHOD, event_fields_bytes(x, y, event_time, obscured), event_time)
        return InputEvent(x, y, event_time, obscured, self.bus.make_statement(self.handle, message))


def signed_event(bus: Bus, speaker: ProcessHandle, x: int, y: int, event_time: int,
                 obscured: bool = False) -> InputEvent:
    """ An event signed by an arbitrary process, as a host app could forge one """
    message = Message(MOTION_METHOD, event_fields_bytes(x, y, event_time, obscured), event_time)
    return InputEvent(x, y, event_time, obscured, bus.make_statement(speaker, message))


class SeenEvents:
    """ Events already accepted, forgotten once they fall out of the freshness window """

    def __init__(self) -> None:
        self._seen: Dict[SeenKey, int] = {}
        self._lock = threading.Lock()

    def check_and_add(self, key: SeenKey, event_time: int, now: int, window_ms: int) -> bool:
        """ True if key is new; the key is recorded atomically """
        with self._lock:
            for old in [k for k, t in self._seen.items() if now - t > window_ms]:
                del self._seen[old]
            if key in self._seen:
                return False
            self._seen[key] = event_time
            return True

    def __len__(self) -> int:
        with self._lock:
            return len(self._seen)


def ad_validate(
        ev: InputEvent,
        now: int,
        freshness_ms: int,
        verify: Callable[[Statement], Verdict],
        os_input: Principal,
        seen: Optional[SeenEvents] = None) -> ClickVerdict:
    """
    Decide whether a click is genuine. Checks run in this order and stop
    at the first failure: signature, obscured flag, freshness.

    Parameters:
    - ev (InputEvent): the event as relayed by the host
    - now (int): current time in ms
    - freshness_ms (int): maximum age, and maximum clock skew into the future
    - verify (Callable): asks the authority about a statement
    - os_input (Principal): the only acceptable speaker
    - seen (Optional[SeenEvents]): accepted events, for duplicate detection

    Returns:
    - ClickVerdict: Accept or the first failing check's rejection
    """
    stmt = ev.statement
    if (stmt.speaker != os_input or stmt.message.method != MOTION_METHOD
            or stmt.message.payload != ev.fields_bytes()
            or not verify(stmt).is_valid):
        return ClickVerdict.REJECT_FORGED
    if ev.obscured:
        return ClickVerdict.REJECT_OBSCURED
    if now - ev.event_time > freshness_ms or ev.event_time - now > freshness_ms:
        return ClickVerdict.REJECT_STALE
    if seen is not None:
        key = (ev.event_time, ev.x, ev.y, stmt.tag.bytes)
        if not seen.check_and_add(key, ev.event_time, now, freshness_ms):
            return ClickVerdict.REJECT_STALE
    return ClickVerdict.ACCEPT


def encode_click(ev: InputEvent) -> bytes:
    return ev.fields_bytes()


def decode_click(ctx: CallContext, message: Message) -> InputEvent:
    """
    Raises:
    - DecodingError: if the call is malformed or carries no event statement
    """
    x, y, event_time, obscured = parse_event_fields(message.payload)
    if len(ctx.statements) != 1:
        raise DecodingError(f"a click carries exactly one statement, got {len(ctx.statements)}")
    return InputEvent(x, y, event_time, obscured, ctx.statements[0])


def encode_click_result(verdict: ClickVerdict, response: Optional[RpcResponse]) -> bytes:
    w = Writer().string(verdict.value)
    w.u32(response.status if response else 0).blob(response.body if response else b"")
    return w.getvalue()


def decode_click_result(data: bytes) -> Tuple[ClickVerdict, Optional[RpcResponse]]:
    r = Reader(data)
    verdict = ClickVerdict(r.string())
    status, body = r.u32(), r.blob()
    r.finish()
    return verdict, (RpcResponse(status, body) if status else None)


class AdApp:
    """ The advertisement library's process: validates clicks and reports accepted ones """

    def __init__(self, bus: Bus, clock: Clock, os_input: Principal, freshness_ms: int,
                 transcript: Optional[Transcript] = None) -> None:
        self.bus = bus
        self.clock = clock
        self.os_input = os_input
        self.freshness_ms = freshness_ms
        self.transcript = transcript
        self.seen = SeenEvents()
        self.handle = bus.spawn(AD_APP, AD_APP_UID, {INTERNET},
                                dispatch_table({CLICK_METHOD: self._click}))

    def validate(self, ev: InputEvent) -> ClickVerdict:
        return ad_validate(ev, self.clock.now_ms(), self.freshness_ms,
                           lambda stmt: self.bus.verify(self.handle, stmt), self.os_input, self.seen)

    def _click(self, ctx: CallContext, message: Message) -> bytes:
        ev = decode_click(ctx, message)
        verdict = self.validate(ev)
        if self.transcript is not None:
            self.transcript.verdict(AD_APP, f"click at ({ev.x},{ev.y}): {verdict.value}")
        response = None
        if verdict is ClickVerdict.ACCEPT:
            response = NetworkClient(self.bus, self.handle).rpc(
                AD_SERVER_URL, ev.fields_bytes(), [ev.statement])
        return encode_click_result(verdict, response)


class HostApp:
    """ The app embedding the ad. It relays clicks and is not trusted to be honest """

    def __init__(self, bus: Bus) -> None:
        self.bus = bus
        self.handle = bus.spawn(HOST_APP, HOST_APP_UID)

    def relay(self, ev: InputEvent) -> Tuple[ClickVerdict, Optional[RpcResponse]]:
        reply = self.bus.call(self.handle, AD_APP, Message(CLICK_METHOD, encode_click(ev)),
                              statements=[ev.statement])
        return decode_click_result(reply.payload)


class AdServer:
    """ Counts clicks that arrive with the OS input statement, relayed by the ad app """

    def __init__(self) -> None:
        self.clicks = 0
        self._lock = threading.Lock()

    def __call__(self, view: ServerView) -> RpcResponse:
        if not view.chain or view.chain[-1] != AD_APP:
            return RpcResponse(400, b"click did not come from the ad app")
        event = view.statement_from(INPUT_DISPATCHER, MOTION_METHOD)
        if event is None or event.payload != view.payload:
            return RpcResponse(400, b"click is not backed by an input event")
        with self._lock:
            self.clicks += 1
            count = self.clicks
        return RpcResponse(200, f"click {count} recorded".encode("utf-8"))


_EXPECTED = {
    ClickAttack.NONE: ClickVerdict.ACCEPT,
    ClickAttack.SYNTHESIZE: ClickVerdict.REJECT_FORGED,
    ClickAttack.REPLAY: ClickVerdict.REJECT_STALE,
    ClickAttack.OBSCURE: ClickVerdict.REJECT_OBSCURED,
    ClickAttack.TAMPER: ClickVerdict.REJECT_FORGED,
}


def run_clickfraud(
        attack: ClickAttack = ClickAttack.NONE,
        config: Optional[Config] = None,
        clock: Optional[ManualClock] = None) -> Transcript:
    """
    Run the click flow: OS input -> host app -> ad app -> server

    Parameters:
    - attack (ClickAttack): what the host app tries
    - config (Optional[Config]): freshness_ms comes from here
    - clock (Optional[ManualClock]): simulated time, advanced for replays

    Returns:
    - Transcript: verdicts per delivered click and the server's view
    """
    config = config or Config()
    clock = clock or ManualClock()
    transcript = Transcript("clickfraud", attack.value)
    verdicts = []

    device = SimulatedDevice(config, handlers={CLICK_PATH: AdServer()})
    with device:
        bus = device.bus
        dispatcher = InputDispatcher(bus, clock)
        AdApp(bus, clock, dispatcher.principal, config.freshness_ms, transcript)
        host = HostApp(bus)

        if attack is ClickAttack.SYNTHESIZE:
            ev = signed_event(bus, host.handle, 120, 640, clock.now_ms())
            transcript.hop(HOST_APP, "synthesized a click signed with its own key")
        else:
            ev = dispatcher.emit_event(120, 640, obscured=attack is ClickAttack.OBSCURE)
            transcript.hop(INPUT_DISPATCHER, f"signed touch at ({ev.x},{ev.y}) t={ev.event_time}"
                                             f"{' obscured' if ev.obscured else ''}")
        if attack is ClickAttack.TAMPER:
            ev = InputEvent(ev.x + 300, ev.y, ev.event_time, ev.obscured, ev.statement)
            transcript.hop(HOST_APP, f"moved the click to ({ev.x},{ev.y}), kept the statement")

        deliveries = [ev]
        if attack is ClickAttack.REPLAY:
            deliveries.append(ev)
        for index, delivery in enumerate(deliveries):
            if index:
                clock.advance(config.freshness_ms + 100)
                transcript.hop(HOST_APP, f"replaying the click {config.freshness_ms + 100} ms later")
            else:
                transcript.hop(HOST_APP, f"relaying click to {AD_APP}")
            try:
                verdict, response = host.relay(delivery)
            except ProvenanceError as e:
                transcript.error(HOST_APP, f"{type(e).__name__}: {e}")
                verdicts.append(None)
                continue
            verdicts.append(verdict)
            if response is not None:
                transcript.server(f"{response.status} {response.body.decode('utf-8', errors='replace')}")

        transcript.frames_sent = device.frames_sent
        transcript.server_views = list(device.server.accepted)
        transcript.rejections = list(device.server.rejected)
        for view in transcript.server_views:
            transcript.server(f"device={view.device_id} chain={','.join(view.chain)}")

    final = verdicts[-1] if verdicts else None
    transcript.outcome = final.value if final else "error"
    if attack is ClickAttack.REPLAY:
        transcript.expected = verdicts == [ClickVerdict.ACCEPT, ClickVerdict.REJECT_STALE]
    elif attack is ClickAttack.NONE:
        transcript.expected = final is ClickVerdict.ACCEPT and len(transcript.server_views) == 1
    else:
        transcript.expected = final is _EXPECTED[attack] and transcript.frames_sent == 0
    return transcript

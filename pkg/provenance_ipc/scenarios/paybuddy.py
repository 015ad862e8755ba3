"""
Micropayments through a payment app. ExampleApp signs a purchase order
and hands it to PayBuddy; PayBuddy asks the user, signs its decision and
sends both statements to its server through the NetworkProvider. The
server learns which device sent the order, that ExampleApp originated
it untampered and that PayBuddy approved it.
"""
from __future__ import annotations

import logging
import threading
from typing import Callable, Optional, Set

import numpy as np

from ..config import Config
from ..core.encoding import Reader, Writer
from ..core.types import DecodingError, Message, ProvenanceError, Statement
from ..ipc_bus.bus import FIRST_APP_UID, Bus
from ..ipc_bus.process import ProcessHandle, dispatch_table
from ..ipc_bus.types import CallContext, current_chain
from ..net_provider.provider import INTERNET, NetworkClient
from ..net_provider.types import RpcResponse, ServerView, StatementVerificationFailed
from .clock import Clock, ManualClock
from .device import SimulatedDevice
from .types import PaymentDecision, PayBuddyTamper, PurchaseOrder, Transcript

logger = logging.getLogger(__name__)

EXAMPLE_APP = "ExampleApp"
PAYBUDDY = "PayBuddy"
EXAMPLE_APP_UID = FIRST_APP_UID + 1
PAYBUDDY_UID = FIRST_APP_UID + 2

PAYBUDDY_URL = "https://paybuddy.example/pay"
PAY_PATH = "/pay"

ORDER_METHOD = "purchase_order"
DECISION_METHOD = "payment_decision"
PURCHASE_METHOD = "purchase"

DEFAULT_AMOUNT_CENTS = 499

ApprovalCallback = Callable[[int, str], bool]


def encode_purchase_result(status: int, body: bytes) -> bytes:
    return Writer().u32(status).blob(body).getvalue()


def decode_purchase_result(data: bytes) -> RpcResponse:
    r = Reader(data)
    result = RpcResponse(r.u32(), r.blob())
    r.finish()
    return result


class PayBuddyServer:
    """
    The PayBuddy.com handler. Accepts an order only when the attested
    chain ends in PayBuddy, the originator's order and PayBuddy's
    approval are both present and the order id was never seen before.
    """
    def __init__(self) -> None:
        self._ledger: Set[str] = set()
        self._lock = threading.Lock()
        self._next_tx = 1

    def __call__(self, view: ServerView) -> RpcResponse:
        if len(view.chain) < 2 or view.chain[-1] != PAYBUDDY:
            return RpcResponse(400, b"request did not come through PayBuddy")
        originator = view.chain[0]
        order_msg = view.statement_from(originator, ORDER_METHOD)
        decision_msg = view.statement_from(PAYBUDDY, DECISION_METHOD)
        if order_msg is None or decision_msg is None:
            return RpcResponse(400, b"missing order or payment decision")
        try:
            order = PurchaseOrder.from_bytes(order_msg.payload)
            decision = PaymentDecision.from_bytes(decision_msg.payload)
        except (DecodingError, ValueError):
            return RpcResponse(400, b"unreadable order")
        if order.merchant != originator:
            return RpcResponse(400, b"order merchant does not match the originating app")
        if decision.order_id != order.order_id or not decision.approved:
            return RpcResponse(402, b"payment not approved")
        with self._lock:
            if order.order_id in self._ledger:
                logger.warning("replayed order %s from %s", order.order_id, view.device_id)
                return RpcResponse(409, f"order {order.order_id} already processed".encode("utf-8"))
            self._ledger.add(order.order_id)
            tx_id = f"tx-{self._next_tx:06d}"
            self._next_tx += 1
        logger.info("order %s for %d cents approved, %s", order.order_id, order.amount_cents, tx_id)
        return RpcResponse(200, tx_id.encode("utf-8"))


class PayBuddyApp:
    """
    The payment app. It trusts nobody's word for the amount: the order
    must be a statement by the app that called it.
    """
    def __init__(
            self,
            bus: Bus,
            approve: ApprovalCallback,
            clock: Clock,
            transcript: Transcript,
            tamper: PayBuddyTamper = PayBuddyTamper.NONE) -> None:
        self.bus = bus
        self.approve = approve
        self.clock = clock
        self.transcript = transcript
        self.tamper = tamper
        self.handle = bus.spawn(PAYBUDDY, PAYBUDDY_UID, {INTERNET},
                                dispatch_table({PURCHASE_METHOD: self._purchase}))

    def _order_statement(self, ctx: CallContext) -> Optional[Statement]:
        for stmt in ctx.statements:
            if stmt.speaker == ctx.immediate_caller and stmt.message.method == ORDER_METHOD:
                return stmt
        return None

    def _purchase(self, ctx: CallContext, message: Message) -> bytes:
        stmt = self._order_statement(ctx)
        if stmt is None:
            self.transcript.error(PAYBUDDY, "call carries no order statement from its caller")
            return encode_purchase_result(400, b"no order statement")
        order = PurchaseOrder.from_bytes(stmt.message.payload)
        originator = self.bus.resolve(self.handle, current_chain(ctx)).names[-1]
        self.transcript.hop(PAYBUDDY, f"received order {order.order_id} for "
                                      f"{order.amount_cents} cents from {originator}")

        approved = self.approve(order.amount_cents, originator)
        self.transcript.hop(PAYBUDDY, f"user {'approved' if approved else 'declined'} the payment")
        if not approved:
            return encode_purchase_result(402, b"declined by user")

        if self.tamper is PayBuddyTamper.MUTATE:
            inflated = PurchaseOrder(order.order_id, order.amount_cents * 100,
                                     order.merchant, order.description)
            stmt = Statement(stmt.speaker,
                             Message(ORDER_METHOD, inflated.to_bytes(), stmt.message.timestamp),
                             stmt.tag)
            self.transcript.hop(PAYBUDDY, f"rewrote amount to {inflated.amount_cents} cents, "
                                          "kept the original tag")

        decision = PaymentDecision(order.order_id, True, self.handle.principal)
        decision_stmt = self.bus.make_statement(
            self.handle, Message(DECISION_METHOD, decision.to_bytes(), self.clock.now_ms()))
        response = NetworkClient(self.bus, self.handle).rpc(
            PAYBUDDY_URL, order.order_id.encode("utf-8"), [stmt, decision_stmt])
        return encode_purchase_result(response.status, response.body)


def _always(answer: bool) -> ApprovalCallback:
    return lambda amount_cents, app_name: answer


def run_paybuddy(
        approve: bool = True,
        tamper: PayBuddyTamper = PayBuddyTamper.NONE,
        config: Optional[Config] = None,
        clock: Optional[Clock] = None,
        seed: Optional[int] = None) -> Transcript:
    """
    Run the purchase flow end to end

    Parameters:
    - approve (bool): the simulated user's answer to PayBuddy's prompt
    - tamper (PayBuddyTamper): the attack to stage, if any
    - config (Optional[Config]): runtime configuration
    - clock (Optional[Clock]): time source, a ManualClock by default
    - seed (Optional[int]): seeds the order id, config.seed when None

    Returns:
    - Transcript: every hop, verdict and server answer; errors are
        recorded, never raised
    """
    config = config or Config()
    clock = clock or ManualClock()
    seed = config.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    variant = tamper.value if approve else "deny"
    transcript = Transcript("paybuddy", variant)

    device = SimulatedDevice(config, handlers={PAY_PATH: PayBuddyServer()})
    with device:
        bus = device.bus
        PayBuddyApp(bus, _always(approve), clock, transcript, tamper)
        example = bus.spawn(EXAMPLE_APP, EXAMPLE_APP_UID)

        order = PurchaseOrder(
            order_id=f"order-{int(rng.integers(0, 10**8)):08d}",
            amount_cents=DEFAULT_AMOUNT_CENTS,
            merchant=EXAMPLE_APP,
            description="extra level pack")
        stmt = bus.make_statement(example, Message(ORDER_METHOD, order.to_bytes(), clock.now_ms()))
        transcript.hop(EXAMPLE_APP, f"signed order {order.order_id} for {order.amount_cents} cents")
        transcript.verdict(EXAMPLE_APP, f"order statement: {bus.verify(example, stmt).value}")

        attempts = 2 if tamper is PayBuddyTamper.REPLAY else 1
        results = []
        for attempt in range(attempts):
            if attempt:
                transcript.hop(EXAMPLE_APP, f"submitting order {order.order_id} again")
            results.append(_submit(bus, example, stmt, transcript))

        transcript.frames_sent = device.frames_sent
        transcript.server_views = list(device.server.accepted)
        transcript.rejections = list(device.server.rejected)
        for view in transcript.server_views:
            transcript.server(f"device={view.device_id} chain={','.join(view.chain)} "
                              f"statements={','.join(name for name, _ in view.statements)}")
        for rejection in transcript.rejections:
            transcript.server(f"rejected: {rejection}")

    _judge(transcript, approve, tamper, results)
    return transcript


def _submit(bus: Bus, example: ProcessHandle, stmt: Statement, transcript: Transcript):
    try:
        reply = bus.call(example, PAYBUDDY, Message(PURCHASE_METHOD), statements=[stmt])
    except StatementVerificationFailed as e:
        transcript.verdict("NetworkProvider", f"StatementVerificationFailed({e.index}): {e.verdict.value}")
        return e
    except ProvenanceError as e:
        transcript.error(EXAMPLE_APP, f"{type(e).__name__}: {e}")
        return e
    result = decode_purchase_result(reply.payload)
    text = result.body.decode("utf-8", errors="replace")
    if result.ok:
        transcript.hop(EXAMPLE_APP, f"payment accepted, transaction {text}")
    else:
        transcript.verdict(EXAMPLE_APP, f"payment refused ({result.status}): {text}")
    return result


def _judge(transcript: Transcript, approve: bool, tamper: PayBuddyTamper, results) -> None:
    first = results[0]
    if not approve:
        transcript.outcome = "declined"
        transcript.expected = transcript.frames_sent == 0 and isinstance(first, RpcResponse) \
            and first.status == 402
    elif tamper is PayBuddyTamper.MUTATE:
        transcript.outcome = "tamper-detected"
        transcript.expected = (isinstance(first, StatementVerificationFailed)
                               and first.index == 0 and transcript.frames_sent == 0)
    elif tamper is PayBuddyTamper.REPLAY:
        second = results[1]
        transcript.outcome = "replay-rejected"
        transcript.expected = (isinstance(first, RpcResponse) and first.ok
                               and isinstance(second, RpcResponse) and second.status == 409)
    else:
        view = transcript.server_view
        transcript.outcome = "paid"
        transcript.expected = (isinstance(first, RpcResponse) and first.ok and view is not None
                               and view.chain == (EXAMPLE_APP, PAYBUDDY))
    if not transcript.expected:
        transcript.outcome = f"unexpected:{transcript.outcome}"

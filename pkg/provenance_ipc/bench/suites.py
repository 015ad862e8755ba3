"""
The microbenchmarks: statement cost against payload size, IPC round
trips with and without provenance, chain resolution against depth,
attested against plain RPC and signed touch event throughput.
"""
from __future__ import annotations

import logging
from typing import Callable, Dict, List, Optional, Sequence

from ..config import Config
from ..core.types import CallChain, Message
from ..ipc_bus.bus import FIRST_APP_UID, Bus
from ..ipc_bus.process import ProcessHandle
from ..ipc_bus.types import CallContext
from ..net_provider.provider import INTERNET, NetworkClient
from ..net_provider.server import echo_handler
from ..scenarios.clickfraud import (
    CLICK_METHOD,
    HostApp,
    InputDispatcher,
    decode_click,
    encode_click,
)
from ..scenarios.clock import SystemClock
from ..scenarios.device import SimulatedDevice
from ..scenarios.types import event_fields_bytes, parse_event_fields
from .harness import make_rng, measure, measure_interleaved, payload_bytes, summarize
from .types import BenchError, BenchResult, ProvenanceMode, TrialProtocol

logger = logging.getLogger(__name__)

STATEMENT_SIZES = (10, 100, 500, 1000, 2000, 4000, 8000)
IPC_SIZES = tuple(range(0, 6337, 64))
RESOLUTION_DEPTHS = (1, 2, 4, 8)
RPC_SIZES = (0, 256, 1024, 4096, 8192)
THROUGHPUT_EVENTS = 600

ECHO_URL = "https://bench.example/echo"
ECHO_PATH = "/echo"

BENCH_UID = FIRST_APP_UID + 100


def _echo(ctx: CallContext, message: Message) -> bytes:
    return message.payload


def _check_sizes(sizes: Sequence[int], config: Config) -> None:
    for size in sizes:
        if not 0 <= size <= config.max_payload_bytes:
            raise BenchError(f"payload size {size} outside 0..{config.max_payload_bytes}")


def bench_statements(
        sizes: Sequence[int] = STATEMENT_SIZES,
        protocol: Optional[TrialProtocol] = None,
        config: Optional[Config] = None,
        seed: Optional[int] = None) -> List[BenchResult]:
    """
    Statement creation and verification time against payload size.
    Verification goes to the AuthorityManager over IPC, as an app would.

    Returns:
    - List[BenchResult]: "statement_create" and "statement_verify" per size
    """
    config = config or Config()
    protocol = protocol or TrialProtocol()
    _check_sizes(sizes, config)
    rng = make_rng(config.seed if seed is None else seed)
    results: List[BenchResult] = []
    with Bus(config) as bus:
        app = bus.spawn("BenchApp", BENCH_UID)
        bus.register(app)
        for size in sizes:
            message = Message("bench", payload_bytes(rng, size))
            stmt = bus.make_statement(app, message)
            samples = measure_interleaved({
                "statement_create": lambda: bus.make_statement(app, message),
                "statement_verify": lambda: bus.verify(app, stmt),
            }, protocol)
            for name, runs in samples.items():
                results.append(summarize(name, size, runs, protocol.trim))
            logger.debug("statements size=%d done", size)
    return results


def _ipc_bus(config: Config, provenance: bool, hops: int):
    bus = Bus(config, provenance=provenance)
    bus.start()
    bus.spawn("Echo", BENCH_UID + 1, handler=_echo)
    target = "Echo"
    if hops == 2:
        holder: Dict[str, ProcessHandle] = {}

        def relay(ctx: CallContext, message: Message) -> bytes:
            return bus.call(holder["relay"], "Echo", message).payload

        holder["relay"] = bus.spawn("Relay", BENCH_UID + 2, handler=relay)
        target = "Relay"
    client = bus.spawn("BenchClient", BENCH_UID + 3)
    return bus, client, target


def bench_ipc(
        sizes: Sequence[int] = IPC_SIZES,
        hops: int = 1,
        provenance: ProvenanceMode = ProvenanceMode.BOTH,
        protocol: Optional[TrialProtocol] = None,
        config: Optional[Config] = None,
        seed: Optional[int] = None) -> List[BenchResult]:
    """
    Round trip time of an echo call, directly (1 hop) or through a relay
    (2 hops), on a bus with provenance tracking and on a stock bus.
    With ProvenanceMode.BOTH the two are measured interleaved.

    Returns:
    - List[BenchResult]: series "ipc_<hops>hop_on" and/or "ipc_<hops>hop_off"
    """
    if hops not in (1, 2):
        raise BenchError("hops must be 1 or 2")
    config = config or Config()
    protocol = protocol or TrialProtocol()
    _check_sizes(sizes, config)
    rng = make_rng(config.seed if seed is None else seed)
    modes = {"on": True, "off": False}
    if provenance is not ProvenanceMode.BOTH:
        modes = {provenance.value: provenance is ProvenanceMode.ON}

    setups = {label: _ipc_bus(config, enabled, hops) for label, enabled in modes.items()}
    results: List[BenchResult] = []
    try:
        for size in sizes:
            message = Message("echo", payload_bytes(rng, size))
            ops: Dict[str, Callable[[], object]] = {}
            for label, (bus, client, target) in setups.items():
                ops[f"ipc_{hops}hop_{label}"] = (
                    lambda bus=bus, client=client, target=target: bus.call(client, target, message))
            for name, runs in measure_interleaved(ops, protocol).items():
                results.append(summarize(name, size, runs, protocol.trim))
    finally:
        for bus, _, _ in setups.values():
            bus.shutdown()
    return results


def bench_resolution(
        depths: Sequence[int] = RESOLUTION_DEPTHS,
        protocol: Optional[TrialProtocol] = None,
        config: Optional[Config] = None) -> List[BenchResult]:
    """
    Time to turn a chain of the given depth into app names and verify one
    statement per link, the work the NetworkProvider does per request

    Returns:
    - List[BenchResult]: series "resolution", param = depth
    """
    config = config or Config()
    protocol = protocol or TrialProtocol()
    if any(d < 1 or d > config.max_chain_depth for d in depths):
        raise BenchError(f"depths must be within 1..{config.max_chain_depth}")
    results: List[BenchResult] = []
    with Bus(config) as bus:
        apps = [bus.spawn(f"Link{i}", BENCH_UID + 10 + i) for i in range(max(depths))]
        statements = [bus.make_statement(app, Message("hop", b"", i)) for i, app in enumerate(apps)]
        client = bus.spawn("Resolver", BENCH_UID + 9)
        for depth in depths:
            chain = CallChain(tuple(app.principal for app in apps[:depth]))
            batch = statements[:depth]

            def resolve_and_verify(chain=chain, batch=batch) -> None:
                bus.resolve(client, chain)
                for stmt in batch:
                    bus.verify(client, stmt)

            results.append(summarize("resolution", depth, measure(resolve_and_verify, protocol),
                                     protocol.trim))
    return results


def bench_rpc(
        sizes: Sequence[int] = RPC_SIZES,
        protocol: Optional[TrialProtocol] = None,
        config: Optional[Config] = None,
        seed: Optional[int] = None) -> List[BenchResult]:
    """
    Attested RPC (one statement, chain resolution, channel evidence)
    against a plain request through the same provider and server

    Returns:
    - List[BenchResult]: series "rpc_attested" and "rpc_plain"
    """
    config = config or Config()
    protocol = protocol or TrialProtocol()
    _check_sizes(sizes, config)
    rng = make_rng(config.seed if seed is None else seed)
    results: List[BenchResult] = []
    device = SimulatedDevice(config, handlers={ECHO_PATH: echo_handler},
                             plain_handlers={ECHO_PATH: echo_handler})
    with device:
        bus = device.bus
        app = bus.spawn("BenchApp", BENCH_UID, {INTERNET})
        net = NetworkClient(bus, app)
        for size in sizes:
            payload = payload_bytes(rng, size)
            stmt = bus.make_statement(app, Message("upload", payload))
            samples = measure_interleaved({
                "rpc_attested": lambda: net.rpc(ECHO_URL, payload, [stmt]),
                "rpc_plain": lambda: net.send_plain(ECHO_URL, payload),
            }, protocol)
            for name, runs in samples.items():
                results.append(summarize(name, size, runs, protocol.trim))
    return results


def bench_throughput(
        events: int = THROUGHPUT_EVENTS,
        protocol: Optional[TrialProtocol] = None,
        config: Optional[Config] = None) -> List[BenchResult]:
    """
    Per event cost of delivering touch events from a host app to an
    embedded app, unsigned against signed by the input dispatcher and
    verified by the receiver

    Returns:
    - List[BenchResult]: "events_unsigned" and "events_signed", param = events per run
    """
    config = config or Config()
    protocol = protocol or TrialProtocol(runs=3, trials=events)
    with Bus(config) as bus:
        clock = SystemClock()
        dispatcher = InputDispatcher(bus, clock)
        holder: Dict[str, ProcessHandle] = {}

        def sink(ctx: CallContext, message: Message) -> bytes:
            if ctx.statements:
                ev = decode_click(ctx, message)
                return bus.verify(holder["sink"], ev.statement).value.encode("utf-8")
            parse_event_fields(message.payload)
            return b""

        holder["sink"] = bus.spawn("AdApp", BENCH_UID + 20, handler=sink)
        host = HostApp(bus)

        def unsigned() -> None:
            fields = event_fields_bytes(10, 20, clock.now_ms(), False)
            bus.call(host.handle, "AdApp", Message(CLICK_METHOD, fields))

        def signed() -> None:
            ev = dispatcher.emit_event(10, 20)
            bus.call(host.handle, "AdApp", Message(CLICK_METHOD, encode_click(ev)),
                     statements=[ev.statement])

        samples = measure_interleaved({"events_unsigned": unsigned, "events_signed": signed}, protocol)
        return [summarize(name, protocol.trials, runs, protocol.trim) for name, runs in samples.items()]


SUITES = {
    "statements": bench_statements,
    "ipc": bench_ipc,
    "resolution": bench_resolution,
    "rpc": bench_rpc,
    "throughput": bench_throughput,
}

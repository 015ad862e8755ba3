import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

import requests

from .bench import SUITES, BenchError, ProvenanceMode, TrialProtocol, write_csv
from .config import Config, ConfigError, load_config
from .core.encoding import canonical_encode
from .core.types import Message, ProvenanceError, ResolvedChain
from .crypto import MacAlgorithm
from .ipc_bus.bus import FIRST_APP_UID, Bus
from .net_provider.provider import INTERNET, NetworkClient, NetworkProvider
from .net_provider.server import TrustStore, VerifierServer, echo_handler
from .net_provider.tls import DEFAULT_DEVICE_ID, DemoPki, TlsVerifierServer, generate_demo_pki
from .net_provider.transport import TlsTransport
from .net_provider.types import AttestedRequest, NetProviderError, RestatedStatement
from .net_provider.wire import build_headers
from .scenarios.clickfraud import CLICK_PATH, AdServer, run_clickfraud
from .scenarios.paybuddy import PAY_PATH, PayBuddyServer, run_paybuddy
from .scenarios.types import ClickAttack, PayBuddyTamper
from .transcript import render_bench_table, render_transcript

logger = logging.getLogger("provenance_ipc")

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_USAGE = 2

ECHO_PATH = "/echo"


def is_dir(path):
    if not os.path.isdir(path):
        raise argparse.ArgumentTypeError(f"{path} is not a directory")
    return path


def int_list(text):
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a comma separated list of integers")


def get_parser():
    parser = argparse.ArgumentParser(
        prog="provenance_ipc",
        description="Simulate provenance carrying IPC: scenarios, benchmarks and a remote verifier",
        epilog="Exit status: 0 expected outcome, 1 unexpected outcome, 2 usage error"
        )
    parser.add_argument(
        "--config", required=False,
        help="Path to a key=value config file; flags override its values",
        )
    parser.add_argument(
        "--seed", type=int, required=False,
        help="Seed for order ids and benchmark payloads",
        )
    parser.add_argument(
        "--mac", choices=[a.value for a in MacAlgorithm], required=False,
        help="MAC algorithm used for statements",
        )
    parser.add_argument(
        "--freshness-ms", type=int, required=False,
        help="Maximum age of a signed input event",
        )
    parser.add_argument(
        "--max-depth", type=int, required=False,
        help="Maximum call chain depth",
        )
    parser.add_argument(
        "--transport", choices=["memory", "tls"], required=False,
        help="Channel between the NetworkProvider and the server",
        )
    parser.add_argument(
        "--no-color", default=False, action="store_true",
        help="Do not use ANSI colors",
        )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0,
        help="Log more; repeat for debug output",
        )
    commands = parser.add_subparsers(dest="command", required=True)

    scenario = commands.add_parser("scenario", help="Run an end to end scenario")
    scenarios = scenario.add_subparsers(dest="scenario", required=True)
    paybuddy = scenarios.add_parser("paybuddy", help="Micropayment through PayBuddy")
    paybuddy.add_argument(
        "--deny", default=False, action="store_true",
        help="The user declines the payment",
        )
    paybuddy.add_argument(
        "--tamper", choices=["mutate", "replay"], required=False,
        help="Stage an attack on the order",
        )
    clickfraud = scenarios.add_parser("clickfraud", help="Signed touch events for ad clicks")
    clickfraud.add_argument(
        "--attack", choices=[a.value for a in ClickAttack if a is not ClickAttack.NONE],
        required=False,
        help="What the host app tries",
        )

    bench = commands.add_parser("bench", help="Run a microbenchmark")
    bench.add_argument("suite", choices=sorted(SUITES))
    bench.add_argument(
        "--csv", required=False,
        help="Write results as CSV to this path",
        )
    bench.add_argument("--runs", type=int, default=10, help="Runs per point")
    bench.add_argument("--trials", type=int, default=100, help="Trials per run")
    bench.add_argument(
        "--sizes", type=int_list, required=False,
        help="Comma separated payload sizes in bytes",
        )
    bench.add_argument(
        "--depths", type=int_list, required=False,
        help="Comma separated chain depths (resolution)",
        )
    bench.add_argument("--hops", type=int, choices=[1, 2], default=1, help="IPC hops (ipc)")
    bench.add_argument(
        "--provenance", choices=[m.value for m in ProvenanceMode], default="both",
        help="Measure with provenance on, off or both interleaved (ipc)",
        )
    bench.add_argument("--events", type=int, default=600, help="Events per run (throughput)")

    serve = commands.add_parser("serve", help="Run the remote verifier over TLS")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8443)
    serve.add_argument(
        "--trust-store", required=True,
        help="Directory with ca.pem, server.pem and server.key",
        )
    serve.add_argument(
        "--init", default=False, action="store_true",
        help="Write a demo PKI into the trust store directory first",
        )
    serve.add_argument("--device-id", default=DEFAULT_DEVICE_ID)

    verify = commands.add_parser("verify", help="Send one attested request to a running verifier")
    verify.add_argument("--server", required=True, help="e.g. https://127.0.0.1:8443")
    verify.add_argument(
        "--trust-store", required=True, type=is_dir,
        help="Directory with ca.pem, device.pem and device.key",
        )
    verify.add_argument(
        "--impersonate", default=False, action="store_true",
        help="Forge provenance headers without the device certificate",
        )
    verify.add_argument("--device-id", default=DEFAULT_DEVICE_ID)
    return parser


def build_config(args) -> Config:
    config = load_config(args.config)
    log_level = None
    if args.verbose == 1:
        log_level = "INFO"
    elif args.verbose > 1:
        log_level = "DEBUG"
    return config.override(
        mac_algorithm=args.mac,
        freshness_ms=args.freshness_ms,
        max_chain_depth=args.max_depth,
        transport=args.transport,
        seed=args.seed,
        log_level=log_level)


def run_scenario(args, config: Config) -> int:
    if args.scenario == "paybuddy":
        tamper = PayBuddyTamper(args.tamper) if args.tamper else PayBuddyTamper.NONE
        transcript = run_paybuddy(approve=not args.deny, tamper=tamper, config=config)
    else:
        attack = ClickAttack(args.attack) if args.attack else ClickAttack.NONE
        transcript = run_clickfraud(attack=attack, config=config)
    for line in render_transcript(transcript, color=not args.no_color):
        print(line)
    return EXIT_OK if transcript.expected else EXIT_UNEXPECTED


def run_bench(args, config: Config) -> int:
    protocol = TrialProtocol(runs=args.runs, trials=args.trials if args.suite != "throughput"
                             else args.events, trim=args.runs >= 3)
    kwargs = {"protocol": protocol, "config": config}
    if args.suite == "resolution":
        if args.depths:
            kwargs["depths"] = args.depths
    elif args.suite == "throughput":
        kwargs["events"] = args.events
    elif args.sizes:
        kwargs["sizes"] = args.sizes
    if args.suite == "ipc":
        kwargs["hops"] = args.hops
        kwargs["provenance"] = ProvenanceMode(args.provenance)

    results = SUITES[args.suite](**kwargs)
    for line in render_bench_table(results, color=not args.no_color):
        print(line)
    if args.csv:
        write_csv(results, args.csv)
    return EXIT_OK


def serve(args, config: Config) -> int:
    """ Run the TLS verifier until interrupted """
    if args.init:
        generate_demo_pki(args.trust_store, args.device_id)
    trust_store = TrustStore.load(args.trust_store)
    verifier = VerifierServer(
        trust_store,
        handlers={ECHO_PATH: echo_handler, PAY_PATH: PayBuddyServer(), CLICK_PATH: AdServer()},
        plain_handlers={ECHO_PATH: echo_handler})
    server = TlsVerifierServer(verifier, args.trust_store, host=args.host, port=args.port)
    print(f"verifier listening on https://{args.host}:{server.port}, Ctrl+C to stop")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return EXIT_OK


def verify(args, config: Config) -> int:
    """ One attested request through a device NetworkProvider, or a forged one """
    pki = DemoPki(Path(args.trust_store), args.device_id)
    url = args.server.rstrip("/") + ECHO_PATH
    if args.impersonate:
        forged = AttestedRequest(
            url=url,
            payload=b"hello from a forger",
            device_id=args.device_id,
            header_chain=ResolvedChain(("PayBuddy",)),
            header_statements=(RestatedStatement(
                "PayBuddy", canonical_encode(Message("payment_decision", b"approved")), "00" * 20),))
        try:
            resp = requests.post(url, data=forged.payload, headers=build_headers(forged),
                                 verify=str(pki.ca_cert), timeout=10)
        except requests.RequestException as e:
            print(f"request failed: {e}", file=sys.stderr)
            return EXIT_UNEXPECTED
        print(f"{resp.status_code} {resp.text}")
        return EXIT_OK if resp.status_code == 403 else EXIT_UNEXPECTED

    transport = TlsTransport(args.server, pki.device_credential(), pki.ca_cert)
    with Bus(config) as bus:
        NetworkProvider(bus, transport).install()
        app = bus.spawn("VerifyApp", FIRST_APP_UID + 50, {INTERNET})
        stmt = bus.make_statement(app, Message("hello", b"hello from the device"))
        response = NetworkClient(bus, app).rpc(url, b"hello from the device", [stmt])
    transport.close()
    print(f"{response.status} {response.body.decode('utf-8', errors='replace')}")
    return EXIT_OK if response.ok else EXIT_UNEXPECTED


COMMANDS = {
    "scenario": run_scenario,
    "bench": run_bench,
    "serve": serve,
    "verify": verify,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = get_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    try:
        config = build_config(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(
        level=config.log_level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    logger.debug("running %s with %s", args.command, config)

    try:
        return COMMANDS[args.command](args, config)
    except (BenchError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (NetProviderError, ProvenanceError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())

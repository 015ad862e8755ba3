from __future__ import annotations

import logging
from typing import List, Optional, Sequence

from ..core.encoding import Reader, Writer, canonical_encode
from ..core.types import CallChain, Message, Statement
from ..ipc_bus.bus import RADIO_UID, Bus
from ..ipc_bus.process import ProcessHandle, dispatch_table
from ..ipc_bus.types import CallContext, CallMode, current_chain
from .types import (
    AttestedRequest,
    RestatedStatement,
    RpcResponse,
    StatementVerificationFailed,
    Transport,
)

logger = logging.getLogger(__name__)

NETWORK_PROVIDER = "NetworkProvider"
INTERNET = "INTERNET"

RPC_METHOD = "rpc"
PLAIN_METHOD = "send_plain"


def encode_rpc_request(url: str, payload: bytes) -> bytes:
    return Writer().string(url).blob(payload).getvalue()


def decode_rpc_request(data: bytes):
    r = Reader(data)
    url, payload = r.string(), r.blob()
    r.finish()
    return url, payload


def encode_rpc_response(response: RpcResponse) -> bytes:
    return Writer().u32(response.status).blob(response.body).getvalue()


def decode_rpc_response(data: bytes) -> RpcResponse:
    r = Reader(data)
    response = RpcResponse(r.u32(), r.blob())
    r.finish()
    return response


class NetworkProvider:
    """
    NetworkProvider is the system service that speaks to the network on
    behalf of apps. It verifies the statements an app hands it, resolves
    the app's call chain and sends the result over a transport whose
    credential no app can reach.
    """
    def __init__(self, bus: Bus, transport: Transport) -> None:
        self.bus = bus
        self._transport = transport
        self.handle: Optional[ProcessHandle] = None

    def install(self) -> "NetworkProvider":
        """ Spawn the NetworkProvider process on the bus """
        routes = {RPC_METHOD: self._serve_rpc, PLAIN_METHOD: self._serve_plain}
        self.handle = self.bus.spawn(NETWORK_PROVIDER, RADIO_UID, {INTERNET}, dispatch_table(routes))
        return self

    @property
    def device_id(self) -> str:
        return self._transport.device_id

    def rpc(self, ctx: CallContext, url: str, payload: bytes,
            statements: Sequence[Statement]) -> RpcResponse:
        """
        Send an attested request for the caller described by ctx

        Parameters:
        - ctx (CallContext): the calling app's context; its effective chain
            becomes the request's chain
        - url (str): destination
        - payload (bytes): request body, opaque to the provider
        - statements (Sequence[Statement]): statements to restate

        Returns:
        - RpcResponse: the server's answer, verbatim

        Raises:
        - StatementVerificationFailed: naming the first statement that is
            not Valid; nothing is sent
        - UnresolvablePrincipal: if a chain link or speaker has no name
        - TransportError: if the request cannot be delivered
        """
        for index, stmt in enumerate(statements):
            verdict = self.bus.verify(self.handle, stmt)
            if not verdict.is_valid:
                logger.warning("refusing rpc to %s: statement %d is %s", url, index, verdict.value)
                raise StatementVerificationFailed(index, verdict)

        resolved = self.bus.resolve(self.handle, current_chain(ctx))
        restated: List[RestatedStatement] = []
        if statements:
            speakers = self.bus.resolve(self.handle, CallChain(tuple(s.speaker for s in statements)))
            for name, stmt in zip(speakers, statements):
                restated.append(RestatedStatement(name, canonical_encode(stmt.message), stmt.tag.hex()))

        request = AttestedRequest(
            url=url,
            payload=payload,
            device_id=self._transport.device_id,
            header_chain=resolved,
            header_statements=tuple(restated))
        logger.info("rpc %s chain=%s statements=%d", url, ",".join(resolved.origin_order()),
                    len(restated))
        return self._transport.send(request)

    def send_plain(self, url: str, payload: bytes) -> RpcResponse:
        """ An unattested request, the stock networking path """
        return self._transport.send_plain(url, payload)

    def _serve_rpc(self, ctx: CallContext, message: Message) -> bytes:
        url, payload = decode_rpc_request(message.payload)
        return encode_rpc_response(self.rpc(ctx, url, payload, ctx.statements))

    def _serve_plain(self, ctx: CallContext, message: Message) -> bytes:
        url, payload = decode_rpc_request(message.payload)
        return encode_rpc_response(self.send_plain(url, payload))


class NetworkClient:
    """ The stub an app uses to reach the NetworkProvider """

    def __init__(self, bus: Bus, handle: ProcessHandle) -> None:
        self.bus = bus
        self.handle = handle

    def rpc(self, url: str, payload: bytes, statements: Sequence[Statement] = ()) -> RpcResponse:
        reply = self.bus.call(
            self.handle, NETWORK_PROVIDER, Message(RPC_METHOD, encode_rpc_request(url, payload)),
            mode=CallMode.PROPAGATE_CHAIN, statements=statements)
        return decode_rpc_response(reply.payload)

    def send_plain(self, url: str, payload: bytes) -> RpcResponse:
        reply = self.bus.call(
            self.handle, NETWORK_PROVIDER, Message(PLAIN_METHOD, encode_rpc_request(url, payload)),
            mode=CallMode.DROP_CHAIN)
        return decode_rpc_response(reply.payload)

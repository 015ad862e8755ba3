"""
The AuthorityManager as an IPC service. Apps never hold a reference to
the manager itself: they ask the "AuthorityManager" system process over
the bus, one round trip per request.
"""
from __future__ import annotations

import logging
from typing import TYPE_CHECKING, Dict

from ..core.encoding import Reader, Writer, canonical_decode, canonical_encode
from ..core.types import CallChain, Message, ResolvedChain, Statement
from .authority import AuthorityManager
from .types import Verdict

if TYPE_CHECKING:
    from ..ipc_bus.bus import Bus
    from ..ipc_bus.process import ProcessHandle

logger = logging.getLogger(__name__)

AUTHORITY_SERVICE = "AuthorityManager"

VERIFY_METHOD = "verify_statement"
RESOLVE_METHOD = "resolve_chain"


def authority_routes(manager: AuthorityManager) -> Dict[str, object]:
    """
    Build the method routes served by the AuthorityManager process

    Parameters:
    - manager (AuthorityManager): the authority answering the requests

    Returns:
    - Dict[str, HandlerFunc]: routes for dispatch_table
    """
    def verify(ctx, message: Message) -> bytes:
        stmt = canonical_decode(message.payload, Statement)
        return manager.verify_statement(stmt).value.encode("utf-8")

    def resolve(ctx, message: Message) -> bytes:
        chain = canonical_decode(message.payload, CallChain)
        names = manager.resolve_chain(chain).names
        w = Writer().count(len(names))
        for name in names:
            w.string(name)
        return w.getvalue()

    return {VERIFY_METHOD: verify, RESOLVE_METHOD: resolve}


class AuthorityClient:
    """
    AuthorityClient is the stub an app uses to talk to the authority.
    Requests are service calls: they carry the app's identity but no
    chain, the authority answers anyone.
    """
    def __init__(self, bus: "Bus", handle: "ProcessHandle") -> None:
        self.bus = bus
        self.handle = handle

    def verify(self, stmt: Statement) -> Verdict:
        """
        Parameters:
        - stmt (Statement): the statement to check

        Returns:
        - Verdict: the authority's answer
        """
        reply = self.bus.call_service(
            self.handle, AUTHORITY_SERVICE, Message(VERIFY_METHOD, canonical_encode(stmt)))
        return Verdict(reply.payload.decode("utf-8"))

    def resolve(self, chain: CallChain) -> ResolvedChain:
        """
        Returns:
        - ResolvedChain: app names in chain order

        Raises:
        - UnresolvablePrincipal: re-raised from the service
        """
        reply = self.bus.call_service(
            self.handle, AUTHORITY_SERVICE, Message(RESOLVE_METHOD, canonical_encode(chain)))
        r = Reader(reply.payload)
        names = tuple(r.items(lambda rd: rd.string()))
        r.finish()
        return ResolvedChain(names)

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Tuple

from ..core.types import CallChain, Message, Principal, ProvenanceError, Statement, chain_prepend


class IpcError(ProvenanceError):
    """ Base class for errors raised by the bus """
    pass


class DuplicateApp(IpcError):
    """ DuplicateApp is raised when an app name (or its uid) is already in use """
    pass


class UnknownTarget(IpcError):
    """ UnknownTarget is raised when a call names an app that was never spawned """
    pass


class TargetDead(IpcError):
    """ TargetDead is raised when a call names an app that has been torn down """
    pass


class CallTimeout(IpcError):
    """ CallTimeout is raised when a callee does not reply in time """
    pass


class UnknownMethod(IpcError):
    """ UnknownMethod is raised by dispatch tables for unrouted methods """
    pass


class PayloadTooLarge(IpcError):
    """ PayloadTooLarge is raised when a call payload exceeds the configured maximum """
    pass


class CallMode(Enum):
    # PROPAGATE_CHAIN quotes the caller's own chain, DROP_CHAIN is
    # enablePrivilege: the callee only learns the immediate caller
    PROPAGATE_CHAIN = "propagate"
    DROP_CHAIN = "drop"


@dataclass(frozen=True)
class CallContext:
    """
    What a callee learns about a call. immediate_caller comes from the bus
    and cannot be forged; antecedent_chain comes from the caller and can.
    Contexts are plain values, a callee may keep one and act on it later.
    """
    immediate_caller: Principal
    antecedent_chain: CallChain = field(default_factory=CallChain.empty)
    statements: Tuple[Statement, ...] = ()
    call_statement: Optional[Statement] = None

    def effective_chain(self) -> CallChain:
        return current_chain(self)


def current_chain(ctx: CallContext) -> CallChain:
    """
    The effective chain of a call: the antecedents quoted by the bus
    observed caller. Depth was checked when the call was sent.
    """
    return chain_prepend(ctx.antecedent_chain, ctx.immediate_caller, max_depth=None)


@dataclass(frozen=True)
class Reply:
    payload: bytes = b""


# a process's call handler: context and message in, reply payload out
HandlerFunc = Callable[[CallContext, Message], Optional[bytes]]

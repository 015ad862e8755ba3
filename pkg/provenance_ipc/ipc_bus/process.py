from __future__ import annotations

import logging
import queue
import threading
from concurrent.futures import Future
from dataclasses import dataclass
from typing import Callable, Dict, Optional

from ..core.types import AppIdentity, Message, Principal
from .types import CallContext, HandlerFunc, Reply, TargetDead, UnknownMethod

logger = logging.getLogger(__name__)


@dataclass
class Envelope:
    """
    A marshaled call waiting in a callee's inbox. sender is filled in by
    the bus, frame holds the marshaled message, chain and statements.
    """
    sender: Principal
    frame: bytes
    reply: Future


_STOP = object()


def dispatch_table(routes: Dict[str, HandlerFunc]) -> HandlerFunc:
    """
    Build a handler that routes calls by Message.method

    Parameters:
    - routes (Dict[str, HandlerFunc]): method name to handler

    Returns:
    - HandlerFunc: a handler raising UnknownMethod for unrouted methods
    """
    def handler(ctx: CallContext, message: Message) -> Optional[bytes]:
        try:
            route = routes[message.method]
        except KeyError:
            raise UnknownMethod(f"no handler for method {message.method!r}") from None
        return route(ctx, message)
    return handler


def _no_handler(ctx: CallContext, message: Message) -> Optional[bytes]:
    raise UnknownMethod(f"process does not accept calls ({message.method!r})")


class ProcessHandle:
    """
    ProcessHandle is a simulated app process: an identity, an inbox and a
    worker thread that handles one call at a time in arrival order.
    Application code holds the handle, the bus owns everything else.
    """
    def __init__(
            self,
            principal: Principal,
            identity: AppIdentity,
            handler: Optional[HandlerFunc],
            unmarshal: Callable[[Envelope], tuple]) -> None:
        """
        Parameters:
        - principal (Principal): uid/pid of the process
        - identity (AppIdentity): app name and permissions
        - handler (Optional[HandlerFunc]): the call handler, None for
            processes that only make calls
        - unmarshal (Callable): turns an envelope into (CallContext, Message),
            supplied by the bus
        """
        self.principal = principal
        self.identity = identity
        self.inbox: "queue.Queue" = queue.Queue()
        self._handler = handler or _no_handler
        self._unmarshal = unmarshal
        self._current: Optional[CallContext] = None
        self._alive = True
        self._lock = threading.Lock()
        self._thread = threading.Thread(
            target=self._run,
            name=f"proc-{identity.app_name}-{principal.pid}",
            daemon=True)

    @property
    def app_name(self) -> str:
        return self.identity.app_name

    @property
    def alive(self) -> bool:
        return self._alive

    def start(self) -> None:
        self._thread.start()

    def on_worker(self) -> bool:
        """ True when the calling thread is this process's handler thread """
        return threading.current_thread() is self._thread

    def active_context(self) -> Optional[CallContext]:
        """ The context of the call being handled, seen from the handler thread only """
        if self.on_worker():
            return self._current
        return None

    def deliver(self, envelope: Envelope) -> None:
        with self._lock:
            if not self._alive:
                raise TargetDead(f"{self.app_name} is not running")
            self.inbox.put(envelope)

    def stop(self) -> None:
        with self._lock:
            if not self._alive:
                return
            self._alive = False
            self.inbox.put(_STOP)
        if not self.on_worker():
            self._thread.join(timeout=1.0)

    def _run(self) -> None:
        while True:
            envelope = self.inbox.get()
            if envelope is _STOP:
                break
            if not envelope.reply.set_running_or_notify_cancel():
                continue
            try:
                ctx, message = self._unmarshal(envelope)
                self._current = ctx
                result = self._handler(ctx, message)
                envelope.reply.set_result(Reply(result or b""))
            except Exception as e:  # handed to the caller
                logger.debug("%s handler raised %r", self.app_name, e)
                envelope.reply.set_exception(e)
            finally:
                self._current = None
        # anything still queued belongs to a dead process
        while True:
            try:
                envelope = self.inbox.get_nowait()
            except queue.Empty:
                break
            if envelope is not _STOP and envelope.reply.set_running_or_notify_cancel():
                envelope.reply.set_exception(TargetDead(f"{self.app_name} exited"))

    def __repr__(self) -> str:
        return f"ProcessHandle({self.app_name!r}, {self.principal})"

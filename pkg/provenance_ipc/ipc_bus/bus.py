from __future__ import annotations

import itertools
import logging
import threading
from concurrent.futures import Future
from concurrent.futures import TimeoutError as FutureTimeout
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from ..authority.authority import AuthorityManager
from ..authority.client import AUTHORITY_SERVICE, AuthorityClient, authority_routes
from ..authority.types import Verdict
from ..config import Config, ConfigError
from ..core.encoding import (
    Reader,
    Writer,
    read_chain,
    read_message,
    read_statement,
    statement_signing_bytes,
    write_chain,
    write_message,
    write_statement,
)
from ..core.types import (
    AppIdentity,
    CallChain,
    Message,
    PermissionToken,
    Principal,
    ResolvedChain,
    Statement,
    chain_prepend,
    permission_set,
)
from ..crypto import SecretKey, mac_create
from ..policy import Decision, PermissionTable, evaluate
from .process import Envelope, ProcessHandle, dispatch_table
from .types import (
    CallContext,
    CallMode,
    CallTimeout,
    DuplicateApp,
    HandlerFunc,
    PayloadTooLarge,
    Reply,
    TargetDead,
    UnknownTarget,
    current_chain,
)

logger = logging.getLogger(__name__)

# reserved uids for OS services, apps start at 10000
SYSTEM_UID = 1000
RADIO_UID = 1001
INPUT_UID = 1004
FIRST_APP_UID = 10000
FIRST_PID = 1000

_FLAG_CHAIN = 0x01
_FLAG_CALL_STATEMENT = 0x02


class Bus:
    """
    Bus is the simulated device: it spawns app processes, delivers calls
    between them with an unforgeable caller identity and propagates call
    chains on every call, the way generated IPC stubs would.

    Typical use:

        with Bus(config) as bus:
            mapper = bus.spawn("Mapper", 10001, {"FINE_LOCATION"}, handler)
            reply = bus.call(app, "Mapper", Message("locate"))
    """
    def __init__(
            self,
            config: Optional[Config] = None,
            authority: Optional[AuthorityManager] = None,
            provenance: bool = True) -> None:
        """
        Parameters:
        - config (Optional[Config]): runtime configuration, defaults if None
        - authority (Optional[AuthorityManager]): the authority to use, a new
            one if None. Its algorithm must match config.mac_algorithm
        - provenance (bool): when False the bus behaves like stock IPC, no
            chains and no call statements travel with calls

        Raises:
        - ConfigError: if the authority uses a different MAC algorithm
        """
        self.config = config or Config()
        if authority is not None and authority.algorithm is not self.config.mac_algorithm:
            raise ConfigError(
                f"authority uses {authority.algorithm.value} but the bus is configured "
                f"for {self.config.mac_algorithm.value}; mixed algorithms are not supported")
        self.authority = authority or AuthorityManager(self.config.mac_algorithm)
        self.provenance = provenance
        self._processes: Dict[str, ProcessHandle] = {}
        self._retired: Set[str] = set()
        self._keys: Dict[Principal, SecretKey] = {}
        self._pids = itertools.count(FIRST_PID)
        self._lock = threading.RLock()
        self._started = False
        self.authority_handle: Optional[ProcessHandle] = None

    def __enter__(self) -> "Bus":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()

    def start(self) -> None:
        """ Start the bus and its AuthorityManager system service """
        if self._started:
            return
        self._started = True
        self.authority_handle = self.spawn(
            AUTHORITY_SERVICE, SYSTEM_UID, handler=dispatch_table(authority_routes(self.authority)))
        logger.info("bus started (%s, provenance %s)",
                    self.config.mac_algorithm.value, "on" if self.provenance else "off")

    def shutdown(self) -> None:
        """ Tear down every process, system services last """
        with self._lock:
            handles = [h for h in self._processes.values() if h is not self.authority_handle]
        for handle in handles:
            self.teardown(handle)
        if self.authority_handle is not None and self.authority_handle.alive:
            self.teardown(self.authority_handle)
        self._started = False

    def spawn(
            self,
            app_name: str,
            uid: int,
            permissions: Iterable = (),
            handler: Optional[HandlerFunc] = None) -> ProcessHandle:
        """
        Launch an app process

        Parameters:
        - app_name (str): unique, human readable app name
        - uid (int): the app's user id
        - permissions (Iterable): PermissionToken or names granted to the uid
        - handler (Optional[HandlerFunc]): handles incoming calls

        Returns:
        - ProcessHandle: the running process, with a fresh pid

        Raises:
        - DuplicateApp: if the name, or the uid under another name, is in use
        """
        identity = AppIdentity(app_name, permission_set(permissions))
        with self._lock:
            if app_name in self._processes:
                raise DuplicateApp(f"an app named {app_name!r} is already running")
            for other in self._processes.values():
                if other.principal.uid == uid:
                    raise DuplicateApp(f"uid {uid} already belongs to {other.app_name!r}")
            principal = Principal(uid, next(self._pids))
            handle = ProcessHandle(principal, identity, handler, self._unmarshal)
            self._processes[app_name] = handle
            self._retired.discard(app_name)
            self.authority.enroll(principal, identity)
        handle.start()
        logger.info("spawned %s as %s", app_name, principal)
        return handle

    def teardown(self, handle: ProcessHandle) -> None:
        """ Stop a process; its key and directory entry go with it """
        with self._lock:
            if self._processes.get(handle.app_name) is handle:
                del self._processes[handle.app_name]
                self._retired.add(handle.app_name)
            self._keys.pop(handle.principal, None)
        handle.stop()
        self.authority.retire(handle.principal)
        logger.info("tore down %s %s", handle.app_name, handle.principal)

    def lookup(self, app_name: str) -> ProcessHandle:
        """
        Raises:
        - UnknownTarget: if no app with that name was ever spawned
        - TargetDead: if the app has been torn down
        """
        with self._lock:
            handle = self._processes.get(app_name)
            if handle is None:
                if app_name in self._retired:
                    raise TargetDead(f"{app_name} is no longer running")
                raise UnknownTarget(f"no app named {app_name!r}")
            return handle

    def processes(self) -> List[ProcessHandle]:
        with self._lock:
            return list(self._processes.values())

    def call(
            self,
            sender: ProcessHandle,
            target: str,
            message: Message,
            mode: CallMode = CallMode.PROPAGATE_CHAIN,
            statements: Sequence[Statement] = (),
            on_behalf_of: Optional[CallContext] = None) -> Reply:
        """
        Make a synchronous call from sender to the app named target

        Parameters:
        - sender (ProcessHandle): the calling process
        - target (str): app name of the callee
        - message (Message): the call
        - mode (CallMode): PROPAGATE_CHAIN quotes the sender's current chain,
            DROP_CHAIN sends only the sender's identity
        - statements (Sequence[Statement]): statements delivered as-is
        - on_behalf_of (Optional[CallContext]): a context sender received
            earlier and kept; its chain is quoted instead of the one sender
            is serving right now. Ignored with DROP_CHAIN

        Returns:
        - Reply: the callee's reply

        Raises:
        - UnknownTarget, TargetDead: if the callee cannot be reached
        - ChainDepthExceeded: if the quoted chain would be too deep
        - PayloadTooLarge: if the payload exceeds max_payload_bytes
        - CallTimeout: if the callee does not answer within call_timeout_s
        - any exception raised by the callee's handler
        """
        if not sender.alive:
            raise TargetDead(f"caller {sender.app_name} is no longer running")
        if len(message.payload) > self.config.max_payload_bytes:
            raise PayloadTooLarge(
                f"payload of {len(message.payload)} bytes exceeds {self.config.max_payload_bytes}")
        callee = self.lookup(target)

        antecedents = CallChain.empty()
        call_statement = None
        if self.provenance:
            if mode is CallMode.PROPAGATE_CHAIN:
                ctx = on_behalf_of if on_behalf_of is not None else sender.active_context()
                if ctx is not None:
                    antecedents = current_chain(ctx)
            # depth of what the callee will see
            chain_prepend(antecedents, sender.principal, self.config.max_chain_depth)
            if self.config.sign_calls:
                call_statement = self.make_statement(sender, message)

        frame = self._marshal(message, antecedents, call_statement, statements)
        future: Future = Future()
        callee.deliver(Envelope(sender.principal, frame, future))
        logger.debug("%s -> %s %s (%d antecedents)", sender.app_name, target,
                     message.method, len(antecedents))
        try:
            return future.result(timeout=self.config.call_timeout_s)
        except FutureTimeout:
            future.cancel()
            raise CallTimeout(
                f"{target} did not answer {message.method!r} within "
                f"{self.config.call_timeout_s}s") from None

    def call_service(self, sender: ProcessHandle, service: str, message: Message) -> Reply:
        """ A call to a system service: the sender is identified, its chain is not quoted """
        return self.call(sender, service, message, mode=CallMode.DROP_CHAIN)

    def _marshal(
            self,
            message: Message,
            antecedents: CallChain,
            call_statement: Optional[Statement],
            statements: Sequence[Statement]) -> bytes:
        w = Writer()
        write_message(w, message)
        flags = 0
        if self.provenance:
            flags |= _FLAG_CHAIN
            if call_statement is not None:
                flags |= _FLAG_CALL_STATEMENT
        w.u8(flags)
        if flags & _FLAG_CHAIN:
            write_chain(w, antecedents)
        if call_statement is not None:
            write_statement(w, call_statement)
        w.count(len(statements))
        for s in statements:
            write_statement(w, s)
        return w.getvalue()

    def _unmarshal(self, envelope: Envelope) -> Tuple[CallContext, Message]:
        r = Reader(envelope.frame)
        message = read_message(r)
        flags = r.u8()
        antecedents = read_chain(r) if flags & _FLAG_CHAIN else CallChain.empty()
        call_statement = read_statement(r) if flags & _FLAG_CALL_STATEMENT else None
        statements = tuple(r.items(read_statement))
        r.finish()
        ctx = CallContext(
            immediate_caller=envelope.sender,
            antecedent_chain=antecedents,
            statements=statements,
            call_statement=call_statement)
        return ctx, message

    def register(self, handle: ProcessHandle) -> SecretKey:
        """
        Request a fresh key from the authority for handle's process. Any
        earlier key of the process stops verifying.

        Returns:
        - SecretKey: the process's own key
        """
        key = self.authority.register(handle.principal)
        with self._lock:
            self._keys[handle.principal] = key
        return key

    def make_statement(self, sender: ProcessHandle, message: Message) -> Statement:
        """
        Have sender say message: a statement tagged with sender's key,
        requesting the key from the authority on first use

        Raises:
        - UnknownPrincipal: if the process is no longer registered
        """
        with self._lock:
            key = self._keys.get(sender.principal)
        if key is None:
            key = self.register(sender)
        tag = mac_create(key, statement_signing_bytes(sender.principal, message))
        return Statement(sender.principal, message, tag)

    def authority_client(self, handle: ProcessHandle) -> AuthorityClient:
        return AuthorityClient(self, handle)

    def verify(self, handle: ProcessHandle, stmt: Statement) -> Verdict:
        """ Ask the AuthorityManager service, over IPC, to verify stmt """
        return self.authority_client(handle).verify(stmt)

    def resolve(self, handle: ProcessHandle, chain: CallChain) -> ResolvedChain:
        """ Ask the AuthorityManager service, over IPC, to resolve chain """
        return self.authority_client(handle).resolve(chain)

    def permission_table(self) -> PermissionTable:
        return PermissionTable.from_directory(self.authority.directory())

    def check_permission(self, ctx: CallContext, permission) -> Decision:
        """ Evaluate the effective chain of ctx against the live permission table """
        if not isinstance(permission, PermissionToken):
            permission = PermissionToken(permission)
        return evaluate(current_chain(ctx), permission, self.permission_table())

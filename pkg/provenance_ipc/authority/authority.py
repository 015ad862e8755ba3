from __future__ import annotations

import logging
import threading
from typing import Dict, Optional, Set

from ..core.encoding import statement_signing_bytes
from ..core.types import AppIdentity, CallChain, Principal, ResolvedChain, Statement
from ..crypto import MacAlgorithm, SecretKey, TagLengthMismatch, keygen, mac_verify
from .types import UnknownPrincipal, UnresolvablePrincipal, Verdict

logger = logging.getLogger(__name__)


class KeyRegistry:
    """
    KeyRegistry holds at most one key per principal and the uid
    directory used to name principals. It is not thread safe on its
    own, the AuthorityManager serializes access to it.
    """
    def __init__(self) -> None:
        self.entries: Dict[Principal, SecretKey] = {}
        self.directory: Dict[int, AppIdentity] = {}

    def replace_key(self, principal: Principal, key: SecretKey) -> None:
        """ Store key for principal, destroying any earlier key """
        self.entries[principal] = key

    def key_for(self, principal: Principal) -> Optional[SecretKey]:
        return self.entries.get(principal)

    def drop_key(self, principal: Principal) -> None:
        self.entries.pop(principal, None)


class AuthorityManager:
    """
    The trusted authority: issues per-principal MAC keys, verifies
    statements for anyone who asks and resolves principals into app
    names. Every operation takes the same lock, so a verification never
    sees a half replaced key.
    """
    def __init__(self, algorithm: MacAlgorithm = MacAlgorithm.HMAC_SHA1) -> None:
        self.algorithm = algorithm
        self._registry = KeyRegistry()
        self._live: Set[Principal] = set()
        self._lock = threading.RLock()

    def enroll(self, principal: Principal, identity: AppIdentity) -> None:
        """
        Record a live process and its app identity. Called by the bus when
        it spawns a process.

        Parameters:
        - principal (Principal): the new process
        - identity (AppIdentity): name and permissions of its uid
        """
        with self._lock:
            self._live.add(principal)
            self._registry.directory[principal.uid] = identity
        logger.debug("enrolled %s as %s", principal, identity.app_name)

    def retire(self, principal: Principal) -> None:
        """
        Forget a dead process: its key is destroyed at once and the uid
        leaves the directory when no live process of that uid remains
        """
        with self._lock:
            self._live.discard(principal)
            self._registry.drop_key(principal)
            if not any(p.uid == principal.uid for p in self._live):
                self._registry.directory.pop(principal.uid, None)
        logger.debug("retired %s", principal)

    def is_live(self, principal: Principal) -> bool:
        with self._lock:
            return principal in self._live

    def register(self, principal: Principal) -> SecretKey:
        """
        Issue a fresh key to principal, replacing any previous one

        Parameters:
        - principal (Principal): the requesting process

        Returns:
        - SecretKey: the new key, handed to the requesting process only

        Raises:
        - UnknownPrincipal: if the process is not live on the bus
        """
        with self._lock:
            if principal not in self._live:
                raise UnknownPrincipal(f"{principal} is not a registered process")
            key = keygen(self.algorithm)
            replaced = self._registry.key_for(principal) is not None
            self._registry.replace_key(principal, key)
        logger.info("issued %s key to %s%s", self.algorithm.value, principal,
                    " (replacing previous key)" if replaced else "")
        return key

    def verify_statement(self, stmt: Statement) -> Verdict:
        """
        Check that stmt.speaker really said stmt.message

        Parameters:
        - stmt (Statement): the statement to check

        Returns:
        - Verdict: VALID, INVALID_TAG or UNKNOWN_SPEAKER
        """
        with self._lock:
            key = self._registry.key_for(stmt.speaker)
        if key is None:
            verdict = Verdict.UNKNOWN_SPEAKER
        else:
            data = statement_signing_bytes(stmt.speaker, stmt.message)
            try:
                ok = mac_verify(key, data, stmt.tag)
            except TagLengthMismatch:
                ok = False
            verdict = Verdict.VALID if ok else Verdict.INVALID_TAG
        logger.debug("statement by %s: %s", stmt.speaker, verdict.value)
        return verdict

    def resolve_principal(self, principal: Principal) -> AppIdentity:
        """
        Raises:
        - UnresolvablePrincipal: if the uid has no directory entry
        """
        with self._lock:
            identity = self._registry.directory.get(principal.uid)
        if identity is None:
            raise UnresolvablePrincipal(0, principal)
        return identity

    def resolve_chain(self, chain: CallChain) -> ResolvedChain:
        """
        Turn a call chain into app names, same order as the chain

        Parameters:
        - chain (CallChain): the chain to resolve

        Returns:
        - ResolvedChain: one app name per link

        Raises:
        - UnresolvablePrincipal: naming the index of the first unknown link
        """
        names = []
        with self._lock:
            for index, link in enumerate(chain):
                identity = self._registry.directory.get(link.uid)
                if identity is None:
                    raise UnresolvablePrincipal(index, link)
                names.append(identity.app_name)
        return ResolvedChain(tuple(names))

    def directory(self) -> Dict[int, AppIdentity]:
        """ A snapshot of the uid directory """
        with self._lock:
            return dict(self._registry.directory)

"""
Stack inspection over call chains: a request is allowed only when every
principal it passed through holds the permission on its own.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, Mapping, Optional, Sequence

from .authority.types import Verdict
from .core.types import AppIdentity, CallChain, PermissionToken, Principal, Statement

logger = logging.getLogger(__name__)

StatementVerifier = Callable[[Statement], Verdict]


@dataclass(frozen=True)
class Decision:
    """
    Outcome of a policy evaluation. index names the first (most recent)
    link lacking the permission, None when no link is to blame.
    """
    allowed: bool
    index: Optional[int] = None
    reason: str = ""

    @classmethod
    def allow(cls) -> "Decision":
        return cls(True, None, "every link holds the permission")

    @classmethod
    def deny(cls, index: Optional[int], reason: str) -> "Decision":
        return cls(False, index, reason)

    def __bool__(self) -> bool:
        return self.allowed

    def __str__(self) -> str:
        if self.allowed:
            return "Allow"
        return "Deny" if self.index is None else f"Deny({self.index})"


@dataclass(frozen=True)
class PermissionTable:
    """ uid -> granted permissions, a snapshot taken before evaluation """
    grants: Mapping[int, FrozenSet[PermissionToken]] = field(default_factory=dict)

    @classmethod
    def from_directory(cls, directory: Mapping[int, AppIdentity]) -> "PermissionTable":
        return cls({uid: identity.permissions for uid, identity in directory.items()})

    @classmethod
    def from_grants(cls, grants: Mapping[int, Iterable]) -> "PermissionTable":
        return cls({
            uid: frozenset(p if isinstance(p, PermissionToken) else PermissionToken(p) for p in perms)
            for uid, perms in grants.items()
        })

    def holds(self, uid: int, permission: PermissionToken) -> bool:
        return permission in self.grants.get(uid, frozenset())


def evaluate(chain: CallChain, permission: PermissionToken, table: PermissionTable) -> Decision:
    """
    Intersect the privileges of every link in chain

    Parameters:
    - chain (CallChain): the effective chain, most recent caller first
    - permission (PermissionToken): the permission guarding the action
    - table (PermissionTable): grants per uid; unknown uids hold nothing

    Returns:
    - Decision: Allow iff chain is non-empty and every link holds permission
    """
    if len(chain) == 0:
        return Decision.deny(None, "empty chain: no principal vouches for the request")
    for index, link in enumerate(chain):
        if not table.holds(link.uid, permission):
            decision = Decision.deny(index, f"link {index} (uid {link.uid}) lacks {permission}")
            logger.debug("%s for %s on %s", decision, permission, chain)
            return decision
    return Decision.allow()


def evaluate_with_statements(
        chain: CallChain,
        permission: PermissionToken,
        table: PermissionTable,
        statements: Sequence[Statement],
        required_speakers: Iterable[Principal],
        verifier: StatementVerifier) -> Decision:
    """
    evaluate, then demand a Valid statement from each required speaker

    Parameters:
    - statements (Sequence[Statement]): statements delivered with the call
    - required_speakers (Iterable[Principal]): principals that must have spoken
    - verifier (StatementVerifier): asks the authority, e.g.
        AuthorityManager.verify_statement or AuthorityClient.verify

    Returns:
    - Decision: Deny with index None when a statement is missing or invalid
    """
    decision = evaluate(chain, permission, table)
    if not decision.allowed:
        return decision
    vouched: Dict[Principal, bool] = {}
    for stmt in statements:
        if vouched.get(stmt.speaker):
            continue
        vouched[stmt.speaker] = verifier(stmt).is_valid
    for speaker in required_speakers:
        if not vouched.get(speaker):
            return Decision.deny(None, f"no valid statement from {speaker}")
    return decision

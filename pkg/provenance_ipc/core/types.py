from __future__ import annotations

from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, Iterator, Optional, Tuple

U32_MAX = 2**32 - 1
U64_MAX = 2**64 - 1

DEFAULT_MAX_CHAIN_DEPTH = 64
DEFAULT_MAX_PAYLOAD_BYTES = 1024 * 1024

# HMAC-SHA1 and HMAC-SHA256 output lengths
VALID_TAG_LENGTHS = (20, 32)


class ProvenanceError(Exception):
    """ Base class for every error raised by provenance_ipc """
    pass


class EncodingOverflow(ProvenanceError):
    """
    EncodingOverflow is raised when a length or integer does not fit
    the fixed-width field of the canonical encoding
    """
    pass


class DecodingError(ProvenanceError):
    """ DecodingError is raised when bytes are not a valid canonical encoding """
    pass


class ChainDepthExceeded(ProvenanceError):
    """ ChainDepthExceeded is raised when a call chain would grow past its limit """

    def __init__(self, depth: int, max_depth: int) -> None:
        super().__init__(f"call chain depth {depth} exceeds limit {max_depth}")
        self.depth = depth
        self.max_depth = max_depth


@dataclass(frozen=True, order=True)
class Principal:
    """
    An app instance as seen by the OS: a user id and a process id.
    Ordering is lexicographic on (uid, pid).
    """
    uid: int
    pid: int

    def __post_init__(self) -> None:
        for name in ("uid", "pid"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0 or value > U32_MAX:
                raise ValueError(f"{name} must be an unsigned 32-bit integer, got {value!r}")

    def __str__(self) -> str:
        return f"({self.uid},{self.pid})"


@dataclass(frozen=True, order=True)
class PermissionToken:
    """ A permission name, matched exactly and case-sensitively """
    name: str

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("permission name must be non-empty")

    def __str__(self) -> str:
        return self.name


def permission_set(permissions: Iterable) -> FrozenSet[PermissionToken]:
    """
    Build a frozen set of PermissionToken from tokens or plain strings

    Parameters:
    - permissions (Iterable): PermissionToken instances or permission names

    Returns:
    - FrozenSet[PermissionToken]: the normalized permission set
    """
    return frozenset(
        p if isinstance(p, PermissionToken) else PermissionToken(p)
        for p in permissions or ())


@dataclass(frozen=True)
class AppIdentity:
    """
    Human readable identity of an installed app. Names travel in a
    comma-joined header so they may not contain commas.
    """
    app_name: str
    permissions: FrozenSet[PermissionToken] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if not self.app_name:
            raise ValueError("app_name must be non-empty")
        if "," in self.app_name:
            raise ValueError(f"app_name may not contain commas: {self.app_name!r}")
        object.__setattr__(self, "permissions", permission_set(self.permissions))

    def holds(self, permission: PermissionToken) -> bool:
        return permission in self.permissions


@dataclass(frozen=True)
class Message:
    """ The M of "P says M": a method name, an opaque payload and a timestamp in ms """
    method: str
    payload: bytes = b""
    timestamp: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "payload", bytes(self.payload))
        if len(self.payload) > DEFAULT_MAX_PAYLOAD_BYTES:
            raise ValueError(
                f"payload of {len(self.payload)} bytes exceeds {DEFAULT_MAX_PAYLOAD_BYTES}")
        if self.timestamp < 0 or self.timestamp > U64_MAX:
            raise ValueError("timestamp must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class AuthTag:
    """ Fixed length authentication code over a message """
    bytes: bytes

    def __post_init__(self) -> None:
        raw = bytes(self.bytes)
        if len(raw) not in VALID_TAG_LENGTHS:
            raise ValueError(f"tag length must be one of {VALID_TAG_LENGTHS}, got {len(raw)}")
        object.__setattr__(self, "bytes", raw)

    def hex(self) -> str:
        return self.bytes.hex()


@dataclass(frozen=True)
class Statement:
    """ The verifiable statement [speaker, message, tag] """
    speaker: Principal
    message: Message
    tag: AuthTag


@dataclass(frozen=True)
class CallChain:
    """ Principals a request passed through, most recent caller first """
    links: Tuple[Principal, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "links", tuple(self.links))

    @classmethod
    def empty(cls) -> "CallChain":
        return cls(())

    def __len__(self) -> int:
        return len(self.links)

    def __iter__(self) -> Iterator[Principal]:
        return iter(self.links)

    def __getitem__(self, index: int) -> Principal:
        return self.links[index]

    def __str__(self) -> str:
        return "[" + ", ".join(str(p) for p in self.links) + "]"


@dataclass(frozen=True)
class ResolvedChain:
    """ App names of a CallChain, in the same order as the chain """
    names: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "names", tuple(self.names))

    def __len__(self) -> int:
        return len(self.names)

    def __iter__(self) -> Iterator[str]:
        return iter(self.names)

    def origin_order(self) -> Tuple[str, ...]:
        """ Names oldest caller first, the order a remote reader expects """
        return tuple(reversed(self.names))


def chain_prepend(
        chain: CallChain,
        caller: Principal,
        max_depth: Optional[int] = DEFAULT_MAX_CHAIN_DEPTH) -> CallChain:
    """
    Quote a chain: "caller says <chain> says ..."

    Parameters:
    - chain (CallChain): the antecedent chain, left untouched
    - caller (Principal): the principal to put at the head
    - max_depth (Optional[int]): depth limit of the resulting chain,
        None disables the check

    Returns:
    - CallChain: a new chain [caller, *chain]

    Raises:
    - ChainDepthExceeded: if the new chain is longer than max_depth
    """
    depth = len(chain) + 1
    if max_depth is not None and depth > max_depth:
        raise ChainDepthExceeded(depth, max_depth)
    return CallChain((caller,) + chain.links)

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

from ..core.encoding import Reader, Writer, read_principal, write_principal
from ..core.types import U64_MAX, Principal, Statement
from ..net_provider.types import Rejection, ServerView


class PayBuddyTamper(Enum):
    NONE = "none"
    # PayBuddy raises the amount but forwards ExampleApp's original tag
    MUTATE = "mutate"
    # ExampleApp submits the same signed order twice
    REPLAY = "replay"


class ClickAttack(Enum):
    NONE = "none"
    # the host app signs an event with its own key
    SYNTHESIZE = "synthesize"
    # a genuine event relayed again after the freshness window
    REPLAY = "replay"
    # a genuine event delivered while the ad is covered
    OBSCURE = "obscure"
    # the host moves the click after the OS signed it
    TAMPER = "tamper"


class ClickVerdict(Enum):
    ACCEPT = "Accept"
    REJECT_FORGED = "RejectForged"
    REJECT_OBSCURED = "RejectObscured"
    REJECT_STALE = "RejectStale"


class EntryKind(Enum):
    HOP = "hop"
    VERDICT = "verdict"
    SERVER = "server"
    ERROR = "error"


@dataclass(frozen=True)
class TranscriptEntry:
    kind: EntryKind
    actor: str
    text: str


@dataclass
class Transcript:
    """
    Everything a scenario run did: each hop, each verification verdict,
    what went over the wire and what the server concluded. outcome is a
    one-word summary, expected tells whether it is the outcome the
    variant should produce.
    """
    scenario: str
    variant: str
    entries: List[TranscriptEntry] = field(default_factory=list)
    outcome: str = ""
    expected: bool = False
    frames_sent: int = 0
    server_views: List[ServerView] = field(default_factory=list)
    rejections: List[Rejection] = field(default_factory=list)

    def add(self, kind: EntryKind, actor: str, text: str) -> None:
        self.entries.append(TranscriptEntry(kind, actor, text))

    def hop(self, actor: str, text: str) -> None:
        self.add(EntryKind.HOP, actor, text)

    def verdict(self, actor: str, text: str) -> None:
        self.add(EntryKind.VERDICT, actor, text)

    def server(self, text: str) -> None:
        self.add(EntryKind.SERVER, "server", text)

    def error(self, actor: str, text: str) -> None:
        self.add(EntryKind.ERROR, actor, text)

    def of_kind(self, kind: EntryKind) -> List[TranscriptEntry]:
        return [e for e in self.entries if e.kind is kind]

    @property
    def server_view(self) -> Optional[ServerView]:
        return self.server_views[0] if self.server_views else None


@dataclass(frozen=True)
class PurchaseOrder:
    order_id: str
    amount_cents: int
    merchant: str
    description: str = ""

    def __post_init__(self) -> None:
        if not self.order_id:
            raise ValueError("order_id must not be empty")
        if not 0 < self.amount_cents <= U64_MAX:
            raise ValueError("amount_cents must be a positive 64-bit amount")

    def to_bytes(self) -> bytes:
        return (Writer().string(self.order_id).u64(self.amount_cents)
                .string(self.merchant).string(self.description).getvalue())

    @classmethod
    def from_bytes(cls, data: bytes) -> "PurchaseOrder":
        r = Reader(data)
        order = cls(r.string(), r.u64(), r.string(), r.string())
        r.finish()
        return order


@dataclass(frozen=True)
class PaymentDecision:
    order_id: str
    approved: bool
    decided_by: Principal

    def to_bytes(self) -> bytes:
        w = Writer().string(self.order_id).boolean(self.approved)
        return write_principal(w, self.decided_by).getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "PaymentDecision":
        r = Reader(data)
        decision = cls(r.string(), r.boolean(), read_principal(r))
        r.finish()
        return decision


@dataclass(frozen=True)
class InputEvent:
    """ A touch event and the OS input principal's statement over its fields """
    x: int
    y: int
    event_time: int
    obscured: bool
    statement: Statement

    def fields_bytes(self) -> bytes:
        return event_fields_bytes(self.x, self.y, self.event_time, self.obscured)


def event_fields_bytes(x: int, y: int, event_time: int, obscured: bool) -> bytes:
    """ x:i32 y:i32 event_time:u64 obscured:bool """
    return Writer().i32(x).i32(y).u64(event_time).boolean(obscured).getvalue()


def parse_event_fields(data: bytes):
    r = Reader(data)
    fields = (r.i32(), r.i32(), r.u64(), r.boolean())
    r.finish()
    return fields

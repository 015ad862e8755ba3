"""
Provenance headers and request frames.

Headers (values are ASCII):

    X-Provenance-Device      device id
    X-Provenance-Chain       app names joined by ",", oldest caller first
    X-Provenance-Statements  lowercase base16 of:
                               count:u32
                               count x (app_name:str message:bytes tag:bytes)
                             message is the canonical Message encoding

A frame is the canonical encoding of one request on the in-memory channel:

    url:str payload:bytes
    count:u32 count x (name:str value:str)   headers sorted by name
    evidence_kind:str evidence:bytes

The channel MAC covers the frame with evidence_kind "none" and empty
evidence. Every field is length prefixed, so payload bytes can never be
read as a header.
"""
from __future__ import annotations

import binascii
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, Mapping, Tuple

from ..core.encoding import Reader, Writer, canonical_decode
from ..core.types import DecodingError, Message
from .types import AttestedRequest, ChannelEvidence, EvidenceKind, RestatedStatement

DEVICE_HEADER = "X-Provenance-Device"
CHAIN_HEADER = "X-Provenance-Chain"
STATEMENTS_HEADER = "X-Provenance-Statements"

PROVENANCE_HEADERS = (CHAIN_HEADER, DEVICE_HEADER, STATEMENTS_HEADER)


@dataclass(frozen=True)
class WireRequest:
    """ A request as the server receives it: raw header values, not yet trusted """
    url: str
    payload: bytes
    headers: Tuple[Tuple[str, str], ...] = ()
    evidence: ChannelEvidence = field(default_factory=ChannelEvidence.none)

    def header(self, name: str) -> str:
        for key, value in self.headers:
            if key.lower() == name.lower():
                return value
        raise DecodingError(f"missing header {name}")

    def signing_bytes(self) -> bytes:
        return encode_frame(replace(self, evidence=ChannelEvidence.none()))


def sorted_headers(headers: Mapping[str, str]) -> Tuple[Tuple[str, str], ...]:
    return tuple(sorted(headers.items()))


def encode_statements_header(statements: Iterable[RestatedStatement]) -> str:
    statements = list(statements)
    w = Writer().count(len(statements))
    for s in statements:
        w.string(s.app_name).blob(s.message).blob(bytes.fromhex(s.tag))
    return w.getvalue().hex()


def decode_statements_header(value: str) -> Tuple[Tuple[str, Message, bytes], ...]:
    """
    Raises:
    - DecodingError: on bad hex, truncated fields or a bad Message encoding
    """
    try:
        data = binascii.unhexlify(value)
    except (binascii.Error, ValueError) as e:
        raise DecodingError(f"{STATEMENTS_HEADER} is not base16") from e
    r = Reader(data)

    def read_one(rd: Reader) -> Tuple[str, Message, bytes]:
        app_name = rd.string()
        message = canonical_decode(rd.blob(), Message)
        return app_name, message, rd.blob()

    statements = tuple(r.items(read_one))
    r.finish()
    return statements


def decode_chain_header(value: str) -> Tuple[str, ...]:
    names = tuple(value.split(","))
    if not value or any(not name for name in names):
        raise DecodingError(f"{CHAIN_HEADER} has an empty link: {value!r}")
    return names


def build_headers(request: AttestedRequest) -> Dict[str, str]:
    """ The provenance headers of request, in the layout documented above """
    return {
        DEVICE_HEADER: request.device_id,
        CHAIN_HEADER: ",".join(request.header_chain.origin_order()),
        STATEMENTS_HEADER: encode_statements_header(request.header_statements),
    }


def to_wire(request: AttestedRequest) -> WireRequest:
    return WireRequest(
        url=request.url,
        payload=request.payload,
        headers=sorted_headers(build_headers(request)),
        evidence=request.channel_evidence)


def encode_frame(wire: WireRequest) -> bytes:
    w = Writer().string(wire.url).blob(wire.payload)
    w.count(len(wire.headers))
    for name, value in wire.headers:
        w.string(name).string(value)
    w.string(wire.evidence.kind.value).blob(wire.evidence.data)
    return w.getvalue()


def decode_frame(frame: bytes) -> WireRequest:
    """
    Raises:
    - DecodingError: on truncated or trailing bytes or an unknown evidence kind
    """
    r = Reader(frame)
    url = r.string()
    payload = r.blob()
    headers = tuple(r.items(lambda rd: (rd.string(), rd.string())))
    try:
        kind = EvidenceKind(r.string())
    except ValueError as e:
        raise DecodingError(str(e)) from e
    evidence = ChannelEvidence(kind, r.blob())
    r.finish()
    return WireRequest(url, payload, headers, evidence)

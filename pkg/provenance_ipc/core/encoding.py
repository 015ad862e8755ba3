"""
Canonical byte encoding shared by every MAC and every wire frame.

Layout rules:
- integers are big-endian and fixed width (u8, u32, u64, i32)
- strings (UTF-8) and byte sequences carry a u32 length prefix
- lists carry a u32 element count followed by the elements
- Principal  = uid:u32 pid:u32
- Message    = method:str payload:bytes timestamp:u64
- AuthTag    = bytes
- Statement  = Principal Message AuthTag
- CallChain  = list of Principal

MAC tags are computed over these bytes, so the layout is frozen; the
golden values in tests/golden/encodings.txt pin it down.
"""
from __future__ import annotations

import struct
from functools import singledispatch
from typing import Callable, List, Type, TypeVar

from .types import (
    U32_MAX,
    AuthTag,
    CallChain,
    DecodingError,
    EncodingOverflow,
    Message,
    Principal,
    Statement,
)

T = TypeVar("T")

_U8 = struct.Struct(">B")
_U32 = struct.Struct(">I")
_U64 = struct.Struct(">Q")
_I32 = struct.Struct(">i")


class Writer:
    """ Accumulates canonical fields into a byte buffer """

    def __init__(self) -> None:
        self._buffer = bytearray()

    def _pack(self, fmt: struct.Struct, value: int) -> "Writer":
        try:
            self._buffer += fmt.pack(value)
        except struct.error as e:
            raise EncodingOverflow(f"{value!r} does not fit {fmt.format}") from e
        return self

    def u8(self, value: int) -> "Writer":
        return self._pack(_U8, value)

    def u32(self, value: int) -> "Writer":
        return self._pack(_U32, value)

    def u64(self, value: int) -> "Writer":
        return self._pack(_U64, value)

    def i32(self, value: int) -> "Writer":
        return self._pack(_I32, value)

    def boolean(self, value: bool) -> "Writer":
        return self.u8(1 if value else 0)

    def raw(self, value: bytes) -> "Writer":
        self._buffer += value
        return self

    def blob(self, value: bytes) -> "Writer":
        if len(value) > U32_MAX:
            raise EncodingOverflow(f"byte sequence of {len(value)} bytes is too long")
        self.u32(len(value))
        return self.raw(value)

    def string(self, value: str) -> "Writer":
        return self.blob(value.encode("utf-8"))

    def count(self, n: int) -> "Writer":
        if n > U32_MAX:
            raise EncodingOverflow(f"list of {n} elements is too long")
        return self.u32(n)

    def getvalue(self) -> bytes:
        return bytes(self._buffer)


class Reader:
    """ Reads canonical fields back, raising DecodingError on malformed input """

    def __init__(self, data: bytes) -> None:
        self._data = memoryview(bytes(data))
        self._offset = 0

    def _take(self, n: int) -> bytes:
        end = self._offset + n
        if end > len(self._data):
            raise DecodingError(
                f"truncated input: wanted {n} bytes at offset {self._offset}, "
                f"{len(self._data) - self._offset} left")
        chunk = self._data[self._offset:end].tobytes()
        self._offset = end
        return chunk

    def _unpack(self, fmt: struct.Struct) -> int:
        return fmt.unpack(self._take(fmt.size))[0]

    def u8(self) -> int:
        return self._unpack(_U8)

    def u32(self) -> int:
        return self._unpack(_U32)

    def u64(self) -> int:
        return self._unpack(_U64)

    def i32(self) -> int:
        return self._unpack(_I32)

    def boolean(self) -> bool:
        value = self.u8()
        if value not in (0, 1):
            raise DecodingError(f"invalid boolean byte {value}")
        return value == 1

    def blob(self) -> bytes:
        return self._take(self.u32())

    def string(self) -> str:
        try:
            return self.blob().decode("utf-8")
        except UnicodeDecodeError as e:
            raise DecodingError("string field is not valid UTF-8") from e

    def items(self, read_item: Callable[["Reader"], T]) -> List[T]:
        n = self.u32()
        # every element takes at least one byte, reject absurd counts early
        if n > self.remaining():
            raise DecodingError(f"list claims {n} elements with {self.remaining()} bytes left")
        return [read_item(self) for _ in range(n)]

    def remaining(self) -> int:
        return len(self._data) - self._offset

    def finish(self) -> None:
        if self.remaining():
            raise DecodingError(f"{self.remaining()} trailing bytes")


def write_principal(w: Writer, p: Principal) -> Writer:
    return w.u32(p.uid).u32(p.pid)


def write_message(w: Writer, m: Message) -> Writer:
    return w.string(m.method).blob(m.payload).u64(m.timestamp)


def write_statement(w: Writer, s: Statement) -> Writer:
    write_principal(w, s.speaker)
    write_message(w, s.message)
    return w.blob(s.tag.bytes)


def write_chain(w: Writer, chain: CallChain) -> Writer:
    w.count(len(chain))
    for link in chain:
        write_principal(w, link)
    return w


def read_principal(r: Reader) -> Principal:
    return Principal(r.u32(), r.u32())


def read_message(r: Reader) -> Message:
    method = r.string()
    payload = r.blob()
    timestamp = r.u64()
    try:
        return Message(method, payload, timestamp)
    except ValueError as e:
        raise DecodingError(str(e)) from e


def read_statement(r: Reader) -> Statement:
    speaker = read_principal(r)
    message = read_message(r)
    try:
        tag = AuthTag(r.blob())
    except ValueError as e:
        raise DecodingError(str(e)) from e
    return Statement(speaker, message, tag)


def read_chain(r: Reader) -> CallChain:
    return CallChain(tuple(r.items(read_principal)))


@singledispatch
def canonical_encode(value) -> bytes:
    """
    Encode a core value into its canonical byte form

    Parameters:
    - value (Principal | Message | Statement | CallChain): the value to encode

    Returns:
    - bytes: the deterministic, injective encoding

    Raises:
    - EncodingOverflow: if a length does not fit 32 bits
    - TypeError: if the value is not a core type
    """
    raise TypeError(f"no canonical encoding for {type(value).__name__}")


@canonical_encode.register
def _(value: Principal) -> bytes:
    return write_principal(Writer(), value).getvalue()


@canonical_encode.register
def _(value: Message) -> bytes:
    return write_message(Writer(), value).getvalue()


@canonical_encode.register
def _(value: Statement) -> bytes:
    return write_statement(Writer(), value).getvalue()


@canonical_encode.register
def _(value: CallChain) -> bytes:
    return write_chain(Writer(), value).getvalue()


_READERS = {
    Principal: read_principal,
    Message: read_message,
    Statement: read_statement,
    CallChain: read_chain,
}


def canonical_decode(data: bytes, kind: Type[T]) -> T:
    """
    Decode bytes produced by canonical_encode

    Parameters:
    - data (bytes): the encoded value, with nothing before or after it
    - kind (Type): one of Principal, Message, Statement, CallChain

    Returns:
    - the decoded value

    Raises:
    - DecodingError: on truncated, trailing or invalid bytes
    """
    try:
        read = _READERS[kind]
    except KeyError:
        raise TypeError(f"no canonical decoding for {kind!r}") from None
    reader = Reader(data)
    value = read(reader)
    reader.finish()
    return value


def statement_signing_bytes(speaker: Principal, message: Message) -> bytes:
    """ The exact bytes a statement's tag covers """
    w = Writer()
    write_principal(w, speaker)
    write_message(w, message)
    return w.getvalue()


def encode_statements(statements) -> bytes:
    w = Writer()
    w.count(len(statements))
    for s in statements:
        write_statement(w, s)
    return w.getvalue()


def decode_statements(data: bytes) -> List[Statement]:
    r = Reader(data)
    statements = r.items(read_statement)
    r.finish()
    return statements

import numpy as np
import pytest

from provenance_ipc.core.encoding import (
    Reader,
    Writer,
    canonical_decode,
    canonical_encode,
    decode_statements,
    encode_statements,
    statement_signing_bytes,
)
from provenance_ipc.core.types import (
    AuthTag,
    CallChain,
    ChainDepthExceeded,
    DecodingError,
    EncodingOverflow,
    Message,
    Principal,
    Statement,
    chain_prepend,
)
from provenance_ipc.net_provider.types import RestatedStatement
from provenance_ipc.net_provider.wire import encode_statements_header
from provenance_ipc.scenarios.types import PurchaseOrder, event_fields_bytes

NOOP_STATEMENT = Statement(Principal(1, 2), Message("noop"), AuthTag(b"\x01" * 20))


def test_principal_golden(golden):
    assert canonical_encode(Principal(1, 2)) == golden["principal_1_2"]
    assert canonical_encode(Principal(0, 0)) == bytes(8)
    assert golden["principal_0_0"] == bytes(8)


def test_message_golden(golden):
    assert canonical_encode(Message("noop")) == golden["message_noop"]
    assert canonical_encode(Message("m", b"\x01\x02", 1)) == golden["message_m"]


def test_chain_golden(golden):
    chain = CallChain((Principal(1001, 100), Principal(1002, 101)))
    assert canonical_encode(chain) == golden["chain_two"]
    assert canonical_encode(CallChain.empty()) == golden["chain_empty"]


def test_statement_golden(golden):
    assert canonical_encode(NOOP_STATEMENT) == golden["statement_noop"]


def test_statement_is_speaker_then_message_then_tag(golden):
    encoded = canonical_encode(NOOP_STATEMENT)
    signed = statement_signing_bytes(NOOP_STATEMENT.speaker, NOOP_STATEMENT.message)
    assert encoded.startswith(signed)
    assert signed == golden["principal_1_2"] + golden["message_noop"]


def test_event_and_order_golden(golden):
    assert event_fields_bytes(120, 640, 1_700_000_000_000, False) == golden["event_fields"]
    assert PurchaseOrder("o1", 499, "ExampleApp").to_bytes() == golden["purchase_order"]


def test_statements_header_golden(golden):
    restated = RestatedStatement("A", canonical_encode(Message("m")), "01" * 20)
    assert encode_statements_header([restated]) == golden["statements_header"].hex()


@pytest.mark.parametrize("kind", ["principal_1_2", "message_m", "chain_two", "statement_noop"])
def test_golden_values_decode_back(golden, kind):
    types = {
        "principal_1_2": Principal,
        "message_m": Message,
        "chain_two": CallChain,
        "statement_noop": Statement,
    }
    value = canonical_decode(golden[kind], types[kind])
    assert canonical_encode(value) == golden[kind]


def test_truncated_input_is_rejected(golden):
    data = golden["statement_noop"]
    for end in range(len(data)):
        with pytest.raises(DecodingError):
            canonical_decode(data[:end], Statement)


def test_trailing_bytes_are_rejected(golden):
    with pytest.raises(DecodingError):
        canonical_decode(golden["principal_1_2"] + b"\x00", Principal)


def test_invalid_utf8_method_is_rejected():
    data = Writer().blob(b"\xff\xfe").blob(b"").u64(0).getvalue()
    with pytest.raises(DecodingError):
        canonical_decode(data, Message)


def test_bad_tag_length_is_a_decoding_error():
    data = (Writer().u32(1).u32(2).string("noop").blob(b"").u64(0)
            .blob(b"\x01" * 7).getvalue())
    with pytest.raises(DecodingError):
        canonical_decode(data, Statement)


def test_absurd_list_count_is_rejected():
    with pytest.raises(DecodingError):
        canonical_decode(bytes.fromhex("ffffffff"), CallChain)


def test_overflow():
    with pytest.raises(EncodingOverflow):
        Writer().u32(2**32)
    with pytest.raises(EncodingOverflow):
        Writer().u64(-1)


def test_reader_boolean_rejects_other_bytes():
    with pytest.raises(DecodingError):
        Reader(b"\x02").boolean()


def test_unsupported_type():
    with pytest.raises(TypeError):
        canonical_encode("not a core value")


def test_statement_list():
    second = Statement(Principal(3, 4), Message("m", b"x", 9), AuthTag(b"\x02" * 32))
    data = encode_statements([NOOP_STATEMENT, second])
    assert decode_statements(data) == [NOOP_STATEMENT, second]
    assert decode_statements(encode_statements([])) == []


RANDOM_VALUES = 100_000


def offsets(lengths):
    ends = np.cumsum(lengths).tolist()
    return zip([0] + ends[:-1], ends)


def random_principals(rng, n):
    ids = rng.integers(0, 2**32, size=(n, 2), dtype=np.uint64).tolist()
    return [Principal(uid, pid) for uid, pid in ids]


def random_messages(rng, n):
    method_lens = rng.integers(1, 12, size=n)
    payload_lens = rng.integers(0, 40, size=n)
    letters = rng.integers(97, 123, size=int(method_lens.sum()), dtype=np.uint8).tobytes().decode("ascii")
    pool = rng.integers(0, 256, size=int(payload_lens.sum()), dtype=np.uint8).tobytes()
    stamps = rng.integers(0, 2**63, size=n, dtype=np.uint64).tolist()
    return [Message(letters[m0:m1], pool[p0:p1], stamp)
            for (m0, m1), (p0, p1), stamp in zip(offsets(method_lens), offsets(payload_lens), stamps)]


def random_statements(rng, n):
    tag_lens = rng.choice([20, 32], size=n)
    pool = rng.integers(0, 256, size=int(tag_lens.sum()), dtype=np.uint8).tobytes()
    return [Statement(p, m, AuthTag(pool[t0:t1]))
            for p, m, (t0, t1) in zip(random_principals(rng, n), random_messages(rng, n), offsets(tag_lens))]


def random_chains(rng, n):
    lengths = rng.integers(0, 9, size=n)
    links = random_principals(rng, int(lengths.sum()))
    return [CallChain(tuple(links[a:b])) for a, b in offsets(lengths)]


@pytest.mark.parametrize("kind,generate", [
    (Principal, random_principals),
    (Message, random_messages),
    (Statement, random_statements),
    (CallChain, random_chains),
])
def test_random_values_are_injective_and_decode(kind, generate):
    rng = np.random.default_rng(2010)
    seen = {}
    for value in generate(rng, RANDOM_VALUES):
        encoded = canonical_encode(value)
        assert canonical_decode(encoded, kind) == value
        assert seen.setdefault(encoded, value) == value


def test_adjacent_fields_do_not_alias():
    # a byte moved from method to payload must change the encoding
    a = canonical_encode(Message("ab", b"c"))
    b = canonical_encode(Message("a", b"bc"))
    assert a != b


def test_chain_prepend():
    a, b, c = Principal(10001, 1), Principal(10002, 2), Principal(10003, 3)
    assert chain_prepend(CallChain.empty(), b).links == (b,)
    base = CallChain((a,))
    quoted = chain_prepend(base, b)
    assert quoted.links == (b, a)
    assert base.links == (a,)
    assert chain_prepend(chain_prepend(CallChain((c,)), a), b).links == (b, a, c)


def test_chain_prepend_depth_limit():
    full = CallChain(tuple(Principal(10000 + i, i) for i in range(64)))
    with pytest.raises(ChainDepthExceeded) as info:
        chain_prepend(full, Principal(1, 1))
    assert info.value.depth == 65
    assert len(chain_prepend(CallChain(full.links[:63]), Principal(1, 1))) == 64
    assert len(chain_prepend(full, Principal(1, 1), max_depth=None)) == 65


def test_value_invariants():
    with pytest.raises(ValueError):
        Principal(-1, 0)
    with pytest.raises(ValueError):
        Principal(0, 2**32)
    with pytest.raises(ValueError):
        AuthTag(b"\x00" * 16)
    with pytest.raises(ValueError):
        Message("big", bytes(1024 * 1024 + 1))
    assert Principal(1, 2) < Principal(1, 3) < Principal(2, 0)

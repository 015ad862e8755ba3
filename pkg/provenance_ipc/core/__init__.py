from .types import (
    DEFAULT_MAX_CHAIN_DEPTH,
    DEFAULT_MAX_PAYLOAD_BYTES,
    AppIdentity,
    AuthTag,
    CallChain,
    ChainDepthExceeded,
    DecodingError,
    EncodingOverflow,
    Message,
    PermissionToken,
    Principal,
    ProvenanceError,
    ResolvedChain,
    Statement,
    chain_prepend,
    permission_set,
)
from .encoding import (
    Reader,
    Writer,
    canonical_decode,
    canonical_encode,
    decode_statements,
    encode_statements,
    statement_signing_bytes,
)

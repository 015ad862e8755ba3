"""
MAC primitive behind every authenticator. HMAC-SHA1 by default, HMAC-SHA256
when configured; one algorithm per bus.
"""
from __future__ import annotations

import logging
import secrets
from dataclasses import dataclass, field
from enum import Enum

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import hashes, hmac

from .core.types import AuthTag, ProvenanceError

logger = logging.getLogger(__name__)

KEY_LENGTH = 32


class RngUnavailable(ProvenanceError):
    """ RngUnavailable is raised when the OS random source cannot be read """
    pass


class TagLengthMismatch(ProvenanceError):
    """ TagLengthMismatch is raised when a tag does not match the key's algorithm """
    pass


class MacAlgorithm(Enum):
    HMAC_SHA1 = "hmac-sha1"
    HMAC_SHA256 = "hmac-sha256"

    @property
    def digest_size(self) -> int:
        return 20 if self is MacAlgorithm.HMAC_SHA1 else 32

    def hash(self) -> hashes.HashAlgorithm:
        return hashes.SHA1() if self is MacAlgorithm.HMAC_SHA1 else hashes.SHA256()

    @classmethod
    def parse(cls, name: str) -> "MacAlgorithm":
        """
        Parse an algorithm name such as "hmac-sha1" or "HMAC_SHA256"

        Raises:
        - ValueError: for unknown names
        """
        normalized = name.strip().lower().replace("_", "-")
        for algorithm in cls:
            if algorithm.value == normalized:
                return algorithm
        raise ValueError(f"unknown MAC algorithm {name!r}")


@dataclass(frozen=True)
class SecretKey:
    """
    A principal's MAC key shared with the authority. The key bytes are
    excluded from repr so they never end up in a log line.
    """
    bytes: bytes = field(repr=False)
    algorithm: MacAlgorithm = MacAlgorithm.HMAC_SHA1

    def __post_init__(self) -> None:
        if len(self.bytes) != KEY_LENGTH:
            raise ValueError(f"secret keys are {KEY_LENGTH} bytes")


def keygen(algorithm: MacAlgorithm = MacAlgorithm.HMAC_SHA1) -> SecretKey:
    """
    Generate a fresh key from the OS CSPRNG

    Parameters:
    - algorithm (MacAlgorithm): the MAC the key will be used with

    Returns:
    - SecretKey: 32 random bytes bound to the algorithm

    Raises:
    - RngUnavailable: if the random source fails
    """
    try:
        raw = secrets.token_bytes(KEY_LENGTH)
    except (OSError, NotImplementedError) as e:
        raise RngUnavailable("secure random source unavailable") from e
    return SecretKey(raw, algorithm)


def hmac_digest(algorithm: MacAlgorithm, key: bytes, data: bytes) -> bytes:
    """ Standard HMAC over data with arbitrary key bytes """
    h = hmac.HMAC(key, algorithm.hash())
    h.update(data)
    return h.finalize()


def mac_create(key: SecretKey, data: bytes) -> AuthTag:
    """
    Compute the authentication tag of data under key

    Parameters:
    - key (SecretKey): the speaker's key
    - data (bytes): the bytes to authenticate

    Returns:
    - AuthTag: the HMAC of data, 20 or 32 bytes depending on the algorithm
    """
    return AuthTag(hmac_digest(key.algorithm, key.bytes, data))


def mac_verify(key: SecretKey, data: bytes, tag: AuthTag) -> bool:
    """
    Recompute the tag of data and compare it to tag in constant time

    Parameters:
    - key (SecretKey): the key the tag is expected under
    - data (bytes): the authenticated bytes
    - tag (AuthTag): the tag to check

    Returns:
    - bool: True iff the tag is the MAC of data under key

    Raises:
    - TagLengthMismatch: if the tag length is not the algorithm's digest size
    """
    if len(tag.bytes) != key.algorithm.digest_size:
        raise TagLengthMismatch(
            f"{key.algorithm.value} tags are {key.algorithm.digest_size} bytes, "
            f"got {len(tag.bytes)}")
    h = hmac.HMAC(key.bytes, key.algorithm.hash())
    h.update(data)
    try:
        h.verify(tag.bytes)
    except InvalidSignature:
        return False
    return True

"""
Runtime configuration. A config file is plain key=value text:

    # comments and blank lines are ignored
    mac_algorithm = hmac-sha256
    freshness_ms = 500
    max_chain_depth = 64
    transport = memory

Command line flags override values read from the file.
"""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Union

from .core.types import DEFAULT_MAX_CHAIN_DEPTH, DEFAULT_MAX_PAYLOAD_BYTES, ProvenanceError
from .crypto import MacAlgorithm

logger = logging.getLogger(__name__)

TRANSPORTS = ("memory", "tls")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


class ConfigError(ProvenanceError):
    """ ConfigError is raised for unreadable files, unknown keys and bad values """
    pass


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _parse_optional_int(value: str) -> Optional[int]:
    value = value.strip()
    if value.lower() in ("", "none"):
        return None
    return int(value)


_PARSERS = {
    "mac_algorithm": MacAlgorithm.parse,
    "freshness_ms": int,
    "max_chain_depth": int,
    "max_payload_bytes": int,
    "transport": lambda v: v.strip().lower(),
    "call_timeout_s": float,
    "seed": _parse_optional_int,
    "log_level": lambda v: v.strip().upper(),
    "sign_calls": _parse_bool,
}


@dataclass(frozen=True)
class Config:
    mac_algorithm: MacAlgorithm = MacAlgorithm.HMAC_SHA1
    freshness_ms: int = 500
    max_chain_depth: int = DEFAULT_MAX_CHAIN_DEPTH
    max_payload_bytes: int = DEFAULT_MAX_PAYLOAD_BYTES
    transport: str = "memory"
    call_timeout_s: float = 5.0
    seed: Optional[int] = None
    log_level: str = "WARNING"
    sign_calls: bool = True

    def __post_init__(self) -> None:
        if self.freshness_ms < 0:
            raise ConfigError("freshness_ms must be >= 0")
        if not 1 <= self.max_chain_depth:
            raise ConfigError("max_chain_depth must be >= 1")
        if not 0 <= self.max_payload_bytes <= DEFAULT_MAX_PAYLOAD_BYTES:
            raise ConfigError(f"max_payload_bytes must be within 0..{DEFAULT_MAX_PAYLOAD_BYTES}")
        if self.transport not in TRANSPORTS:
            raise ConfigError(f"transport must be one of {TRANSPORTS}")
        if self.call_timeout_s <= 0:
            raise ConfigError("call_timeout_s must be positive")
        if self.log_level not in LOG_LEVELS:
            raise ConfigError(f"log_level must be one of {LOG_LEVELS}")

    def override(self, **flags: Any) -> "Config":
        """
        Return a copy with the given fields replaced. Flags left as None
        keep the current value, so unset CLI options are harmless.
        """
        changes = {k: v for k, v in flags.items() if v is not None}
        unknown = set(changes) - {f.name for f in dataclasses.fields(self)}
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        if isinstance(changes.get("mac_algorithm"), str):
            changes["mac_algorithm"] = MacAlgorithm.parse(changes["mac_algorithm"])
        return dataclasses.replace(self, **changes)


def parse_config(text: str) -> Dict[str, Any]:
    """
    Parse key=value text into typed values

    Parameters:
    - text (str): the config file contents

    Returns:
    - Dict[str, Any]: parsed values keyed by Config field name

    Raises:
    - ConfigError: on syntax errors, unknown keys or invalid values
    """
    values: Dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as e:
            raise ConfigError(f"line {lineno}: bad value for {key}: {e}") from e
    return values


def load_config(path: Optional[Union[str, Path]] = None) -> Config:
    """
    Load a config file, or the defaults when path is None

    Raises:
    - ConfigError: if the file cannot be read or parsed
    """
    if path is None:
        return Config()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    values = parse_config(text)
    logger.debug("loaded %d config values from %s", len(values), path)
    return Config(**values)

from enum import Enum

from ..core.types import ProvenanceError


class Verdict(Enum):
    """ Outcome of asking the authority whether a statement was really spoken """
    VALID = "Valid"
    INVALID_TAG = "InvalidTag"
    UNKNOWN_SPEAKER = "UnknownSpeaker"

    @property
    def is_valid(self) -> bool:
        return self is Verdict.VALID


class UnknownPrincipal(ProvenanceError):
    """
    UnknownPrincipal is raised when a key is requested for a process
    that is not registered with the bus
    """
    pass


class UnresolvablePrincipal(ProvenanceError):
    """
    UnresolvablePrincipal is raised when a chain link has no directory
    entry. index names the first such link.
    """

    def __init__(self, index: int, principal=None) -> None:
        super().__init__(f"chain link {index} ({principal}) has no directory entry")
        self.index = index
        self.principal = principal

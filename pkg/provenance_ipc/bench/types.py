from dataclasses import dataclass, fields
from enum import Enum

from ..core.types import ProvenanceError

CSV_COLUMNS = ("name", "param", "trials", "mean_ns", "p50_ns", "p95_ns")


class BenchError(ProvenanceError):
    """ BenchError is raised for invalid benchmark parameters """
    pass


class ProvenanceMode(Enum):
    ON = "on"
    OFF = "off"
    BOTH = "both"


@dataclass(frozen=True)
class TrialProtocol:
    """
    How a point is measured: a discarded priming run, then runs of trials
    each. Runs are ranked by mean and the fastest and slowest are dropped
    when trim is set, so 10 runs keep the middle 8.
    """
    runs: int = 10
    trials: int = 100
    priming: int = 1
    trim: bool = True

    def __post_init__(self) -> None:
        if self.runs < 1 or self.trials < 1 or self.priming < 0:
            raise BenchError("runs and trials must be positive")
        if self.trim and self.runs < 3:
            raise BenchError("trimming needs at least 3 runs")


@dataclass(frozen=True)
class BenchResult:
    name: str
    # payload size in bytes, chain depth or event count depending on the benchmark
    param: int
    trials: int
    mean_ns: int
    p50_ns: int
    p95_ns: int

    def row(self):
        return tuple(getattr(self, f.name) for f in fields(self))

from __future__ import annotations

import csv
import logging
import time
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, TextIO, Union

import numpy as np

from .types import CSV_COLUMNS, BenchResult, TrialProtocol

logger = logging.getLogger(__name__)

Operation = Callable[[], object]


def payload_bytes(rng: np.random.Generator, size: int) -> bytes:
    """ size pseudo random bytes; identical for identical seeds """
    return rng.integers(0, 256, size=size, dtype=np.uint8).tobytes()


def _time_once(op: Operation) -> int:
    start = time.perf_counter_ns()
    op()
    return time.perf_counter_ns() - start


def measure_interleaved(ops: Dict[str, Operation], protocol: TrialProtocol) -> Dict[str, List[np.ndarray]]:
    """
    Time several operations trial by trial, alternating between them so
    slow drifts of the machine hit every operation alike

    Parameters:
    - ops (Dict[str, Operation]): operations by name
    - protocol (TrialProtocol): runs, trials and priming

    Returns:
    - Dict[str, List[np.ndarray]]: per operation, one array of ns timings per run
    """
    for _ in range(protocol.priming):
        for op in ops.values():
            op()
    samples: Dict[str, List[np.ndarray]] = {name: [] for name in ops}
    for _ in range(protocol.runs):
        run = {name: np.empty(protocol.trials, dtype=np.int64) for name in ops}
        for trial in range(protocol.trials):
            for name, op in ops.items():
                run[name][trial] = _time_once(op)
        for name in ops:
            samples[name].append(run[name])
    return samples


def measure(op: Operation, protocol: TrialProtocol) -> List[np.ndarray]:
    return measure_interleaved({"op": op}, protocol)["op"]


def summarize(name: str, param: int, runs: List[np.ndarray], trim: bool = True) -> BenchResult:
    """
    Reduce per-run timings to a BenchResult

    Parameters:
    - name (str): benchmark series name
    - param (int): payload size, depth or event count
    - runs (List[np.ndarray]): timings of each run
    - trim (bool): drop the runs with the lowest and highest mean

    Returns:
    - BenchResult: mean of the kept run means, percentiles over kept trials
    """
    means = np.array([r.mean() for r in runs])
    order = np.argsort(means, kind="stable")
    kept_idx = order[1:-1] if trim and len(runs) >= 3 else order
    kept = np.concatenate([runs[i] for i in kept_idx])
    p50, p95 = np.percentile(kept, [50, 95])
    return BenchResult(
        name=name,
        param=int(param),
        trials=int(kept.size),
        mean_ns=int(round(float(means[kept_idx].mean()))),
        p50_ns=int(round(float(p50))),
        p95_ns=int(round(float(p95))))


def write_csv(results: Iterable[BenchResult], out: Union[str, Path, TextIO]) -> None:
    """ Write results with the columns name,param,trials,mean_ns,p50_ns,p95_ns """
    if isinstance(out, (str, Path)):
        with open(out, "w", newline="", encoding="utf-8") as f:
            write_csv(results, f)
        logger.info("wrote %s", out)
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for result in results:
        writer.writerow(result.row())


def read_csv(path: Union[str, Path]) -> List[BenchResult]:
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    return [BenchResult(r["name"], int(r["param"]), int(r["trials"]), int(r["mean_ns"]),
                        int(r["p50_ns"]), int(r["p95_ns"])) for r in rows]


def series(results: Iterable[BenchResult], name: str) -> List[BenchResult]:
    """ The results of one series, ordered by param """
    return sorted((r for r in results if r.name == name), key=lambda r: r.param)


def make_rng(seed: Optional[int]) -> np.random.Generator:
    return np.random.default_rng(seed)

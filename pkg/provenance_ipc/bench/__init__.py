from .harness import read_csv, series, summarize, write_csv
from .suites import (
    SUITES,
    bench_ipc,
    bench_resolution,
    bench_rpc,
    bench_statements,
    bench_throughput,
)
from .types import CSV_COLUMNS, BenchError, BenchResult, ProvenanceMode, TrialProtocol

from typing import Iterable, List

from .bench.types import CSV_COLUMNS, BenchResult
from .colors import CYAN, GREEN, RED, YELLOW, paint
from .scenarios.types import EntryKind, Transcript

KIND_COLORS = {
    EntryKind.HOP: CYAN,
    EntryKind.VERDICT: YELLOW,
    EntryKind.SERVER: GREEN,
    EntryKind.ERROR: RED,
}


def format_ns(ns: int) -> str:
    """
    Human readable duration

    Parameters:
    - ns (int): duration in nanoseconds

    Returns:
    - str: e.g. "812 ns", "43.1 us" or "6.2 ms"
    """
    if ns >= 10_000_000:
        return f"{ns / 1e6:.1f} ms"
    if ns >= 10_000:
        return f"{ns / 1e3:.1f} us"
    return f"{ns} ns"


def render_transcript(transcript: Transcript, color: bool = True) -> List[str]:
    """
    Render a scenario transcript as terminal lines, one per entry, with a
    header naming the scenario and a footer with the outcome

    Parameters:
    - transcript (Transcript): the scenario run
    - color (bool): use ANSI colors

    Returns:
    - List[str]: the lines, without trailing newlines
    """
    lines = [paint(f"== {transcript.scenario} ({transcript.variant})", CYAN, color, bold=True)]
    width = max((len(e.actor) for e in transcript.entries), default=0)
    for entry in transcript.entries:
        tag = paint(f"{entry.kind.value:<7}", KIND_COLORS[entry.kind], color)
        lines.append(f"  {tag} {entry.actor:<{width}}  {entry.text}")
    lines.append(f"  frames sent: {transcript.frames_sent}")
    verdict = "as expected" if transcript.expected else "NOT as expected"
    lines.append(paint(f"outcome: {transcript.outcome} ({verdict})",
                       GREEN if transcript.expected else RED, color, bold=True))
    return lines


def render_bench_table(results: Iterable[BenchResult], color: bool = True) -> List[str]:
    """ Benchmark results as an aligned table, durations humanized """
    rows = [CSV_COLUMNS]
    for r in results:
        rows.append((r.name, str(r.param), str(r.trials),
                     format_ns(r.mean_ns), format_ns(r.p50_ns), format_ns(r.p95_ns)))
    widths = [max(len(row[i]) for row in rows) for i in range(len(CSV_COLUMNS))]
    lines = []
    for index, row in enumerate(rows):
        line = "  ".join(cell.ljust(w) if i == 0 else cell.rjust(w)
                         for i, (cell, w) in enumerate(zip(row, widths)))
        lines.append(paint(line, CYAN, color, bold=True) if index == 0 else line)
    return lines

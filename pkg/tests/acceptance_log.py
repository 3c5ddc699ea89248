"""Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
import time

LINES: dict[int, str] = {}
SESSION_START = time.perf_counter()


def record(n: int, ok: bool, detail: str) -> str:
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    LINES[n] = line
    print(line)
    return line

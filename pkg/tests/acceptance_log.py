"""Collects one summary line per acceptance criterion for the terminal report."""

LINES: dict[int, str] = {}


def record(number: int, passed: bool, detail: str, seconds: float) -> str:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail} ({seconds:.1f} s)"
    LINES[number] = line
    print(line)
    return line

"""Collects one PASS/FAIL line per acceptance criterion for the run summary."""

LINES: list[str] = []


def check(criterion: str, ok: bool, detail: str = "") -> None:
    line = f"{'PASS' if ok else 'FAIL'}  {criterion}" + (f"  [{detail}]" if detail else "")
    LINES.append(line)
    print(line)
    assert ok, line

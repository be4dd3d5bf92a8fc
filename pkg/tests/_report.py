"""Collects one pass/fail line per acceptance criterion for the terminal summary."""
LINES = []


def record(number, title, ok, detail, seconds):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail} [{seconds:.1f} s]"
    LINES.append((number, line))
    print(line)
    return ok

"""Collects per-criterion outcomes so they print as one PASS/FAIL line each."""
from collections import OrderedDict

RESULTS = OrderedDict()


def record(criterion, ok, detail):
    RESULTS.setdefault(criterion, []).append((bool(ok), detail))
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    print(line)
    return ok


def summary_lines():
    lines = []
    for criterion, parts in RESULTS.items():
        ok = all(p for p, _ in parts)
        detail = "; ".join(d for _, d in parts)
        lines.append(f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}")
    return lines

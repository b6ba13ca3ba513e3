"""Shared record of acceptance outcomes, printed at the end of the session."""

LINES: list[str] = []


def record(number: int, title: str, passed: bool, elapsed: float, limit=None, detail: str = "",
           status=None) -> str:
    status = status or ("PASS" if passed else "FAIL")
    timing = f"{elapsed:.2f}s" + (f" (limit {limit:g}s)" if limit is not None else "")
    line = f"[{status}] criterion {number:>2} {title}: {detail} [{timing}]"
    LINES.append(line)
    print(line)
    return line

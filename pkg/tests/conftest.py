import os
from pathlib import Path

import pytest

from zetamoments import zeros

CACHE = Path(os.environ.get("ZML_CACHE", Path(__file__).parent / "data" / "cache"))

_verdicts: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def verdict():
    """Record one pass/fail line for an acceptance criterion."""

    def record(criterion: int, ok: bool, detail: str):
        _verdicts[criterion] = (bool(ok), detail)
        return ok

    return record


def cached_zeros(name: str, t_max, **kw) -> zeros.ZeroList:
    """Zeros up to t_max, computed once and kept under the cache directory."""
    path = CACHE / name
    if not path.exists():
        CACHE.mkdir(parents=True, exist_ok=True)
        zl = zeros.find_zeros(t_max, **kw)
        tmp = path.with_suffix(".part")
        zeros.write_zeros(zl, tmp)
        tmp.replace(path)
    return zeros.load_zeros(path, t_max)


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_verdicts):
        ok, detail = _verdicts[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")

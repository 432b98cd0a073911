"""Shared fixtures plus the acceptance-criterion result reporter."""

from __future__ import annotations

import contextlib
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parents[1]
TOY_DIR = REPO_ROOT / "data" / "toy"

_RESULTS: dict[int, str] = {}


@contextlib.contextmanager
def criterion(number: int, name: str):
    """Record one pass/fail/skip line per acceptance criterion."""
    try:
        yield
    except pytest.skip.Exception:
        _RESULTS[number] = f"criterion {number} ({name}): SKIP"
        raise
    except BaseException:
        _RESULTS[number] = f"criterion {number} ({name}): FAIL"
        raise
    _RESULTS[number] = f"criterion {number} ({name}): PASS"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        terminalreporter.write_line(_RESULTS[number])


@pytest.fixture(scope="session")
def toy_files() -> dict[str, Path]:
    return {
        "users": TOY_DIR / "users.jsonl",
        "items": TOY_DIR / "items.jsonl",
        "reviews": TOY_DIR / "reviews.jsonl",
    }

"""Small shared helpers: atomic writes and line-delimited JSON files."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Iterator


def write_atomic(path: str | Path, text: str) -> None:
    """Write text via a temp file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def dump_json_line(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False)


def write_jsonl_atomic(path: str | Path, records: Iterable[Any]) -> int:
    """Write one JSON object per line. Returns the record count."""
    lines = [dump_json_line(rec) for rec in records]
    body = "\n".join(lines)
    write_atomic(path, body + "\n" if lines else "")
    return len(lines)


def read_jsonl(path: str | Path) -> Iterator[tuple[int, Any]]:
    """Yield (line_number, parsed_object) pairs; blank lines are skipped."""
    from .errors import MalformedRecord

    path = Path(path)
    with path.open("r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, 1):
            stripped = raw.strip()
            if not stripped:
                continue
            try:
                yield lineno, json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(lineno, f"invalid JSON: {exc}", source=str(path)) from exc

"""Dataset records and their JSONL serialization."""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Iterable

STATUSES = ("active", "filtered-out", "unevaluated")


class RecordError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


@dataclass(frozen=True)
class SampleRecord:
    id: str
    iteration: int
    diagram: dict[str, Any]
    question: str
    ground_truth: str
    ground_truth_value: float
    reasoning: str
    target: dict[str, Any] | None = None
    svg_path: str | None = None
    parent_id: str | None = None
    subproblem_ids: tuple[str, ...] = ()
    principles: tuple[str, ...] = ()
    aux_count: int = 0
    chain_length: int = 1
    difficulty: int = 1
    reasoning_length: int = 0
    error_rate: float | None = None
    error_k: int | None = None
    model_tag: str | None = None
    status: str = "active"
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.status not in STATUSES:
            raise RecordError(f"unknown status {self.status!r}")
        object.__setattr__(self, "subproblem_ids", tuple(self.subproblem_ids))
        object.__setattr__(self, "principles", tuple(self.principles))

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["subproblem_ids"] = list(self.subproblem_ids)
        out["principles"] = list(self.principles)
        return out

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "SampleRecord":
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - names)
        if unknown:
            raise RecordError(f"unknown record fields {unknown}")
        try:
            return cls(**raw)
        except TypeError as exc:
            raise RecordError(str(exc)) from None


def dumps(record: SampleRecord) -> str:
    return json.dumps(record.to_dict(), ensure_ascii=False, sort_keys=False)


def atomic_write_text(path: str | Path, text: str) -> Path:
    """Write via a temp file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_jsonl(path: str | Path, records: Iterable[SampleRecord]) -> Path:
    return atomic_write_text(path, "".join(dumps(r) + "\n" for r in records))


def read_jsonl_lenient(path: str | Path) -> tuple[list[SampleRecord], list[RecordError]]:
    """Parse every line; malformed lines become errors carrying line numbers."""
    records: list[SampleRecord] = []
    errors: list[RecordError] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
                if not isinstance(raw, dict):
                    raise RecordError("record must be a JSON object")
                records.append(SampleRecord.from_dict(raw))
            except (json.JSONDecodeError, RecordError) as exc:
                errors.append(RecordError(str(exc).split(": ", 1)[-1] if isinstance(exc, RecordError) else exc.msg, lineno))
    return records, errors


def read_jsonl(path: str | Path) -> list[SampleRecord]:
    records, errors = read_jsonl_lenient(path)
    if errors:
        raise errors[0]
    return records


def write_json(path: str | Path, payload: Any) -> Path:
    return atomic_write_text(path, json.dumps(payload, indent=2, ensure_ascii=False, sort_keys=True) + "\n")

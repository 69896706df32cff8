"""Append-only NDJSON event log; replaying it rebuilds derived state exactly.

Records carry monotone sequence numbers and a schema version.  Canonical JSON
(sorted keys, tight separators) keeps serialization byte-stable, which makes
state hashing and replay comparison meaningful.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Iterable, Iterator

SCHEMA_VERSION = 1


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def state_hash(obj: Any) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


class EventLog:
    """In-memory record list with an optional NDJSON file sink."""

    def __init__(self, path: str | Path | None = None):
        self.records: list[dict] = []
        self._path = Path(path) if path else None
        self._fh = open(self._path, "a", encoding="utf-8") if self._path else None

    def append(self, kind: str, payload: dict, day: int | None = None) -> int:
        record = {
            "seq": len(self.records),
            "schema": SCHEMA_VERSION,
            "kind": kind,
            "day": day,
            "payload": payload,
        }
        # Serialize eagerly so unencodable payloads fail at the append site.
        line = canonical_json(record)
        self.records.append(record)
        if self._fh:
            self._fh.write(line + "\n")
            self._fh.flush()
        return record["seq"]

    def of_kind(self, *kinds: str) -> Iterator[dict]:
        wanted = set(kinds)
        return (r for r in self.records if r["kind"] in wanted)

    def close(self) -> None:
        if self._fh:
            self._fh.close()
            self._fh = None

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[dict]:
        return iter(self.records)


def load_records(path: str | Path) -> list[dict]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def dump_records(records: Iterable[dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(canonical_json(record) + "\n")

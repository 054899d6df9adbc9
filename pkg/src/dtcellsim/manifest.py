"""Run provenance: which command ran, with which config bytes and seed.

Every CLI command writes one of these next to its outputs so any artifact
can be traced back to the exact configuration file and seed that made it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunManifest:
    command: str
    seed: int
    config_hash: str | None = None
    created: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat())
    artifacts: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def add_artifact(self, path) -> None:
        self.artifacts.append(str(path))

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.__dict__, indent=2) + "\n")
        return path

    @classmethod
    def load(cls, path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text()))

"""Run manifests and canonical JSON output.

Every artifact-producing run leaves a ``manifest.json`` next to its
outputs, written atomically (temp file + rename) so a crash never leaves
a half manifest. Canonical mode drops timestamps and rounds floats to
six significant digits, which keeps golden-file comparisons stable
across platforms.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from . import __version__


def canonicalize(obj, floats: bool = True):
    """Recursively sort mappings and round floats to 6 significant digits."""
    if isinstance(obj, dict):
        return {str(k): canonicalize(v, floats) for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))}
    if isinstance(obj, (list, tuple)):
        return [canonicalize(v, floats) for v in obj]
    if floats and isinstance(obj, float):
        return float(f"{obj:.6g}")
    return obj


def dump_json(obj, canonical: bool = False) -> str:
    """Serialize for output files; canonical mode is byte-stable."""
    data = canonicalize(obj, floats=canonical)
    return json.dumps(data, sort_keys=True, ensure_ascii=False, indent=1) + "\n"


def write_atomic(path: str | Path, content: str | bytes) -> None:
    """Write via a temp file in the same directory, then rename."""
    path = Path(path)
    mode = "wb" if isinstance(content, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".tmp")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8"})) as f:
            f.write(content)
        os.chmod(tmp, 0o644)  # mkstemp defaults to 0600
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    subcommand: str
    config: dict
    seed: Optional[int] = None
    input_digests: dict = field(default_factory=dict)
    outcome: str = "running"  # "ok" | "partial" | "error: ..."
    tool_version: str = __version__
    started_at: Optional[str] = field(default_factory=_now_iso)
    finished_at: Optional[str] = None

    def add_input(self, path: str | Path) -> None:
        self.input_digests[str(path)] = file_digest(path)

    def finish(self, outcome: str) -> None:
        self.outcome = outcome
        self.finished_at = _now_iso()

    def write(self, out_dir: str | Path, canonical: bool = False) -> Path:
        """Persist as <out_dir>/manifest.json; canonical mode omits
        timestamps so identical runs produce identical bytes."""
        body = {
            "tool_version": self.tool_version,
            "subcommand": self.subcommand,
            "config": self.config,
            "seed": self.seed,
            "input_digests": dict(sorted(self.input_digests.items())),
            "outcome": self.outcome,
        }
        if not canonical:
            body["started_at"] = self.started_at
            body["finished_at"] = self.finished_at
        path = Path(out_dir) / "manifest.json"
        write_atomic(path, dump_json(body, canonical=canonical))
        return path

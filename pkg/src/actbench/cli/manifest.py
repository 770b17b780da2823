"""
Provenance record written next to every command's outputs.
"""

import json
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional, Union

from .. import __version__
from ..utils.file_utils import ensure_directory, get_file_info

MANIFEST_NAME = "manifest.json"


def _now() -> str:
    return datetime.now().astimezone().isoformat(timespec="seconds")


@dataclass
class RunManifest:
    command: str
    arguments: Dict[str, Any]
    seed: Optional[int] = None
    platform_label: str = ""
    device: str = ""
    started_at: str = field(default_factory=_now)
    finished_at: Optional[str] = None
    tool_version: str = __version__
    outputs: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    complete: bool = True

    def add_output(self, key: str, path: Union[str, Path]) -> None:
        path = Path(path)
        info = get_file_info(path)
        self.outputs[key] = {
            "path": path.name,
            "sha256": info["sha256"],
            "size_bytes": info["size_bytes"],
        }

    def finish(self) -> None:
        self.finished_at = _now()

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def write(self, out_dir: Union[str, Path]) -> Path:
        if self.finished_at is None:
            self.finish()
        path = ensure_directory(out_dir) / MANIFEST_NAME
        path.write_text(json.dumps(self.to_dict(), indent=2, default=str), encoding="utf-8")
        return path


def write_json_output(data: Dict[str, Any], path: Union[str, Path]) -> Path:
    """Write a JSON output that points back at the run manifest."""
    path = Path(path)
    payload = {"manifest": MANIFEST_NAME, **data}
    path.write_text(json.dumps(payload, indent=2, default=str), encoding="utf-8")
    return path

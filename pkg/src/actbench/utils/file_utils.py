"""
File handling utilities.
"""

import gzip
import hashlib
from pathlib import Path
from typing import Any, Dict, Union

PathLike = Union[str, Path]

GZIP_MAGIC = b"\x1f\x8b"


def ensure_directory(dir_path: PathLike) -> Path:
    """Ensure directory exists, create if necessary."""
    path = Path(dir_path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def read_maybe_gzip(file_path: PathLike) -> bytes:
    """Read a file, transparently inflating it when it starts with the gzip magic."""
    with open(file_path, "rb") as f:
        raw = f.read()
    if raw[:2] == GZIP_MAGIC:
        return gzip.decompress(raw)
    return raw


def sha256_of(file_path: PathLike, chunk_size: int = 1 << 20) -> str:
    """Hex SHA-256 digest of a file."""
    digest = hashlib.sha256()
    with open(file_path, "rb") as f:
        for chunk in iter(lambda: f.read(chunk_size), b""):
            digest.update(chunk)
    return digest.hexdigest()


def get_file_info(file_path: PathLike) -> Dict[str, Any]:
    """Get basic file information."""
    path = Path(file_path)

    info: Dict[str, Any] = {
        "name": path.name,
        "size_bytes": 0,
        "exists": path.exists(),
        "is_file": False,
        "sha256": None,
    }

    if path.exists():
        info["is_file"] = path.is_file()
        if path.is_file():
            info["size_bytes"] = path.stat().st_size
            info["sha256"] = sha256_of(path)

    return info


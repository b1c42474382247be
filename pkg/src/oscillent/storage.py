"""On-disk formats: kernel cache, binary phase-space samples, JSON result records."""
from __future__ import annotations

import hashlib
import json
import os
import struct
from pathlib import Path

import numpy as np

from .core import OscillentError, to_json

__all__ = [
    "CacheError",
    "KernelCache",
    "default_cache_dir",
    "content_hash",
    "write_samples",
    "read_samples",
    "write_result",
    "read_result",
]

CACHE_ENV = "OSCILLENT_CACHE"
_SAMPLE_MAGIC = b"OSCSMP01"
_HEADER = struct.Struct("<8s32sQI")  # magic, params sha256, rows, columns


class CacheError(OscillentError):
    pass


def default_cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV, "./.oscillent-cache"))


def content_hash(**parts) -> str:
    """sha256 of the canonical JSON of ``parts``."""
    blob = json.dumps(parts, sort_keys=True, separators=(",", ":"), default=_plain)
    return hashlib.sha256(blob.encode()).hexdigest()


def _plain(obj):
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot hash {type(obj).__name__}")


class KernelCache:
    """Matrices stored as ``<key>.npy`` with a ``<key>.json`` sidecar.

    The sidecar carries the sha256 of the array bytes; entries whose
    payload or sidecar fails to load or verify are deleted and treated as
    misses.
    """

    def __init__(self, root=None):
        self.root = Path(root) if root is not None else default_cache_dir()

    def key(self, **parts) -> str:
        return content_hash(**parts)

    def _paths(self, key):
        return self.root / f"{key}.npy", self.root / f"{key}.json"

    def load(self, key):
        npy, side = self._paths(key)
        if not (npy.exists() and side.exists()):
            return None
        try:
            meta = json.loads(side.read_text())
            arr = np.load(npy, allow_pickle=False)
            ok = meta.get("key") == key and meta.get("sha256") == hashlib.sha256(arr.tobytes()).hexdigest()
        except (OSError, ValueError):
            ok = False
        if not ok:
            self.invalidate(key)
            return None
        return arr, meta.get("metadata", {})

    def store(self, key, arr, metadata=None):
        self.root.mkdir(parents=True, exist_ok=True)
        npy, side = self._paths(key)
        arr = np.ascontiguousarray(arr, dtype=float)
        tmp = npy.with_suffix(".tmp.npy")
        np.save(tmp, arr, allow_pickle=False)
        os.replace(tmp, npy)
        side.write_text(
            to_json({"key": key, "shape": list(arr.shape), "sha256": hashlib.sha256(arr.tobytes()).hexdigest(),
                     "metadata": metadata or {}})
        )

    def invalidate(self, key):
        for path in self._paths(key):
            path.unlink(missing_ok=True)


# -- phase-space samples -----------------------------------------------------


def write_samples(path, samples, params) -> None:
    """Little-endian float64 rows after a fixed header with the params hash."""
    arr = np.ascontiguousarray(samples, dtype="<f8")
    if arr.ndim != 2:
        raise ValueError("samples must be a 2-d array")
    digest = hashlib.sha256(content_hash(params=params).encode()).digest()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_SAMPLE_MAGIC, digest, arr.shape[0], arr.shape[1]))
        fh.write(arr.tobytes())


def read_samples(path, params=None):
    """Inverse of :func:`write_samples`; with ``params`` the stored hash must match."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise CacheError(f"{path}: truncated header")
        magic, digest, rows, cols = _HEADER.unpack(head)
        if magic != _SAMPLE_MAGIC:
            raise CacheError(f"{path}: not a sample file")
        if params is not None and digest != hashlib.sha256(content_hash(params=params).encode()).digest():
            raise CacheError(f"{path}: samples were written for different parameters")
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != rows * cols:
        raise CacheError(f"{path}: expected {rows * cols} values, found {data.size}")
    return data.reshape(rows, cols).astype(float)


# -- result records --------------------------------------------------------------


def write_result(path, result) -> None:
    Path(path).write_text(to_json(result) + "\n")


def read_result(path) -> dict:
    return json.loads(Path(path).read_text())

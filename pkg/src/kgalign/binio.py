"""Single-file binary snapshot container.

Layout: 8-byte magic, u64 header length, JSON header (kind, version,
metadata, array manifest), then the raw little-endian array payloads in
manifest order. Writing is fully deterministic for identical content, so
snapshot files can be compared byte for byte.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

MAGIC = b"KGALIGN\x00"

__all__ = ["write_snapshot", "read_snapshot", "SnapshotError", "MAGIC"]


class SnapshotError(RuntimeError):
    pass


def write_snapshot(path: str | Path, kind: str, version: int, meta: dict,
                   arrays: dict[str, np.ndarray]) -> None:
    manifest = []
    payloads = []
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        if arr.dtype.byteorder == ">":
            arr = arr.astype(arr.dtype.newbyteorder("<"))
        manifest.append({"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape)})
        payloads.append(arr.tobytes())
    header = json.dumps(
        {"kind": kind, "version": version, "meta": meta, "arrays": manifest},
        sort_keys=True, separators=(",", ":"), ensure_ascii=False,
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(len(header).to_bytes(8, "little"))
        fh.write(header)
        for blob in payloads:
            fh.write(blob)


def read_snapshot(path: str | Path, kind: str | None = None) -> tuple[dict, dict[str, np.ndarray]]:
    """Returns (header, arrays); header carries kind/version/meta."""
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise SnapshotError(f"{path}: not a kgalign snapshot (bad magic)")
        header_len = int.from_bytes(fh.read(8), "little")
        header = json.loads(fh.read(header_len).decode("utf-8"))
        if kind is not None and header.get("kind") != kind:
            raise SnapshotError(
                f"{path}: snapshot kind {header.get('kind')!r}, expected {kind!r}")
        arrays = {}
        for entry in header["arrays"]:
            dtype = np.dtype(entry["dtype"])
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            blob = fh.read(count * dtype.itemsize)
            if len(blob) != count * dtype.itemsize:
                raise SnapshotError(f"{path}: truncated array {entry['name']!r}")
            arrays[entry["name"]] = np.frombuffer(blob, dtype=dtype).reshape(shape).copy()
    return header, arrays

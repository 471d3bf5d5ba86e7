"""Portable named-tensor container for encoder/decoder parameters.

Binary layout (all little-endian):

    magic "ADWB" | version u32 (=1) | manifest length u64 | manifest JSON
    | zero padding to a 64-byte boundary | raw float32 tensor data

The manifest is a JSON object: a "tensors" array of
{name, dtype:"f32", shape, offset, nbytes} entries plus a "preprocess"
object; extra keys (e.g. the network architecture) ride along untouched.
Offsets are relative to the start of the data section.
"""

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError

MAGIC = b"ADWB"
VERSION = 1
_ALIGN = 64


@dataclass
class WeightsBundle:
    """Ordered name -> float32 array mapping plus format metadata."""

    tensors: dict
    preprocess: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, arr in self.tensors.items():
            self.tensors[name] = np.ascontiguousarray(arr, dtype=np.float32)


def _manifest_for(bundle):
    entries = []
    offset = 0
    for name, arr in bundle.tensors.items():
        nbytes = arr.size * 4
        entries.append(
            {"name": name, "dtype": "f32", "shape": list(arr.shape), "offset": offset, "nbytes": nbytes}
        )
        offset += nbytes
    manifest = {"tensors": entries, "preprocess": bundle.preprocess}
    manifest.update(bundle.extra)
    return manifest, offset


def save_weights(bundle, path):
    """Write the bundle; loading it back is bit-exact."""
    manifest, total = _manifest_for(bundle)
    blob = json.dumps(manifest).encode("utf-8")
    header = MAGIC + struct.pack("<I", VERSION) + struct.pack("<Q", len(blob))
    prefix_len = len(header) + len(blob)
    padding = (-prefix_len) % _ALIGN
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(blob)
        fh.write(b"\x00" * padding)
        for arr in bundle.tensors.values():
            fh.write(arr.astype("<f4", copy=False).tobytes())


def _parse_header(raw):
    if len(raw) < 16:
        raise FormatError("file too short for header")
    if raw[:4] != MAGIC:
        raise FormatError(f"bad magic {raw[:4]!r}, expected {MAGIC!r}")
    (version,) = struct.unpack("<I", raw[4:8])
    if version != VERSION:
        raise FormatError(f"unsupported version {version}, expected {VERSION}")
    (manifest_len,) = struct.unpack("<Q", raw[8:16])
    if 16 + manifest_len > len(raw):
        raise FormatError("truncated file: manifest extends past end of file")
    try:
        manifest = json.loads(raw[16 : 16 + manifest_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"manifest is not valid UTF-8 JSON: {exc}") from exc
    data_start = 16 + manifest_len
    data_start += (-data_start) % _ALIGN
    return manifest, data_start


def _validate_manifest(manifest, data_size):
    if not isinstance(manifest, dict) or "tensors" not in manifest:
        raise FormatError("manifest missing 'tensors' array")
    if "preprocess" not in manifest or not isinstance(manifest["preprocess"], dict):
        raise FormatError("manifest missing 'preprocess' object")
    seen = set()
    spans = []
    for entry in manifest["tensors"]:
        for key in ("name", "dtype", "shape", "offset", "nbytes"):
            if key not in entry:
                raise FormatError(f"tensor entry missing field '{key}'")
        name = entry["name"]
        if name in seen:
            raise FormatError(f"duplicate tensor name '{name}'")
        seen.add(name)
        if entry["dtype"] != "f32":
            raise FormatError(f"tensor '{name}': unsupported dtype '{entry['dtype']}'")
        count = int(np.prod(entry["shape"], dtype=np.int64)) if entry["shape"] else 1
        if count * 4 != entry["nbytes"]:
            raise FormatError(
                f"tensor '{name}': shape {entry['shape']} implies {count * 4} bytes, manifest says {entry['nbytes']}"
            )
        if entry["offset"] < 0 or entry["offset"] + entry["nbytes"] > data_size:
            raise FormatError(f"tensor '{name}': data range exceeds file (truncated?)")
        spans.append((entry["offset"], entry["offset"] + entry["nbytes"], name))
    spans.sort()
    for (s0, e0, n0), (s1, e1, n1) in zip(spans, spans[1:]):
        if s1 < e0:
            raise FormatError(f"tensors '{n0}' and '{n1}' have overlapping offsets")


def load_weights(path):
    """Read and fully validate a bundle; FormatError names the violation."""
    with open(path, "rb") as fh:
        raw = fh.read()
    manifest, data_start = _parse_header(raw)
    data = raw[data_start:]
    _validate_manifest(manifest, len(data))
    tensors = {}
    for entry in manifest["tensors"]:
        count = int(np.prod(entry["shape"], dtype=np.int64)) if entry["shape"] else 1
        arr = np.frombuffer(data, dtype="<f4", count=count, offset=entry["offset"])
        tensors[entry["name"]] = arr.reshape(entry["shape"]).copy()
    extra = {k: v for k, v in manifest.items() if k not in ("tensors", "preprocess")}
    return WeightsBundle(tensors=tensors, preprocess=manifest["preprocess"], extra=extra)


def inspect_weights(path):
    """Manifest entries in file order, for the CLI inspect verb."""
    with open(path, "rb") as fh:
        raw = fh.read()
    manifest, _ = _parse_header(raw)
    return manifest

"""Binary model files.

Layout: an unsigned 64-bit little-endian header length, a UTF-8 JSON header,
then every tensor as contiguous little-endian float64 in header order.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .model import Model, ModelSpec, expected_shapes

FORMAT = "gaitlab-cnn"
VERSION = 1
_LEN = struct.Struct("<Q")


class ModelFormatError(ValueError):
    pass


def to_bytes(model: Model) -> bytes:
    tensors, offset = [], 0
    blobs = []
    for kind, store in (("param", model.params), ("buffer", model.buffers)):
        for name in sorted(store):
            arr = np.ascontiguousarray(store[name], dtype="<f8")
            tensors.append({"name": name, "kind": kind, "shape": list(arr.shape),
                            "offset": offset, "count": int(arr.size)})
            offset += arr.size
            blobs.append(arr.tobytes())
    header = {"format": FORMAT, "version": VERSION, "spec": model.spec.to_dict(),
              "frozen": sorted(model.frozen), "tensors": tensors}
    head = json.dumps(header, sort_keys=True).encode()
    return _LEN.pack(len(head)) + head + b"".join(blobs)


def from_bytes(raw: bytes) -> Model:
    if len(raw) < _LEN.size:
        raise ModelFormatError("file too short for a header")
    (n,) = _LEN.unpack_from(raw)
    if len(raw) < _LEN.size + n:
        raise ModelFormatError("truncated header")
    try:
        header = json.loads(raw[_LEN.size:_LEN.size + n])
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"unreadable header: {exc}") from None
    if header.get("format") != FORMAT:
        raise ModelFormatError(f"not a {FORMAT} file")
    if header.get("version") != VERSION:
        raise ModelFormatError(f"unsupported version {header.get('version')}, expected {VERSION}")
    try:
        spec = ModelSpec.from_dict(header["spec"])
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"invalid spec: {exc}") from None
    payload = np.frombuffer(raw, dtype="<f8", offset=_LEN.size + n) \
        if (len(raw) - _LEN.size - n) % 8 == 0 else None
    if payload is None:
        raise ModelFormatError("payload is not a whole number of float64 values")
    want_p, want_b = expected_shapes(spec)
    params, buffers = {}, {}
    for t in header["tensors"]:
        name, shape = t["name"], tuple(t["shape"])
        want = (want_p if t["kind"] == "param" else want_b).get(name)
        if want is None:
            raise ModelFormatError(f"unexpected tensor {name!r}")
        if shape != want or t["count"] != int(np.prod(shape)):
            raise ModelFormatError(f"shape mismatch for tensor {name!r}: file has {list(shape)}, "
                                   f"spec needs {list(want)}")
        stop = t["offset"] + t["count"]
        if t["offset"] < 0 or stop > payload.size:
            raise ModelFormatError(f"truncated payload: tensor {name!r} ends past the data")
        (params if t["kind"] == "param" else buffers)[name] = \
            payload[t["offset"]:stop].reshape(shape).astype(np.float64)
    missing = (set(want_p) - set(params)) | (set(want_b) - set(buffers))
    if missing:
        raise ModelFormatError(f"missing tensors {sorted(missing)}")
    if sum(t["count"] for t in header["tensors"]) != payload.size:
        raise ModelFormatError("payload size does not match the header")
    return Model(spec, params, buffers, set(header.get("frozen", [])))


def save_model(model: Model, path) -> None:
    Path(path).write_bytes(to_bytes(model))


def load_model(path) -> Model:
    return from_bytes(Path(path).read_bytes())

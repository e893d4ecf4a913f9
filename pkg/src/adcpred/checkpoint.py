"""Binary checkpoint serialization.

Layout: magic "ADCN", format version (u32 LE), CRC-32 of the payload
(u32 LE), then the payload: five length-prefixed sections (u32 LE
length + bytes). Section 0 is a UTF-8 JSON header (config, feature
layout, DAR scaler, history, activation slope, parameter shapes);
sections 1-4 are the raw little-endian float64 parameter buffers in
the order hidden weights, hidden bias, output weights, output bias.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from .embeddings import DarScaler
from .errors import AdcpredError
from .model import Checkpoint, DenseLayer, MlpClassifier, TrainConfig

MAGIC = b"ADCN"
FORMAT_VERSION = 1


class IoError(AdcpredError):
    pass


class VersionMismatch(AdcpredError):
    pass


class CorruptChecksum(AdcpredError):
    pass


def _array_bytes(arr: np.ndarray) -> bytes:
    return np.ascontiguousarray(arr, dtype="<f8").tobytes()


def _sections_to_payload(sections: list[bytes]) -> bytes:
    out = bytearray()
    for section in sections:
        out += struct.pack("<I", len(section))
        out += section
    return bytes(out)


def _payload_to_sections(payload: bytes, expected: int) -> list[bytes]:
    sections = []
    offset = 0
    while offset < len(payload):
        if offset + 4 > len(payload):
            raise CorruptChecksum("truncated section header")
        (length,) = struct.unpack_from("<I", payload, offset)
        offset += 4
        if offset + length > len(payload):
            raise CorruptChecksum("truncated section body")
        sections.append(payload[offset : offset + length])
        offset += length
    if len(sections) != expected:
        raise CorruptChecksum(f"expected {expected} sections, found {len(sections)}")
    return sections


def save_checkpoint(checkpoint: Checkpoint, path):
    model = checkpoint.model
    header = {
        "config": checkpoint.config.as_dict(),
        "layout": [list(entry) for entry in checkpoint.layout] if checkpoint.layout else None,
        "dar_scaler": (
            {"mean": checkpoint.dar_scaler.mean,
             "std": checkpoint.dar_scaler.std,
             "z_max": checkpoint.dar_scaler.z_max}
            if checkpoint.dar_scaler is not None else None
        ),
        "history": checkpoint.history,
        "leaky_slope": model.leaky_slope,
        "shapes": {
            "hidden_weights": list(model.hidden.weights.shape),
            "hidden_bias": list(model.hidden.bias.shape),
            "output_weights": list(model.output.weights.shape),
            "output_bias": list(model.output.bias.shape),
        },
    }
    sections = [
        json.dumps(header).encode("utf-8"),
        _array_bytes(model.hidden.weights),
        _array_bytes(model.hidden.bias),
        _array_bytes(model.output.weights),
        _array_bytes(model.output.bias),
    ]
    payload = _sections_to_payload(sections)
    blob = MAGIC + struct.pack("<II", FORMAT_VERSION, zlib.crc32(payload)) + payload
    try:
        Path(path).write_bytes(blob)
    except OSError as exc:
        raise IoError(f"cannot write checkpoint: {exc}") from exc


def load_checkpoint(path) -> Checkpoint:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read checkpoint: {exc}") from exc
    if len(blob) < 12:
        raise CorruptChecksum("file shorter than the fixed header")
    if blob[:4] != MAGIC:
        raise CorruptChecksum("bad magic bytes")
    version, crc = struct.unpack_from("<II", blob, 4)
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"format version {version}, supported {FORMAT_VERSION}")
    payload = blob[12:]
    if zlib.crc32(payload) != crc:
        raise CorruptChecksum("payload CRC-32 does not match")
    sections = _payload_to_sections(payload, expected=5)

    try:
        header = json.loads(sections[0].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptChecksum(f"unreadable header: {exc}") from exc

    def arr(buf: bytes, shape) -> np.ndarray:
        flat = np.frombuffer(buf, dtype="<f8")
        if flat.size != int(np.prod(shape)):
            raise CorruptChecksum("parameter buffer does not match its shape")
        return flat.reshape(shape).astype(np.float64).copy()

    shapes = header["shapes"]
    model = MlpClassifier(
        hidden=DenseLayer(
            arr(sections[1], shapes["hidden_weights"]),
            arr(sections[2], shapes["hidden_bias"]),
        ),
        output=DenseLayer(
            arr(sections[3], shapes["output_weights"]),
            arr(sections[4], shapes["output_bias"]),
        ),
        leaky_slope=header["leaky_slope"],
    )
    scaler = None
    if header["dar_scaler"] is not None:
        raw = header["dar_scaler"]
        scaler = DarScaler(mean=raw["mean"], std=raw["std"], z_max=raw["z_max"])
    layout = None
    if header["layout"] is not None:
        layout = tuple((tag, int(off), int(dim)) for tag, off, dim in header["layout"])
    return Checkpoint(
        model=model,
        config=TrainConfig(**header["config"]),
        layout=layout,
        dar_scaler=scaler,
        history=header["history"],
        version=version,
    )

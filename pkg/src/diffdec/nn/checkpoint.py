"""Binary model checkpoints.

Layout (all integers little-endian):

    8 bytes   magic  b"DFDCKPT1"
    u32       format version (currently 1)
    u32       length of the config block
    ...       config block: utf-8 "key = value" lines (arch, code dims,
              training metadata such as seed/epochs/schedule betas)
    u32       number of arrays
    per array u16 name length | name utf-8 | u8 rank | u32 dims... |
              raw float64 little-endian values
    u32       CRC32 of everything above

A round trip reproduces forward outputs bit-exactly on the same platform.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from ..gf2 import ParityCheckMatrix
from .model import ArchConfig, DenoiserModel
from .tensor import Tensor

MAGIC = b"DFDCKPT1"
VERSION = 1


class CheckpointError(ValueError):
    """Raised for malformed, corrupt or incompatible checkpoint files."""


@dataclass(frozen=True)
class Checkpoint:
    """A loaded checkpoint: the rebuilt model plus its metadata strings."""

    version: int
    model: DenoiserModel
    metadata: dict[str, str]


def _config_block(model: DenoiserModel, metadata: dict | None) -> str:
    lines = [
        f"backbone = {model.arch.backbone}",
        f"embed_dim = {model.arch.embed_dim}",
        f"layers = {model.arch.layers}",
        f"hidden_mult = {model.arch.hidden_mult}",
        f"n = {model.n}",
        f"k = {model.k}",
    ]
    for key in sorted(metadata or {}):
        lines.append(f"meta.{key} = {metadata[key]}")
    return "\n".join(lines) + "\n"


def save_checkpoint(model: DenoiserModel, path, metadata: dict | None = None) -> None:
    """Write the model (and optional training metadata) to ``path``."""
    chunks = [MAGIC, struct.pack("<I", VERSION)]
    config = _config_block(model, metadata).encode()
    chunks.append(struct.pack("<I", len(config)))
    chunks.append(config)

    arrays: list[tuple[str, np.ndarray]] = [
        (name, model.params[name].data) for name in sorted(model.params)]
    if model.mask is not None:
        arrays.append(("attention.mask", model.mask.astype(np.float64)))
    chunks.append(struct.pack("<I", len(arrays)))
    for name, arr in arrays:
        blob = name.encode()
        chunks.append(struct.pack("<H", len(blob)))
        chunks.append(blob)
        chunks.append(struct.pack("<B", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    body = b"".join(chunks)
    with open(path, "wb") as fh:
        fh.write(body)
        fh.write(struct.pack("<I", zlib.crc32(body)))


def load_checkpoint(path, code: ParityCheckMatrix | None = None) -> Checkpoint:
    """Read a checkpoint; optionally validate it against a code's (n, k)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < len(MAGIC) + 12 or raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic or truncated)")
    body, (crc,) = raw[:-4], struct.unpack("<I", raw[-4:])
    if zlib.crc32(body) != crc:
        raise CheckpointError("checksum mismatch: file corrupt or truncated")

    pos = len(MAGIC)

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(body):
            raise CheckpointError("checkpoint truncated")
        out = body[pos:pos + n]
        pos += n
        return out

    (version,) = struct.unpack("<I", take(4))
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    (cfg_len,) = struct.unpack("<I", take(4))
    config: dict[str, str] = {}
    for line in take(cfg_len).decode().splitlines():
        if " = " in line:
            key, val = line.split(" = ", 1)
            config[key.strip()] = val.strip()
    try:
        arch = ArchConfig(backbone=config["backbone"],
                          embed_dim=int(config["embed_dim"]),
                          layers=int(config["layers"]),
                          hidden_mult=int(config["hidden_mult"]))
        n, k = int(config["n"]), int(config["k"])
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"bad config block: {exc}") from None
    metadata = {key[5:]: val for key, val in config.items() if key.startswith("meta.")}

    (count,) = struct.unpack("<I", take(4))
    arrays: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2))
        name = take(name_len).decode()
        (rank,) = struct.unpack("<B", take(1))
        dims = struct.unpack(f"<{rank}I", take(4 * rank))
        size = int(np.prod(dims)) if rank else 1
        arr = np.frombuffer(take(8 * size), dtype="<f8").reshape(dims).copy()
        arrays[name] = arr
    if pos != len(body):
        raise CheckpointError("trailing bytes after array section")

    mask = None
    if arch.backbone == "masked_attention":
        if "attention.mask" not in arrays:
            raise CheckpointError("masked_attention checkpoint lacks its mask")
        mask = arrays.pop("attention.mask").astype(bool)
    if code is not None and (code.n, code.k) != (n, k):
        raise CheckpointError(
            f"checkpoint is for an ({n},{k}) code, not ({code.n},{code.k})")
    params = {name: Tensor(arr, requires_grad=True) for name, arr in arrays.items()}
    model = DenoiserModel(arch, n, k, params, mask)

    reference = DenoiserModel.create(code or _dummy_code(n, k), arch, seed=0)
    expected = {name: p.data.shape for name, p in reference.params.items()}
    got = {name: p.data.shape for name, p in params.items()}
    if expected != got:
        raise CheckpointError(
            f"parameter shapes do not match a ({n},{k}) {arch.backbone} model")
    return Checkpoint(version, model, metadata)


def _dummy_code(n: int, k: int) -> ParityCheckMatrix:
    # Shape validation only; any full-rank (n-k) x n matrix works.
    m = n - k
    mat = np.zeros((m, n), dtype=np.uint8)
    mat[:, :k] = 1
    mat[:, k:] = np.eye(m, dtype=np.uint8)
    return ParityCheckMatrix(mat)

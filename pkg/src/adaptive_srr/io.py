"""On-disk formats: SRRF frame containers, PGM images, key-value configs."""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"SRRF"
VERSION = 1
_HEADER = struct.Struct("<4sIII")  # magic, version, height, width
_COUNT = struct.Struct("<I")


class ContainerError(ValueError):
    pass


def write_frames(path, frames) -> None:
    """Write frames to a flat SRRF container.

    Layout: ``SRRF`` magic, then version, height, width and frame count as
    little-endian uint32, then row-major little-endian float64 samples.
    """
    frames = [np.asarray(f, dtype="<f8") for f in frames]
    if not frames:
        raise ContainerError("cannot write an empty sequence")
    h, w = frames[0].shape
    if any(f.shape != (h, w) for f in frames):
        raise ContainerError("all frames in a container must share dimensions")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, h, w))
        fh.write(_COUNT.pack(len(frames)))
        for f in frames:
            fh.write(np.ascontiguousarray(f).tobytes())


def read_frames(path) -> list:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size + _COUNT.size:
        raise ContainerError(f"{path}: truncated header")
    magic, version, h, w = _HEADER.unpack_from(data, 0)
    (count,) = _COUNT.unpack_from(data, _HEADER.size)
    if magic != MAGIC:
        raise ContainerError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise ContainerError(f"{path}: unsupported version {version}")
    off = _HEADER.size + _COUNT.size
    expected = off + count * h * w * 8
    if len(data) != expected:
        raise ContainerError(f"{path}: expected {expected} bytes, found {len(data)}")
    arr = np.frombuffer(data, dtype="<f8", offset=off).reshape(count, h, w)
    return [arr[i].astype(np.float64) for i in range(count)]


def write_pgm(path, image) -> None:
    """8-bit binary PGM (P5, maxval 255); samples are rounded and clamped."""
    img = np.clip(np.rint(np.asarray(image, dtype=np.float64)), 0, 255).astype(np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(img.tobytes())


def _pgm_tokens(data: bytes, count: int):
    tokens, pos = [], 0
    while len(tokens) < count:
        while data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while data[pos : pos + 1] not in (b"\n", b""):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    return tokens, pos + 1


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) or ASCII (P2) PGM as float64."""
    data = Path(path).read_bytes()
    (magic, w, h, maxval), pos = _pgm_tokens(data, 4)
    w, h, maxval = int(w), int(h), int(maxval)
    if magic == b"P5":
        dtype = np.uint8 if maxval < 256 else ">u2"
        img = np.frombuffer(data, dtype=dtype, count=w * h, offset=pos)
    elif magic == b"P2":
        img = np.array(data[pos:].split()[: w * h], dtype=np.int64)
    else:
        raise ContainerError(f"{path}: not a PGM file (magic {magic!r})")
    return img.reshape(h, w).astype(np.float64)


def read_config(path) -> dict:
    """Plain ``key = value`` lines; ``#`` starts a comment."""
    cfg = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        cfg[key.replace("-", "_")] = value
    return cfg

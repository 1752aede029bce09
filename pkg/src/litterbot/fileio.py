"""Raster file formats: binary PGM masks and DPTH depth maps.

Mask files are binary PGM (P5), maxval 255, foreground 255, background 0.
Depth files carry a 16-byte header (magic "DPTH", u32 width, u32 height,
f32 invalid marker, all little-endian) followed by width*height f32 depths
in meters, row-major. Invalid depths are stored as the marker value and
normalized to 0 on load.
"""

from __future__ import annotations

import struct

import numpy as np

DEPTH_MAGIC = b"DPTH"


def save_mask_pgm(path, mask: np.ndarray) -> None:
    mask = np.asarray(mask)
    h, w = mask.shape
    data = np.where(mask.astype(bool), 255, 0).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(data.tobytes())


def load_mask_pgm(path) -> np.ndarray:
    with open(path, "rb") as f:
        raw = f.read()
    # header is whitespace-separated tokens, # starts a comment line
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos])
    pos += 1  # single whitespace byte after maxval
    if tokens[0] != b"P5":
        raise ValueError(f"not a binary PGM file: magic {tokens[0]!r}")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval != 255:
        raise ValueError(f"expected maxval 255, got {maxval}")
    data = np.frombuffer(raw, dtype=np.uint8, count=w * h, offset=pos)
    return (data.reshape(h, w) > 127).copy()


def save_depth(path, depth: np.ndarray, invalid_marker: float = 0.0) -> None:
    depth = np.asarray(depth, dtype=np.float32)
    h, w = depth.shape
    with open(path, "wb") as f:
        f.write(struct.pack("<4sIIf", DEPTH_MAGIC, w, h, float(invalid_marker)))
        f.write(depth.astype("<f4").tobytes())


def load_depth(path) -> np.ndarray:
    """Load a DPTH file; pixels equal to the stored invalid marker become 0."""
    with open(path, "rb") as f:
        header = f.read(16)
        magic, w, h, marker = struct.unpack("<4sIIf", header)
        if magic != DEPTH_MAGIC:
            raise ValueError(f"not a DPTH file: magic {magic!r}")
        data = np.frombuffer(f.read(4 * w * h), dtype="<f4").reshape(h, w).astype(np.float32)
    if marker != 0.0:
        data = np.where(data == np.float32(marker), np.float32(0.0), data)
    return data

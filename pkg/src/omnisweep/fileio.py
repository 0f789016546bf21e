"""Binary image and volume formats: 8-bit PGM, float PFM, raw volume dumps.

PFM files follow the de-facto standard: rows are stored bottom-to-top and
a negative scale marks little-endian data.  Raw volume dumps are a single
ASCII header line ``<d0> <d1> ... <order>`` followed by little-endian
float32 values in C order.
"""

from __future__ import annotations

import numpy as np


def write_pgm(path, image: np.ndarray) -> None:
    """Write a [0, 1] float image as binary 8-bit PGM (values rounded)."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("PGM image must be 2-D")
    data = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    h, w = data.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(data.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a binary 8-bit PGM into a float image in [0, 1]."""
    with open(path, "rb") as f:
        magic = f.readline().strip()
        if magic != b"P5":
            raise ValueError(f"not a binary PGM file: {path}")
        fields: list[bytes] = []
        while len(fields) < 3:
            line = f.readline()
            if not line:
                raise ValueError(f"truncated PGM header: {path}")
            if line.startswith(b"#"):
                continue
            fields.extend(line.split())
        w, h, maxval = (int(v) for v in fields[:3])
        if maxval != 255:
            raise ValueError("only 8-bit PGM is supported")
        data = np.frombuffer(f.read(w * h), dtype=np.uint8)
    if data.size != w * h:
        raise ValueError(f"truncated PGM data: {path}")
    return data.reshape(h, w).astype(np.float64) / 255.0


def write_pfm(path, data: np.ndarray) -> None:
    """Write a (H, W) float array as a little-endian grayscale PFM."""
    arr = np.asarray(data, dtype=np.float32)
    if arr.ndim != 2:
        raise ValueError("PFM data must be 2-D")
    h, w = arr.shape
    with open(path, "wb") as f:
        f.write(f"Pf\n{w} {h}\n-1.0\n".encode("ascii"))
        f.write(arr[::-1].astype("<f4").tobytes())


def read_pfm(path) -> np.ndarray:
    with open(path, "rb") as f:
        if f.readline().strip() != b"Pf":
            raise ValueError(f"not a grayscale PFM file: {path}")
        w, h = (int(v) for v in f.readline().split())
        scale = float(f.readline())
        dtype = "<f4" if scale < 0 else ">f4"
        data = np.frombuffer(f.read(w * h * 4), dtype=dtype)
    if data.size != w * h:
        raise ValueError(f"truncated PFM data: {path}")
    return data.reshape(h, w)[::-1].astype(np.float32)


def dump_raw_volume(path, values: np.ndarray, order: str | None = None) -> None:
    """Dump an N-D float array for external inspection (debug aid)."""
    arr = np.ascontiguousarray(values, dtype="<f4")
    if order is None:
        order = "".join("CDHW"[-arr.ndim:]) if arr.ndim <= 4 else "?" * arr.ndim
    header = " ".join(str(d) for d in arr.shape) + f" {order}\n"
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(arr.tobytes())


def load_raw_volume(path):
    """Read a raw volume dump; returns (values, order_tag)."""
    with open(path, "rb") as f:
        fields = f.readline().split()
        shape = tuple(int(v) for v in fields[:-1])
        order = fields[-1].decode("ascii")
        count = int(np.prod(shape))
        data = np.frombuffer(f.read(count * 4), dtype="<f4")
    if data.size != count:
        raise ValueError(f"truncated volume dump: {path}")
    return data.reshape(shape), order

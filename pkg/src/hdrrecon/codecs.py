"""File codecs: Radiance RGBE (.hdr), PFM and 8-bit PNG.

RGBE uses flat (non-run-length) scanlines only; run-length encoded files are
reported as unsupported rather than misread. PFM stores full 32-bit floats, so
its round trip is bit-exact.
"""

from __future__ import annotations

import numpy as np
from PIL import Image as PILImage

from .image import ImageError, ImageHDR, ImageLDR

RADIANCE_MAGIC = b"#?RADIANCE"


class CodecError(ImageError):
    """Malformed header, truncated payload or unsupported encoding."""


# ---------------------------------------------------------------------------
# RGBE

def rgbe_encode(rgb: np.ndarray) -> np.ndarray:
    """Encode (..., 3) linear floats into (..., 4) shared-exponent bytes."""
    rgb = np.asarray(rgb, dtype=np.float64)
    maxv = rgb.max(axis=-1)
    out = np.zeros(rgb.shape[:-1] + (4,), dtype=np.uint8)
    nz = maxv >= 1e-38
    if np.any(nz):
        m, e = np.frexp(maxv[nz])  # maxv = m * 2^e, m in [0.5, 1)
        scale = m * 256.0 / maxv[nz]
        mant = np.clip((rgb[nz] * scale[..., None]).astype(np.int64), 0, 255)
        out[nz, :3] = mant.astype(np.uint8)
        out[nz, 3] = (e + 128).astype(np.uint8)
    return out


def rgbe_decode(rgbe: np.ndarray) -> np.ndarray:
    """Decode (..., 4) RGBE bytes; value = (mantissa + 0.5)/256 * 2^(e-128)."""
    rgbe = np.asarray(rgbe, dtype=np.uint8)
    e = rgbe[..., 3].astype(np.int32)
    scale = np.where(e > 0, np.ldexp(1.0 / 256.0, e - 128), 0.0)
    return ((rgbe[..., :3].astype(np.float64) + 0.5) * scale[..., None]).astype(np.float32)


def _read_rgbe(fh) -> ImageHDR:
    magic = fh.readline().rstrip(b"\r\n")
    if not magic.startswith(b"#?"):
        raise CodecError("not a Radiance file (missing #? magic)")
    fmt_ok = False
    while True:
        line = fh.readline()
        if not line:
            raise CodecError("truncated Radiance header")
        line = line.rstrip(b"\r\n")
        if line == b"":
            break
        if line.startswith(b"FORMAT="):
            if line != b"FORMAT=32-bit_rle_rgbe":
                raise CodecError(f"unsupported Radiance format: {line!r}")
            fmt_ok = True
    if not fmt_ok:
        raise CodecError("Radiance header missing FORMAT line")
    res = fh.readline().rstrip(b"\r\n").split()
    if len(res) != 4 or res[0] != b"-Y" or res[2] != b"+X":
        raise CodecError(f"unsupported resolution line: {b' '.join(res)!r}")
    height, width = int(res[1]), int(res[3])
    payload = fh.read(width * height * 4)
    if len(payload) < width * height * 4:
        raise CodecError("truncated RGBE payload")
    data = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 4)
    # New-style RLE scanlines start with 2, 2, len-hi, len-lo.
    if width >= 8 and data[0, 0, 0] == 2 and data[0, 0, 1] == 2:
        raise CodecError("run-length encoded RGBE is not supported")
    return ImageHDR(rgbe_decode(data))


def _write_rgbe(image: ImageHDR, fh) -> None:
    fh.write(RADIANCE_MAGIC + b"\n")
    fh.write(b"FORMAT=32-bit_rle_rgbe\n\n")
    fh.write(f"-Y {image.height} +X {image.width}\n".encode())
    fh.write(rgbe_encode(image.data).tobytes())


# ---------------------------------------------------------------------------
# PFM

def _read_pfm_line(fh) -> str:
    buf = b""
    while True:
        c = fh.read(1)
        if not c:
            raise CodecError("truncated PFM header")
        if c == b"\n":
            return buf.decode("ascii")
        buf += c


def _read_pfm(fh) -> ImageHDR:
    kind = _read_pfm_line(fh)
    if kind != "PF":
        raise CodecError(f"unsupported PFM variant {kind!r} (only 3-channel PF)")
    dims = _read_pfm_line(fh).split()
    if len(dims) != 2:
        raise CodecError("malformed PFM dimension line")
    width, height = int(dims[0]), int(dims[1])
    scale = float(_read_pfm_line(fh))
    if scale == 0:
        raise CodecError("PFM scale must be nonzero")
    endian = "<" if scale < 0 else ">"
    payload = fh.read(width * height * 3 * 4)
    if len(payload) < width * height * 3 * 4:
        raise CodecError("truncated PFM payload")
    data = np.frombuffer(payload, dtype=endian + "f4").reshape(height, width, 3)
    # PFM rows are stored bottom-up.
    return ImageHDR(np.ascontiguousarray(data[::-1]))


def _write_pfm(image: ImageHDR, fh) -> None:
    fh.write(b"PF\n")
    fh.write(f"{image.width} {image.height}\n".encode())
    fh.write(b"-1.0\n")
    fh.write(image.data[::-1].astype("<f4").tobytes())


# ---------------------------------------------------------------------------
# Public API

def read_hdr(path, format: str | None = None) -> ImageHDR:
    """Read a linear HDR image; format inferred from the suffix if omitted."""
    fmt = _hdr_format(path, format)
    with open(path, "rb") as fh:
        return _read_rgbe(fh) if fmt == "RGBE" else _read_pfm(fh)


def write_hdr(image: ImageHDR, path, format: str | None = None) -> None:
    fmt = _hdr_format(path, format)
    with open(path, "wb") as fh:
        if fmt == "RGBE":
            _write_rgbe(image, fh)
        else:
            _write_pfm(image, fh)


def _hdr_format(path, format: str | None) -> str:
    if format is not None:
        fmt = format.upper()
        if fmt not in ("RGBE", "PFM"):
            raise CodecError(f"unknown HDR format {format!r}")
        return fmt
    suffix = str(path).lower()
    if suffix.endswith(".hdr"):
        return "RGBE"
    if suffix.endswith(".pfm"):
        return "PFM"
    raise CodecError(f"cannot infer HDR format from {path!r}")


def read_ldr(path) -> ImageLDR:
    """Read an 8-bit RGB PNG as values on the 1/255 grid."""
    with PILImage.open(path) as img:
        if img.mode != "RGB":
            if img.mode in ("L", "P", "RGBA"):
                raise CodecError(f"expected 3-channel RGB input, got mode {img.mode}")
            img = img.convert("RGB")
        arr = np.asarray(img, dtype=np.float32) / 255.0
    return ImageLDR(arr)


def write_ldr(image: ImageLDR, path) -> None:
    PILImage.fromarray(image.codes(), mode="RGB").save(path, format="PNG")

"""
Binary Netpbm (P5/P6) and PFM codecs, plus instance-manifest loading

8-bit samples map to reals as v / maxval; writing rounds v * 255 half away
from zero. PFM stores IEEE float32 rows bottom-up; grids are top-down in
memory regardless of the file's scale sign.
"""
import json
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import TypeAdapter, ValidationError

from app.core.exceptions import (
    BaseAppException,
    FileAccessException,
    ImageDataException,
    ImageFormatException,
    NotFoundException,
    PreconditionException,
)
from app.core.logging import logger
from app.models.grid import Grid
from app.models.masks import InstanceMask
from app.schemas.adjust import InstanceManifestEntry

ImageKind = Literal["ppm-color", "pgm-gray", "pfm-float"]
PathLike = Union[str, Path]

_MAGIC_TO_KIND = {
    b"P6": "ppm-color",
    b"P5": "pgm-gray",
    b"PF": "pfm-float",
    b"Pf": "pfm-float",
}

_WHITESPACE = b" \t\r\n\v\f"


class _HeaderReader:
    """Whitespace-separated header tokens with byte offsets; '#' starts a comment."""

    def __init__(self, buffer: bytes, start: int = 0):
        self.buffer = buffer
        self.position = start

    def next_token(self, allow_comments: bool = True) -> Tuple[bytes, int]:
        buffer = self.buffer
        while self.position < len(buffer):
            byte = buffer[self.position:self.position + 1]
            if byte in _WHITESPACE and byte:
                self.position += 1
            elif allow_comments and byte == b"#":
                end = buffer.find(b"\n", self.position)
                self.position = len(buffer) if end < 0 else end + 1
            else:
                break
        start = self.position
        while self.position < len(buffer) and buffer[self.position:self.position + 1] not in _WHITESPACE:
            self.position += 1
        if start == self.position:
            raise ImageFormatException("Unexpected end of header", offset=start)
        return buffer[start:self.position], start

    def next_int(self, name: str, minimum: int = 1) -> int:
        token, offset = self.next_token()
        try:
            value = int(token)
        except ValueError:
            raise ImageFormatException(f"Invalid {name} '{token.decode(errors='replace')}'", offset=offset)
        if value < minimum:
            raise ImageFormatException(f"{name} must be at least {minimum}, got {value}", offset=offset)
        return value

    def skip_single_whitespace(self) -> int:
        """Consume the one whitespace byte separating header from raster; return raster start."""
        if self.position >= len(self.buffer) or self.buffer[self.position:self.position + 1] not in _WHITESPACE:
            raise ImageFormatException("Missing whitespace after header", offset=self.position)
        return self.position + 1


def _read_bytes(path: PathLike) -> bytes:
    file_path = Path(path)
    if not file_path.exists():
        raise NotFoundException("Image", str(file_path))
    try:
        return file_path.read_bytes()
    except OSError as e:
        raise FileAccessException(str(file_path), str(e))


def detect_kind(buffer: bytes) -> ImageKind:
    """Identify the image kind from its two-byte magic number."""
    kind = _MAGIC_TO_KIND.get(buffer[:2])
    if kind is None:
        raise ImageFormatException("Unrecognized magic number", offset=0)
    return kind  # type: ignore[return-value]


def _decode_netpbm(buffer: bytes, channels: int) -> np.ndarray:
    reader = _HeaderReader(buffer, start=2)
    width = reader.next_int("width")
    height = reader.next_int("height")
    maxval_offset = reader.position
    maxval = reader.next_int("maxval")
    if maxval > 255:
        raise ImageFormatException(f"Only 8-bit samples are supported (maxval {maxval})", offset=maxval_offset)
    start = reader.skip_single_whitespace()

    expected = width * height * channels
    if len(buffer) - start < expected:
        raise ImageFormatException(
            f"Truncated raster: expected {expected} bytes, found {len(buffer) - start}",
            offset=len(buffer),
        )
    raster = np.frombuffer(buffer, dtype=np.uint8, count=expected, offset=start)
    return raster.reshape(height, width, channels).astype(np.float64) / float(maxval)


def _decode_pfm(buffer: bytes) -> np.ndarray:
    channels = 3 if buffer[:2] == b"PF" else 1
    reader = _HeaderReader(buffer, start=2)
    width = reader.next_int("width")
    height = reader.next_int("height")
    token, offset = reader.next_token(allow_comments=False)
    try:
        scale = float(token)
    except ValueError:
        raise ImageFormatException(f"Invalid scale '{token.decode(errors='replace')}'", offset=offset)
    if scale == 0.0 or not np.isfinite(scale):
        raise ImageFormatException("Scale must be finite and non-zero", offset=offset)
    start = reader.skip_single_whitespace()

    dtype = np.dtype("<f4") if scale < 0 else np.dtype(">f4")
    count = width * height * channels
    if len(buffer) - start < count * 4:
        raise ImageFormatException(
            f"Truncated raster: expected {count * 4} bytes, found {len(buffer) - start}",
            offset=len(buffer),
        )
    raster = np.frombuffer(buffer, dtype=dtype, count=count, offset=start)
    values = raster.reshape(height, width, channels)[::-1].astype(np.float64)
    if not np.all(np.isfinite(values)):
        bad = int(np.argmin(np.isfinite(values[::-1]).reshape(-1)))
        raise ImageDataException(f"Non-finite PFM value at byte offset {start + bad * 4}")
    return values


def read_image(path: PathLike, kind: Optional[ImageKind] = None) -> Grid:
    """
    Read a binary PPM, PGM or PFM file.

    Args:
        path: File to read
        kind: Expected kind; detected from the magic number when omitted

    Returns:
        Grid with 8-bit samples mapped to [0, 1] or raw PFM floats, top row first

    Raises:
        NotFoundException: If the file does not exist
        ImageFormatException: If the header or raster is malformed
        ImageDataException: If a PFM value is not finite
    """
    buffer = _read_bytes(path)
    if len(buffer) < 2:
        raise ImageFormatException("File too short for a magic number", offset=len(buffer))
    detected = detect_kind(buffer)
    if kind is not None and kind != detected:
        raise ImageFormatException(f"Expected {kind}, found {detected}", offset=0)

    if detected == "ppm-color":
        data = _decode_netpbm(buffer, channels=3)
    elif detected == "pgm-gray":
        data = _decode_netpbm(buffer, channels=1)
    else:
        data = _decode_pfm(buffer)

    logger.debug(
        "Read image",
        extra={"context": {"path": str(path), "kind": detected, "shape": list(data.shape)}},
    )
    return Grid(data=data)


def _quantize(grid: Grid) -> np.ndarray:
    # Half away from zero; inputs are clipped to [0, 1] first so floor(x + 0.5) suffices.
    scaled = np.clip(grid.data, 0.0, 1.0) * 255.0
    return np.floor(scaled + 0.5).astype(np.uint8)


def _encode(grid: Grid, kind: ImageKind) -> bytes:
    height, width, channels = grid.shape
    if kind == "ppm-color":
        if channels != 3:
            raise PreconditionException(f"PPM needs 3 channels, grid has {channels}")
        header = f"P6\n{width} {height}\n255\n".encode("ascii")
        return header + _quantize(grid).tobytes()
    if kind == "pgm-gray":
        if channels != 1:
            raise PreconditionException(f"PGM needs 1 channel, grid has {channels}")
        header = f"P5\n{width} {height}\n255\n".encode("ascii")
        return header + _quantize(grid).tobytes()
    if channels not in (1, 3):
        raise PreconditionException(f"PFM holds 1 or 3 channels, grid has {channels}")
    values = grid.data.astype("<f4")
    if not np.all(np.isfinite(values)):
        raise ImageDataException("Grid values overflow float32")
    magic = "PF" if channels == 3 else "Pf"
    header = f"{magic}\n{width} {height}\n-1.0\n".encode("ascii")
    return header + np.ascontiguousarray(values[::-1]).tobytes()


def write_image(grid: Grid, path: PathLike, kind: ImageKind) -> None:
    """
    Write a grid as binary PPM, PGM or PFM.

    PFM output is float32, little-endian, bottom-up; values round to the
    nearest float32.

    Raises:
        PreconditionException: If the channel count does not fit the format
        FileAccessException: If the path cannot be written
    """
    payload = _encode(grid, kind)
    try:
        Path(path).write_bytes(payload)
    except OSError as e:
        raise FileAccessException(str(path), str(e))
    logger.debug("Wrote image", extra={"context": {"path": str(path), "kind": kind}})


def write_map(grid: Grid, path: PathLike, kind: Literal["pfm-float", "pgm-gray"]) -> None:
    """Write a single-channel map (depth, disparity, mask, loss) as PFM or PGM."""
    if grid.channels != 1:
        raise PreconditionException(f"Maps must have 1 channel, grid has {grid.channels}")
    write_image(grid, path, kind)


_MANIFEST_ADAPTER = TypeAdapter(List[InstanceManifestEntry])


def read_manifest(manifest_path: PathLike) -> List[InstanceManifestEntry]:
    """Parse and validate an instance manifest without loading the masks."""
    raw = _read_bytes(manifest_path)
    try:
        return _MANIFEST_ADAPTER.validate_python(json.loads(raw))
    except json.JSONDecodeError as e:
        raise ImageFormatException(f"Malformed instance manifest: {e.msg}", offset=e.pos)
    except ValidationError as e:
        raise ImageFormatException(f"Invalid instance manifest: {e.error_count()} error(s)")


def manifest_mask_paths(manifest_path: PathLike) -> List[Path]:
    """Mask files of a manifest, resolved against its directory."""
    manifest = Path(manifest_path)
    return [manifest.parent / entry.mask_file for entry in read_manifest(manifest)]


def load_instances(manifest_path: PathLike) -> List[InstanceMask]:
    """
    Load instance masks listed in a JSON manifest.

    Mask paths are resolved relative to the manifest's directory.

    Raises:
        NotFoundException: If the manifest or a mask file is missing
        ImageFormatException: If the manifest is not a valid list of entries
    """
    manifest = Path(manifest_path)
    entries = read_manifest(manifest)

    instances = []
    for entry in entries:
        mask = read_image(manifest.parent / entry.mask_file, kind="pgm-gray")
        try:
            binary = Grid(data=(mask.data >= 0.5).astype(np.float64))
            instances.append(
                InstanceMask(mask=binary, confidence=entry.confidence, class_id=entry.class_id)
            )
        except BaseAppException:
            raise
        except Exception as e:
            raise ImageFormatException(f"Invalid mask '{entry.mask_file}': {e}")
    logger.info(
        "Loaded instance masks",
        extra={"context": {"manifest": str(manifest), "count": len(instances)}},
    )
    return instances

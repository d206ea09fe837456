"""
Provenance records for CLI runs
"""
import hashlib
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

from app import __version__
from app.core.exceptions import FileAccessException
from app.core.logging import logger
from app.schemas.manifest import RunManifest

MANIFEST_NAME = "run_manifest.json"
_CHUNK = 1 << 16


def file_digest(path: Path) -> str:
    """sha256 hex digest of a file's bytes."""
    digest = hashlib.sha256()
    try:
        with open(path, "rb") as handle:
            for chunk in iter(lambda: handle.read(_CHUNK), b""):
                digest.update(chunk)
    except OSError as e:
        raise FileAccessException(str(path), e.strerror or str(e))
    return digest.hexdigest()


def build_manifest(
    subcommand: str,
    config: Dict[str, Any],
    inputs: Iterable[Path],
    duration_seconds: float,
    seed: Optional[int] = None,
) -> RunManifest:
    """Digest every input (sorted by path) and assemble the manifest."""
    digests = {str(path): file_digest(path) for path in sorted(set(Path(p) for p in inputs))}
    return RunManifest(
        subcommand=subcommand,
        config=config,
        inputs=digests,
        version=__version__,
        seed=seed,
        duration_seconds=max(duration_seconds, 0.0),
    )


def emit_manifest(manifest: RunManifest, out_dir: Optional[Path] = None) -> Optional[Path]:
    """
    Write the manifest as run_manifest.json into ``out_dir``, or log it when there is none.

    Returns:
        Path written, or None when logged
    """
    if out_dir is None:
        logger.info("Run manifest", extra={"context": manifest.model_dump(mode="json")})
        return None
    path = Path(out_dir) / MANIFEST_NAME
    try:
        path.write_text(manifest.model_dump_json(indent=2))
    except OSError as e:
        raise FileAccessException(str(path), e.strerror or str(e))
    return path

"""
Shared plumbing for CLI subcommands
"""
import argparse
from pathlib import Path
from typing import Any, Callable, Dict, List, NamedTuple, Optional

from pydantic import BaseModel

from app.core.exceptions import EXIT_OK, FileAccessException, NotFoundException

Handler = Callable[[argparse.Namespace], "CommandOutput"]


class CommandOutput(NamedTuple):
    """What a handler hands back to dispatch: stdout text plus manifest inputs."""

    stdout: str
    config: Dict[str, Any]
    inputs: List[Path]
    out_dir: Optional[Path] = None
    seed: Optional[int] = None
    exit_code: int = EXIT_OK


def existing_file(path: str) -> Path:
    candidate = Path(path)
    if not candidate.is_file():
        raise NotFoundException("Input file", path)
    return candidate


def existing_dir(path: str) -> Path:
    candidate = Path(path)
    if not candidate.is_dir():
        raise NotFoundException("Input directory", path)
    return candidate


def prepare_out_dir(path: Optional[str]) -> Optional[Path]:
    """Create ``--out`` if needed; None passes through."""
    if path is None:
        return None
    out_dir = Path(path)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise FileAccessException(path, e.strerror or str(e))
    return out_dir


def write_text(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as e:
        raise FileAccessException(str(path), e.strerror or str(e))


def to_json(model: BaseModel) -> str:
    return model.model_dump_json(indent=2, by_alias=True)


def comma_list(text: str) -> List[str]:
    """argparse type for "a,b,c" lists."""
    return [item.strip() for item in text.split(",") if item.strip()]


def comma_ints(text: str) -> List[int]:
    try:
        return [int(item) for item in comma_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")

"""
Pytest configuration and fixtures
"""
import json
from pathlib import Path
from typing import Callable, Tuple

import numpy as np
import pytest

from app.models.grid import Grid
from app.services.scene_synthesis import make_scene
from app.utils.image_io import write_image
from main import dispatch


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator for test data"""
    return np.random.Generator(np.random.PCG64(1234))


@pytest.fixture
def rgb_image(rng) -> Grid:
    """8x8 RGB grid with float32-representable values in [0, 1]"""
    return Grid(data=rng.uniform(0.0, 1.0, size=(8, 8, 3)).astype(np.float32))


@pytest.fixture(scope="session")
def fronto_scene():
    """32x32 fronto-parallel scene with 2 px parallax"""
    return make_scene(32, 32, "fronto-plane", pose_magnitude=2.0, texture_freq=4.0, seed=3)


@pytest.fixture
def write_pfm(tmp_path) -> Callable[[str, np.ndarray], Path]:
    """Write an (H, W) or (H, W, C) array as PFM under tmp_path"""

    def _write(name: str, data: np.ndarray) -> Path:
        path = tmp_path / name
        path.parent.mkdir(parents=True, exist_ok=True)
        write_image(Grid(data=np.asarray(data, dtype=np.float32)), path, "pfm-float")
        return path

    return _write


@pytest.fixture
def run_cli(capsys) -> Callable[..., Tuple[int, str]]:
    """Run the CLI in-process; returns (exit code, stdout)"""

    def _run(*argv: str) -> Tuple[int, str]:
        code = dispatch(list(argv))
        return code, capsys.readouterr().out

    return _run


@pytest.fixture
def run_cli_json(run_cli) -> Callable[..., Tuple[int, dict]]:
    """Run the CLI and parse stdout as JSON"""

    def _run(*argv: str) -> Tuple[int, dict]:
        code, out = run_cli(*argv)
        return code, json.loads(out) if out.strip() else {}

    return _run

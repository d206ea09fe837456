"""
Pydantic schema for the per-run provenance record
"""
from typing import Any, Dict, Optional

from pydantic import BaseModel, Field


class RunManifest(BaseModel):
    """What ran, with which configuration, on which inputs."""

    subcommand: str
    config: Dict[str, Any] = Field(default_factory=dict, description="Fully resolved configuration")
    inputs: Dict[str, str] = Field(default_factory=dict, description="Input path to sha256 hex digest")
    version: str
    seed: Optional[int] = None
    duration_seconds: float = Field(..., ge=0.0)

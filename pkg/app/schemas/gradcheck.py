"""
Pydantic schemas for gradient verification reports
"""
from typing import List, Optional

from pydantic import BaseModel, Field


class CoordinateCheck(BaseModel):
    """One sampled coordinate: the step actually used and its relative error."""

    index: int = Field(..., ge=0)
    step: Optional[float] = Field(default=None, gt=0.0, description="None when flagged at every refinement")
    rel_error: Optional[float] = Field(default=None, ge=0.0)


class GroupGradStats(BaseModel):
    """Relative-error statistics for one parameter group."""

    group: str
    sampled: int = Field(..., ge=0, description="Coordinates drawn from the group")
    checked: int = Field(..., ge=0, description="Coordinates compared (sampled minus flagged)")
    flagged: int = Field(..., ge=0, description="Coordinates skipped near a kink or tie")
    max_rel_error: float = Field(..., ge=0.0)
    mean_rel_error: float = Field(..., ge=0.0)
    refined: int = Field(default=0, ge=0, description="Checked coordinates that needed a step below h")
    coordinates: List[CoordinateCheck] = Field(default_factory=list)


class GradReport(BaseModel):
    """Outcome of comparing analytic gradients against central differences."""

    groups: List[GroupGradStats]
    h: float = Field(..., gt=0.0)
    tol: float = Field(..., gt=0.0)
    seed: int
    checked: int = Field(..., ge=1)
    max_rel_error: float = Field(..., ge=0.0)
    passed: bool

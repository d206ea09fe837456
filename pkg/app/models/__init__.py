"""
Domain types: grids, camera models, masks, scenes and parameters
"""
from .camera import BASELINE_INTRINSICS, LEARNED_INTRINSICS, FlowGrid, Intrinsics, RigidTransform
from .grid import DTYPE, Grid, Pyramid
from .masks import InstanceMask
from .params import GROUP_NAMES, LrSchedule, OptimState, ParamCoord, ParamGroups
from .scene import SyntheticScene, TextureSpec

__all__ = [
    "DTYPE", "Grid", "Pyramid",
    "Intrinsics", "RigidTransform", "FlowGrid", "BASELINE_INTRINSICS", "LEARNED_INTRINSICS",
    "InstanceMask",
    "GROUP_NAMES", "ParamCoord", "ParamGroups", "LrSchedule", "OptimState",
    "SyntheticScene", "TextureSpec",
]

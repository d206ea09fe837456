"""
viewsynth-depth: differentiable view synthesis and depth evaluation toolkit
"""

__version__ = "1.0.0"

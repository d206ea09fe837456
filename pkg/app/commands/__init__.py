"""
Commands module - one module per CLI subcommand

Each module exposes ``register(subparsers)``, which adds its parser and sets
``handler`` to a function returning a CommandOutput.
"""
from . import augment, evaluate, gradcheck, loss, maskadjust, reference, shuffle, train_toy, warp

COMMAND_MODULES = (warp, loss, gradcheck, train_toy, evaluate, augment, shuffle, maskadjust, reference)

__all__ = ["COMMAND_MODULES"]

"""Utility helpers shared across the package."""

from .logging import get_logger, set_level
from .parallel import ordered_map
from .seeding import Purpose, child_seed, substream

__all__ = ["get_logger", "set_level", "ordered_map", "Purpose", "substream", "child_seed"]

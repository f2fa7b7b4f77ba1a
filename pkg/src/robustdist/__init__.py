"""Robust distribution learning and testing from channel-constrained, partly manipulated messages."""

from .channels import ConstraintSpec
from .distributions import Distribution, PaninskiIndex, paninski_dist, tv_distance, uniform

__version__ = "0.1.0"

__all__ = ["ConstraintSpec", "Distribution", "PaninskiIndex", "paninski_dist", "tv_distance", "uniform"]

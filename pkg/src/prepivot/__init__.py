"""
Gaussian-prepivoted randomization inference for finite-population experiments.

The package covers completely randomized, rerandomized, paired and multi-arm
designs: a Fisher randomization test whose statistic is first mapped through
an estimated conditional Gaussian CDF, exact under the sharp null and
asymptotically conservative under the weak null.
"""

from importlib.metadata import PackageNotFoundError, version


def get_version() -> str:
    """Return the installed package version or a dev placeholder."""
    try:
        return version("prepivot")
    except PackageNotFoundError:
        return "0.0.dev0"


__all__ = ["get_version"]

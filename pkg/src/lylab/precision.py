"""Precision mode selection.

Two modes: "double" (plain float64 pipelines) and "extended" (double-double
coefficient accumulation and root refinement, ~31 significant digits).  The
default is "extended"; the LYLAB_PRECISION environment variable overrides it,
and every report records which mode produced it.
"""

import os

MODES = ("double", "extended")


def resolve_mode(override=None):
    """Return the active precision mode.

    Priority: explicit `override` argument, then the LYLAB_PRECISION
    environment variable, then "extended".
    """
    mode = override or os.environ.get("LYLAB_PRECISION") or "extended"
    if mode not in MODES:
        raise ValueError(f"unknown precision mode {mode!r}, expected one of {MODES}")
    return mode

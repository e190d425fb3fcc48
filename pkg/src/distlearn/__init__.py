"""The main module of distlearn."""

from __future__ import annotations

import argparse
from typing import cast

args: argparse.Namespace = cast(argparse.Namespace, None)
"""
The parsed command line arguments. Only set when distlearn is run through its CLI,
library code must therefore tolerate this being None (logging falls back to defaults).
"""

generator_name: str = "PCG64"
"""The bit generator used for every random draw. Recorded in all experiment reports."""

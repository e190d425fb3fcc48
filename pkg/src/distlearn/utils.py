"""
Provides utility functions and the error types shared by all modules.
"""

from __future__ import annotations

import json
import math
import shutil
import sys
from typing import Any, Collection, NoReturn, Optional

import numpy as np

from distlearn.logger import col

class DistlearnError(ValueError):
    """Base class for all errors raised by distlearn operations."""

class NegativeMass(DistlearnError):
    """A probability vector contains a negative entry."""

class NotNormalized(DistlearnError):
    """A probability vector does not sum to one."""

class EmptyDomain(DistlearnError):
    """A probability vector has no entries."""

class InvalidParam(DistlearnError):
    """A parameter lies outside of its admissible range."""

class DomainMismatch(DistlearnError):
    """Two distributions are defined over domains of different size."""

class OutOfDomain(DistlearnError):
    """A sample lies outside of the domain [k]."""

class PreconditionViolated(DistlearnError):
    """A bound was evaluated outside of the region where it is asserted."""

class Unsupported(DistlearnError):
    """The requested quantity has no implemented formula."""

class InvalidConfig(DistlearnError):
    """An experiment configuration is malformed or inconsistent."""

class SearchLimitExceeded(DistlearnError):
    """A sample size search did not terminate below its cap."""

class FatalError(Exception):
    """An exception type for fatal errors, optionally including a file location."""
    def __init__(self, msg: str, loc: Optional[str] = None):
        super().__init__(msg)
        self.loc = loc

def print_warning(msg: str) -> None:
    """Prints a message with a (possibly colored) 'warning: ' prefix to stderr."""
    print(f"{col('[1;33m')}warning:{col('[m')} {msg}", file=sys.stderr)

def print_error(msg: str, loc: Optional[str] = None) -> None:
    """Prints a message with a (possibly colored) 'error: ' prefix."""
    if loc is None:
        print(f"{col('[1;31m')}error:{col('[m')} {msg}", file=sys.stderr)
    else:
        print(f"{col('[1m')}{loc}: {col('[1;31m')}error:{col('[m')} {msg}", file=sys.stderr)

def die_error(msg: str, loc: Optional[str] = None, status_code: int = 2) -> NoReturn:
    """Prints a message with a colored 'error: ' prefix, and exit with the given status code afterwards."""
    print_error(msg, loc=loc)
    sys.exit(status_code)

def len_ignore_leading_ansi(s: str) -> int:
    """Returns the length of the string or 0 if it starts with `\033[`"""
    return 0 if s.startswith("\033[") else len(s)

def ansilen(ss: Collection[str]) -> int:
    """Returns the length of all strings combined ignoring ansi control sequences"""
    return sum(map(len_ignore_leading_ansi, ss))

def ansipad(ss: Collection[str], pad: int = 0) -> str:
    """Joins an array of string and ansi codes together and pads the result with spaces to at least `pad` characters."""
    return ''.join(ss) + " " * max(0, pad - ansilen(ss))

def print_table(header: Collection[Collection[str]], rows: Collection[Collection[Collection[str]]], box_color: str = "\033[90m", **kwargs: Any) -> None:
    """
    Prints the given rows as an ascii box table. Column widths adapt to the
    content, but never exceed the terminal width split evenly between columns.
    """
    max_col_width = 60
    terminal_cols = max(shutil.get_terminal_size((100, 20)).columns, 80)

    cols = len(header)
    col_width = [0] * cols
    for i,v in enumerate(header):
        col_width[i] = max(col_width[i], ansilen(v))
    for row in rows:
        for i,v in enumerate(row):
            col_width[i] = max(col_width[i], ansilen(v))
    col_width = [min(w, max_col_width, terminal_cols // cols) for w in col_width]

    col_reset = col("\033[m")
    col_box = col(box_color)
    delim = col_box + " │ " + col_reset
    print(delim.join([ansipad(c, w) for c,w in zip(header, col_width)]), **kwargs)
    print(col_box + "─┼─".join(["─" * w for w in col_width]) + col_reset, **kwargs)
    for row in rows:
        print(delim.join([ansipad(c, w) for c,w in zip(row, col_width)]), **kwargs)

def format_human(x: float) -> str:
    """Formats a number with 6 significant digits for human readable tables."""
    if math.isinf(x):
        return "inf"
    return f"{x:.6g}"

def jsonable(obj: Any) -> Any:
    """
    Recursively converts the given object into something the json module accepts.
    Infinity is encoded as the string "inf", since json has no literal for it,
    and numpy scalars and arrays are converted to their python equivalents.

    Parameters
    ----------
    obj
        The object to convert.

    Returns
    -------
    Any
        A structure consisting only of dicts, lists, strings, bools, ints, floats and None.
    """
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k,v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            raise ValueError("Refusing to serialize NaN")
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj

def dump_json(obj: Any) -> str:
    """
    Serializes the given object as strict json. Floats use the shortest representation that
    round-trips to the same double, infinities the strings "inf" and "-inf".
    """
    return json.dumps(jsonable(obj), indent=2, allow_nan=False)

def float_from_json(value: Any, what: str) -> float:
    """Parses a float that may have been encoded by `jsonable`, raising InvalidParam on bad input."""
    if isinstance(value, str) and value in ("inf", "-inf"):
        return math.inf if value == "inf" else -math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidParam(f"{what} must be a number, not {type(value).__name__}")
    return float(value)

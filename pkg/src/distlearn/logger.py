"""
Provides logging utilities. All messages go to stderr, so that standard output
stays reserved for machine readable json and csv.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from types import TracebackType
from typing import Any, Optional, Type, cast

import distlearn

@dataclass
class State:
    """Global state for logging."""

    indentation_level: int = 0
    """The current global indentation level."""

state: State = State()
"""The global logger state."""

def _arg(name: str, default: Any) -> Any:
    """Returns the given cli argument, or the default when distlearn is used as a library."""
    if not isinstance(cast(Any, distlearn.args), argparse.Namespace):
        return default
    return getattr(distlearn.args, name, default)

def use_color() -> bool:
    """Returns true if color should be used."""
    if os.getenv("NO_COLOR") is not None:
        return False
    is_a_tty = hasattr(sys.stderr, 'isatty') and sys.stderr.isatty()
    return is_a_tty and not _arg("no_color", False)

def col(color_code: str) -> str:
    """Returns the given argument only if color is enabled."""
    return color_code if use_color() else ""

def is_debug() -> bool:
    """Returns true if debug output was requested."""
    return bool(_arg("debug", False))

def is_quiet() -> bool:
    """Returns true if informational output was suppressed."""
    return bool(_arg("quiet", False))

class IndentationContext:
    """A context manager to modify the indentation level."""
    def __enter__(self) -> None:
        state.indentation_level += 1

    def __exit__(self, exc_type: Optional[Type[BaseException]], exc: Optional[BaseException], traceback: Optional[TracebackType]) -> None:
        _ = (exc_type, exc, traceback)
        state.indentation_level -= 1

def indent() -> IndentationContext:
    """Returns a context manager that increases the indentation level."""
    return IndentationContext()

def indent_prefix() -> str:
    """Returns the indentation prefix for the current indentation level."""
    if not use_color():
        return "  " * state.indentation_level
    ret = ""
    for i in range(state.indentation_level):
        if i % 2 == 0:
            ret += "[90m│[m "
        else:
            ret += "[90m╵[m "
    return ret

def debug(msg: str) -> None:
    """Prints the given message only in debug mode."""
    if not is_debug():
        return

    print(f"   {col('[1;34m')}DEBUG{col('[m')}: {msg}", file=sys.stderr)

def debug_args(msg: str, args: dict[str, Any]) -> None:
    """Prints the given flags in debug mode, skipping those that were not given."""
    if not is_debug():
        return
    given = ", ".join(f"{k}={v}" for k, v in sorted(args.items()) if v is not None)
    print(f"   {col('[1;34m')}DEBUG{col('[m')}: {msg} {col('[90m')}{given}{col('[m')}", file=sys.stderr)

def print_indented(msg: str, **kwargs: Any) -> None:
    """Same as print() to stderr, but prefixes the message with the indentation prefix."""
    if is_quiet():
        return
    print(f"{indent_prefix()}{msg}", file=sys.stderr, **kwargs)

def verdict_str(passed: bool) -> str:
    """Returns a colored PASS or FAIL marker."""
    return f"{col('[1;32m')}PASS{col('[m')}" if passed else f"{col('[1;31m')}FAIL{col('[m')}"

def certificate(cert: Any) -> None:
    """Prints a short summary of a sample size certificate."""
    print_indented(f"{col('[1;34m')}sample-size{col('[m')} {cert.metric} {col('[90m')}({cert.theorem}){col('[m')} n={cert.n}")

def experiment_start(mode: str, config: Any) -> None:
    """Prints the experiment that is run next."""
    squared = "²" if config.squared else ""
    print_indented(f"{col('[33;1m')}{mode}{col('[m')} {config.metric}{squared} "
                   f"{col('[90m')}(k={config.k()}, n={config.n}, trials={config.trials}, seed={config.base_seed}, threads={config.threads}){col('[m')}")

def experiment_done(report: Any) -> None:
    """Prints the outcome of a finished experiment."""
    with indent():
        if report.mean is not None:
            print_indented(f"{col('[90m')}mean{col('[m')} {report.mean:.6g} {col('[90m')}± {report.std_err:.2g}{col('[m')}")
        if report.failure_rate is not None:
            print_indented(f"{col('[90m')}failure rate{col('[m')} {report.failure_rate:.6g} {col('[90m')}(upper {report.failure_rate_upper:.3g}){col('[m')}")
        for name, passed in report.verdict.items():
            print_indented(f"{verdict_str(passed)} {name}")

def criterion_result(name: str, passed: bool, detail: str) -> None:
    """Prints the result of an acceptance criterion."""
    print_indented(f"{verdict_str(passed)} {name} {col('[90m')}{detail}{col('[m')}")

"""
Console - tagged status lines on stderr
"""

import os
from typing import Optional

from rich.console import Console


def _quiet_from_env() -> bool:
    return os.getenv("CFSIM_QUIET", "").lower() in ("1", "true", "yes")


# Singleton instance
_console: Optional[Console] = None


def get_console() -> Console:
    global _console
    if _console is None:
        _console = Console(stderr=True, highlight=False, quiet=_quiet_from_env())
    return _console


def log(tag: str, message: str) -> None:
    """Print `[Tag] message`; markup is off so the tag prints literally"""
    get_console().print(f"[{tag}] {message}", markup=False)

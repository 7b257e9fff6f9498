"""Conversion of domain and I/O errors into diagnostics and exit codes."""

from __future__ import annotations

from collections.abc import Iterator
from contextlib import contextmanager

import typer
from rich.console import Console

from src.exceptions import FmlSimError, UsageError

USAGE_EXIT = 2

err_console = Console(stderr=True)


@contextmanager
def cli_errors() -> Iterator[None]:
    """Report a domain or I/O error on stderr and exit nonzero (2 for misuse)."""
    try:
        yield
    except UsageError as e:
        err_console.print(f"[red]usage error:[/red] {e}")
        raise typer.Exit(code=USAGE_EXIT) from e
    except (FmlSimError, OSError) as e:
        err_console.print(f"[red]error:[/red] {e}")
        raise typer.Exit(code=1) from e

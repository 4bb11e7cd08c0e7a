"""Shared helpers for CSV output."""

from __future__ import annotations

import contextlib
from typing import IO, Iterator



@contextlib.contextmanager
def text_output(target) -> Iterator[IO[str]]:
    """Yield a writable text stream for a path or pass an open stream through."""
    if hasattr(target, "write"):
        yield target
        return
    with open(target, "w", newline="") as fh:
        yield fh

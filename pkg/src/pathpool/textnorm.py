"""Answer-string normalization used by evaluation and query loading."""

from __future__ import annotations

import string

_STRIP_CHARS = string.punctuation + string.whitespace


def normalize_answer(text: str) -> str:
    """Lowercase, collapse whitespace, and strip surrounding punctuation."""
    collapsed = " ".join(text.lower().split())
    return collapsed.strip(_STRIP_CHARS)

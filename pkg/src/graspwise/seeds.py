"""Deterministic seed derivation, stable across processes and platforms."""

from __future__ import annotations

import hashlib


def derive_seed(*parts: object) -> int:
    """Hash the parts into a 64-bit seed; unlike hash(), never salted."""
    text = ":".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")

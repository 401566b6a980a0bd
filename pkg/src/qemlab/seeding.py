"""Stable seed derivation so every run is reproducible from one master seed."""

from __future__ import annotations

import hashlib


def derive_seed(master: int, *parts) -> int:
    """Hash (master, *parts) into a 63-bit seed, stable across platforms."""
    text = repr((int(master),) + tuple(parts)).encode()
    digest = hashlib.sha256(text).digest()
    return int.from_bytes(digest[:8], "big") >> 1

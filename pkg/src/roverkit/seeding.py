"""Stable derivation of per-item RNG seeds from a run seed and a label.

Python's builtin ``hash`` is salted per process, so reproducible
pipelines derive child seeds from a keyed blake2b digest instead.
"""

from __future__ import annotations

import hashlib

_SEP = b"\x1f"


def derive_seed(seed: int, label: str) -> int:
    """Map (run seed, label) to a stable 64-bit child seed."""
    digest = hashlib.blake2b(
        str(seed).encode("utf-8") + _SEP + label.encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big")

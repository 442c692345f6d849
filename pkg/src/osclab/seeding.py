"""Deterministic seed derivation.

All derived randomness in the toolkit flows through :func:`derive_seed`:
the parts are joined with ``":"`` into a UTF-8 string, hashed with SHA-256,
and the first 8 bytes (little-endian) become the child seed.  Keeping the
formula in one place makes every stream reproducible and documentable:

* per-candidate episodes use ``derive_seed(master, "gen", g, "cand", k)``
* observation-noise streams use ``derive_seed(config_seed, episode_seed, "noise")``
* disturbance-force streams use ``derive_seed(config_seed, episode_seed, "force")``
"""

from __future__ import annotations

import hashlib


def derive_seed(*parts) -> int:
    """Hash the parts into an independent 64-bit child seed."""
    text = ":".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")

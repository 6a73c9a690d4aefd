"""Deterministic random substreams.

Every source of randomness in a run is derived from the run seed plus a
tuple of string/int labels (e.g. ("local_train", round, node_id)), so
results do not depend on scheduling or iteration order.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np


def derive_seed(seed: int, *labels) -> int:
    """Hash (seed, labels...) into a 128-bit integer seed."""
    h = hashlib.sha256()
    h.update(struct.pack(">Q", seed & 0xFFFFFFFFFFFFFFFF))
    for label in labels:
        if isinstance(label, (int, np.integer)):
            v = int(label)
            h.update(b"i" + v.to_bytes((v.bit_length() + 16) // 8, "big", signed=True))
        elif isinstance(label, str):
            h.update(b"s" + label.encode("utf-8"))
        elif isinstance(label, bytes):
            h.update(b"b" + label)
        else:
            raise TypeError(f"unsupported substream label type: {type(label)!r}")
        h.update(b"\x00")
    return int.from_bytes(h.digest()[:16], "big")


def substream(seed: int, *labels) -> np.random.Generator:
    """Return a Generator for the named substream of the run seed."""
    return np.random.Generator(np.random.PCG64(derive_seed(seed, *labels)))

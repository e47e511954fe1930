"""Counter-based random streams.

Every random draw in the package flows from one root seed through named
substreams.  A substream is identified by the root seed plus a path of
labels (ints or strings); the pair is hashed into a 128-bit Philox key.
Two consequences matter:

* results are reproducible bit-for-bit from the seed alone, and
* substreams can be opened in any order (or concurrently) without
  affecting each other, so thread scheduling cannot change results.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

__all__ = ["StreamKey", "substream"]


def _encode_label(label) -> bytes:
    if isinstance(label, (int, np.integer)):
        return b"i" + int(label).to_bytes(16, "little", signed=True)
    if isinstance(label, str):
        return b"s" + label.encode("utf-8")
    raise TypeError(f"stream labels must be int or str, got {type(label).__name__}")


@dataclass(frozen=True)
class StreamKey:
    """A named position in the stream tree rooted at ``seed``."""

    seed: int
    path: tuple = ()

    def child(self, *labels) -> "StreamKey":
        """Derive a sub-key by appending labels to the path."""
        return StreamKey(self.seed, self.path + tuple(labels))

    def philox_key(self) -> int:
        """128-bit key for the Philox counter-based generator."""
        h = hashlib.sha256()
        h.update(_encode_label(self.seed))
        for label in self.path:
            h.update(b"/")
            h.update(_encode_label(label))
        return int.from_bytes(h.digest()[:16], "little")

    def generator(self) -> np.random.Generator:
        """Fresh generator for this key; identical keys give identical draws."""
        return np.random.Generator(np.random.Philox(key=self.philox_key()))


def substream(seed: int, *labels) -> np.random.Generator:
    """Shortcut for ``StreamKey(seed).child(*labels).generator()``."""
    return StreamKey(seed).child(*labels).generator()

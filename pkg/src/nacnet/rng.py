"""Seedable deterministic random byte generator.

All randomness in a scenario (keys, IVs, nonces, OAEP seeds) flows from one
:class:`DeterministicRng`, which makes every run replayable byte for byte.
The generator is SHA-256 in counter mode keyed by the seed.
"""

from __future__ import annotations

import hashlib
import secrets


class DeterministicRng:
    def __init__(self, seed: int | bytes | None = 0):
        if seed is None:
            seed = secrets.token_bytes(32)
        if isinstance(seed, int):
            seed = seed.to_bytes(16, "big", signed=True)
        self._key = hashlib.sha256(b"nacnet-drbg" + seed).digest()
        self._counter = 0
        self._buffer = b""

    def bytes(self, n: int) -> bytes:
        while len(self._buffer) < n:
            block = hashlib.sha256(self._key + self._counter.to_bytes(8, "big")).digest()
            self._counter += 1
            self._buffer += block
        out, self._buffer = self._buffer[:n], self._buffer[n:]
        return out

    def getrandbits(self, k: int) -> int:
        nbytes = (k + 7) // 8
        value = int.from_bytes(self.bytes(nbytes), "big")
        return value >> (nbytes * 8 - k)

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("n must be positive")
        k = n.bit_length()
        while True:
            r = self.getrandbits(k)
            if r < n:
                return r

    def randrange(self, start: int, stop: int) -> int:
        return start + self.randbelow(stop - start)

    def choice(self, seq):
        return seq[self.randbelow(len(seq))]

    def hex_id(self, nbytes: int = 8) -> str:
        return self.bytes(nbytes).hex()

    def fork(self, label: str) -> "DeterministicRng":
        """Derive an independent child stream; the parent stream is not consumed."""
        return DeterministicRng(hashlib.sha256(self._key + label.encode()).digest())

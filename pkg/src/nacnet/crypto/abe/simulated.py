"""Deterministic stand-in for CP-ABE.  NOT SECURE: for tests and desk-scale runs only.

The public parameters embed a secret from which every ciphertext key is
derived (HMAC over policy and a nonce), so anyone holding the parameters can
decrypt.  Access control is enforced only by the ``satisfies`` check that
precedes decapsulation.
"""

from __future__ import annotations

import hashlib
import hmac

from ...errors import PolicyNotSatisfied, ProviderError
from ..policy import render, satisfies


class SimulatedProvider:
    name = "simulated"

    def setup(self, rng) -> tuple[bytes, bytes]:
        master = rng.bytes(32)
        return hmac.new(master, b"public-params", hashlib.sha256).digest(), master

    def keygen(self, params: bytes, master: bytes, attrs, rng) -> bytes:
        if hmac.new(master, b"public-params", hashlib.sha256).digest() != params:
            raise ProviderError("master key does not match public parameters")
        return params

    def encapsulate(self, params: bytes, policy, rng) -> tuple[bytes, bytes]:
        nonce = rng.bytes(16)
        return self._derive(params, render(policy), nonce), nonce

    def decapsulate(self, userkey: bytes, attrs, policy, header: bytes) -> bytes:
        if not satisfies(set(attrs), policy):
            raise PolicyNotSatisfied("attributes do not satisfy policy")
        if len(userkey) != 32 or len(header) != 16:
            raise ProviderError("malformed simulated key material")
        return self._derive(userkey, render(policy), header)

    @staticmethod
    def _derive(secret: bytes, policy_text: str, nonce: bytes) -> bytes:
        return hmac.new(secret, policy_text.encode() + b"\x00" + nonce, hashlib.sha256).digest()

from __future__ import annotations

from typing import Protocol

from ..policy import PolicyExpr


class AbeProvider(Protocol):
    """Key-encapsulation view of a CP-ABE scheme.

    ``encapsulate`` returns a 32-byte symmetric key and an opaque header;
    ``decapsulate`` recovers the same key from a user key whose attributes
    satisfy the policy, and raises PolicyNotSatisfied or ProviderError otherwise.
    """

    name: str

    def setup(self, rng) -> tuple[bytes, bytes]: ...

    def keygen(self, params: bytes, master: bytes, attrs: list[str], rng) -> bytes: ...

    def encapsulate(self, params: bytes, policy: PolicyExpr, rng) -> tuple[bytes, bytes]: ...

    def decapsulate(self, userkey: bytes, attrs: list[str], policy: PolicyExpr, header: bytes) -> bytes: ...

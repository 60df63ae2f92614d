"""Shared machinery for entities running on the simulated network."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .errors import FetchTimeout, SignatureInvalid
from .netsim import Express, InterestTimeout, Network, NoRoute
from .wire import DataPacket, IdentityKeyPair, Name, sign_data, verify_data

KEY_FRESHNESS = 3_600_000
CONTENT_FRESHNESS = 10_000


@dataclass(frozen=True)
class RetryPolicy:
    """Consumer-side re-expression: lifetime doubles on each of ``retries`` retries."""

    retries: int = 3
    lifetime: int = 4000
    factor: int = 2


class CryptoOpCounter:
    """Per-entity tallies of cryptographic operations."""

    OPS = ("keygen_asym", "rsa_encrypt", "rsa_decrypt", "aes_encrypt", "aes_decrypt", "abe_setup",
           "abe_keygen", "abe_encrypt", "abe_decrypt", "sign", "verify")

    def __init__(self):
        self.by_entity: dict[str, Counter] = {}

    def for_entity(self, label: str) -> Counter:
        return self.by_entity.setdefault(label, Counter())

    def total(self, op: str) -> int:
        return sum(c[op] for c in self.by_entity.values())

    def snapshot(self) -> dict[str, dict[str, int]]:
        return {label: {op: c[op] for op in self.OPS} for label, c in sorted(self.by_entity.items())}


class TrustStore:
    """Pre-provisioned signer certificates with a hierarchical trust rule.

    A Data packet is trusted when its KeyLocator names a known key and the
    key's identity is a prefix of the Data name.
    """

    def __init__(self):
        self._keys: dict[Name, bytes] = {}

    def add(self, identity: IdentityKeyPair) -> None:
        self._keys[identity.key_name] = identity.public_key

    def verify(self, data: DataPacket, ops=None) -> bool:
        key = self._keys.get(data.key_locator)
        if key is None or len(data.key_locator) < 2:
            return False
        if not data.key_locator[:-2].is_prefix_of(data.name):
            return False
        return verify_data(data, key, ops)


class Application:
    """An entity attached to one node; talks to the network only through Interest/Data."""

    def __init__(self, net: Network, node: str, identity: IdentityKeyPair, trust: TrustStore, rng,
                 ops: Counter | None = None, retry: RetryPolicy | None = None, label: str = ""):
        self.net = net
        self.node = node
        self.identity = identity
        self.trust = trust
        self.rng = rng
        self.ops = ops if ops is not None else Counter()
        self.retry = retry or RetryPolicy()
        self.label = label or identity.identity_name.to_uri()
        # (name uri, purpose) of every Interest this entity expressed
        self.interest_log: list[tuple[str, str]] = []
        trust.add(identity)

    def fetch(self, name: Name, can_be_prefix: bool = False, purpose: str = ""):
        """Process step: retrieve Data for ``name`` with retries; raises FetchTimeout."""
        lifetime = self.retry.lifetime
        for _ in range(self.retry.retries + 1):
            interest = self.net.make_interest(name, can_be_prefix, lifetime)
            self.interest_log.append((interest.name.to_uri(), purpose))
            try:
                return (yield Express(self.node, interest))
            except InterestTimeout:
                lifetime *= self.retry.factor
            except NoRoute:
                break
        raise FetchTimeout(f"{name} unreachable")

    def verify(self, data: DataPacket) -> DataPacket:
        if not self.trust.verify(data, self.ops):
            raise SignatureInvalid(f"signature check failed for {data.name}")
        return data

    def sign(self, name: Name, content: bytes, freshness: int) -> DataPacket:
        return sign_data(name, content, freshness, self.identity, self.ops)

    def publish(self, data: DataPacket) -> DataPacket:
        self.net.publish(self.node, data)
        return data

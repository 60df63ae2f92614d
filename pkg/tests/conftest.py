import pytest

from nacnet.app import TrustStore
from nacnet.crypto.rsa import generate_rsa_keypair
from nacnet.netsim import build_topology
from nacnet.rng import DeterministicRng
from nacnet.wire import IdentityKeyPair, Name


class World:
    """Small hand-built network with helpers for creating entities."""

    def __init__(self, topology: dict, seed: int = 7):
        self.net = build_topology(topology, seed=seed)
        self.rng = DeterministicRng(seed).fork("test-entities")
        self.trust = TrustStore()

    def identity(self, prefix: str) -> IdentityKeyPair:
        return IdentityKeyPair.generate(Name(prefix), self.rng.fork("id:" + prefix))

    def make(self, cls, node: str, ident: str, tag: str = "", **kw):
        rng = self.rng.fork("ent:" + ident + tag)
        return cls(self.net, node, self.identity(ident), self.trust, rng, **kw)

    def rsa(self, label: str):
        return generate_rsa_keypair(self.rng.fork("rsa:" + label))


LINE = {
    "nodes": [
        {"id": "mgr", "prefixes": ["/mgr", "/auth"]},
        {"id": "gw"},
        {"id": "prod", "prefixes": ["/prod"]},
        {"id": "cons"},
    ],
    "links": [
        {"a": "mgr", "b": "gw", "delay_ms": 20},
        {"a": "gw", "b": "prod", "delay_ms": 10},
        {"a": "gw", "b": "cons", "delay_ms": 5},
    ],
    "auto_routes": True,
}


@pytest.fixture
def world():
    return World(LINE)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])

"""On-path adversaries attached to simulated links: a tamperer, an eavesdropper, a flooder."""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field

from .. import tlv
from ..errors import MalformedPacket, NacError
from ..naming import classify
from ..netsim import Link
from ..rng import DeterministicRng
from ..wire import T_DATA, T_KEY_LOCATOR, T_META_INFO, T_NAME, T_SIGNATURE_INFO, DataPacket, decode_packet
from .runner import Scenario

# containers whose children are walked; everything else is a leaf
_NESTED = {T_META_INFO, T_SIGNATURE_INFO, T_KEY_LOCATOR, T_NAME}


def _leaf_values(buf: bytes, start: int, end: int, out: list[int]) -> None:
    pos = start
    while pos < end:
        t, pos = tlv.decode_varnum(buf, pos)
        length, pos = tlv.decode_varnum(buf, pos)
        if t in _NESTED:
            _leaf_values(buf, pos, pos + length, out)
        else:
            out.extend(range(pos, pos + length))
        pos += length


def mutable_offsets(wire: bytes) -> list[int]:
    """Byte offsets of leaf values in a Data packet outside its Name.

    Flipping one of these keeps the TLV framing intact, so the forwarder
    still delivers the packet and the receiver's checks decide its fate.
    """
    t, pos = tlv.decode_varnum(wire, 0)
    if t != T_DATA:
        return []
    length, pos = tlv.decode_varnum(wire, pos)
    end = pos + length
    _, after_type = tlv.decode_varnum(wire, pos)
    name_len, name_start = tlv.decode_varnum(wire, after_type)
    out: list[int] = []
    _leaf_values(wire, name_start + name_len, end, out)
    return out


@dataclass
class MutatingTap:
    """Flip one byte of the first matching Data packet sent by ``sender``, then go quiet."""

    rng: DeterministicRng
    sender: str
    target_type: str
    fired: bool = False
    mutated_name: str = ""

    def __call__(self, link: Link, sender: str, wire: bytes) -> bytes:
        if self.fired or sender != self.sender:
            return wire
        try:
            pkt = decode_packet(wire)
        except MalformedPacket:
            return wire
        if not isinstance(pkt, DataPacket) or classify(pkt.name) != self.target_type:
            return wire
        offsets = mutable_offsets(wire)
        while True:
            i = offsets[self.rng.randbelow(len(offsets))]
            mutant = bytearray(wire)
            mutant[i] ^= 1 + self.rng.randbelow(255)
            try:
                decode_packet(bytes(mutant))
            except MalformedPacket:
                continue  # e.g. a SignatureType value no decoder accepts; draw again
            break
        self.fired = True
        self.mutated_name = pkt.name.to_uri()
        return bytes(mutant)


@dataclass
class RecordingTap:
    """Passive eavesdropper: keeps every frame crossing the link."""

    frames: list[tuple[str, bytes]] = field(default_factory=list)

    def __call__(self, link: Link, sender: str, wire: bytes) -> bytes:
        self.frames.append((sender, wire))
        return wire


@dataclass
class TamperResult:
    trials: int
    outcomes: Counter
    by_target: dict[str, Counter]
    wrong_plaintext: int
    not_fired: int

    @property
    def detected(self) -> int:
        return self.outcomes["SignatureInvalid"] + self.outcomes["DecryptFailed"]

    def to_dict(self) -> dict:
        return {"trials": self.trials, "detected": self.detected, "wrong_plaintext": self.wrong_plaintext,
                "not_fired": self.not_fired, "outcomes": dict(sorted(self.outcomes.items())),
                "by_target": {k: dict(sorted(v.items())) for k, v in sorted(self.by_target.items())}}


def run_tamper_trials(cfg, consumer: str, link: tuple[str, str], trials: int = 500, seed: int = 0,
                      targets=("content", "ck", "kdk")) -> TamperResult:
    """Play ``cfg``, then repeat one cold-cache consume per trial with one in-flight mutation.

    ``link`` is ``(sender, receiver)``: the tap corrupts Data sent by the
    first node toward the second.  Trials cycle through ``targets`` and the
    content names ``consumer`` successfully read during the scripted run.
    """
    scenario = Scenario(cfg, trace=False)
    report = scenario.run()
    names = [o["name"] for o in report.outcomes
             if o["action"] == "consume" and o["entity"] == consumer and o["result"] == "ok"]
    if not names:
        raise ValueError(f"{consumer} read nothing in the scripted run")
    dec = scenario.entities[consumer]
    net = scenario.net
    target_link = net.link(*link)
    rng = DeterministicRng(seed).fork("tamper")
    outcomes: Counter = Counter()
    by_target: dict[str, Counter] = {t: Counter() for t in targets}
    wrong = not_fired = 0
    for k in range(trials):
        target = targets[k % len(targets)]
        name = names[(k // len(targets)) % len(names)]
        net.clear_caches()
        dec.ck_plain_cache.clear()
        getattr(dec, "kdk_cache", {}).clear()
        tap = MutatingTap(rng.fork(f"trial:{k}"), link[0], target)
        target_link.taps.append(tap)
        try:
            plaintext = net.run(dec.consume(name))
            result = "ok"
        except NacError as err:
            result = type(err).__name__
            plaintext = None
        finally:
            target_link.taps.remove(tap)
        if not tap.fired:
            not_fired += 1
        if plaintext is not None and hashlib.sha256(plaintext).hexdigest() != report.produced[name]:
            wrong += 1
            result = "WrongPlaintext"
        outcomes[result] += 1
        by_target[target][result] += 1
    return TamperResult(trials, outcomes, by_target, wrong, not_fired)


def eavesdrop(cfg, seed: int | None = None) -> tuple[Scenario, dict[str, RecordingTap]]:
    """Run ``cfg`` with a recording tap on every link."""
    scenario = Scenario(cfg, seed)
    taps = {}
    for link in scenario.net.links:
        taps[link.label] = RecordingTap()
        link.taps.append(taps[link.label])
    scenario.run()
    return scenario, taps

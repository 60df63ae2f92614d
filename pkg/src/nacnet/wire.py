"""Names, Interest/Data packets, TLV wire format and Data signing.

The byte layout is documented in ``docs/wire.md``.  Packets are immutable
values; :func:`encode_packet` and :func:`decode_packet` are exact inverses on
well-formed packets.
"""

from __future__ import annotations

import enum
import string
from dataclasses import dataclass, field
from typing import Iterable, Union

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import ec

from . import tlv
from .errors import MalformedPacket

# TLV type numbers (see docs/wire.md)
T_INTEREST = 0x05
T_DATA = 0x06
T_NAME = 0x07
T_COMPONENT = 0x08
T_NONCE = 0x0A
T_INTEREST_LIFETIME = 0x0C
T_META_INFO = 0x14
T_CONTENT = 0x15
T_SIGNATURE_INFO = 0x16
T_SIGNATURE_VALUE = 0x17
T_FRESHNESS_PERIOD = 0x19
T_SIGNATURE_TYPE = 0x1B
T_KEY_LOCATOR = 0x1C
T_CAN_BE_PREFIX = 0x21

Component = bytes

# Characters left unescaped in URI form; everything else is %XX.
_URI_SAFE = frozenset((string.ascii_letters + string.digits + "-._~()!$&'*+,;=:@").encode())


def _component_to_uri(comp: bytes) -> str:
    if comp and all(c == 0x2E for c in comp) or comp == b"":
        # an all-period component gets three extra periods; empty becomes "..."
        return "." * (len(comp) + 3)
    return "".join(chr(c) if c in _URI_SAFE else f"%{c:02X}" for c in comp)


def _component_from_uri(text: str) -> bytes:
    out = bytearray()
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "%":
            try:
                out.append(int(text[i + 1:i + 3], 16))
            except ValueError:
                raise ValueError(f"bad percent-escape in {text!r}") from None
            if len(text[i + 1:i + 3]) != 2:
                raise ValueError(f"bad percent-escape in {text!r}")
            i += 3
        else:
            out.extend(ch.encode("utf-8"))
            i += 1
    if out and all(c == 0x2E for c in out):
        if len(out) < 3:
            raise ValueError(f"illegal component {text!r}")
        del out[:3]
    return bytes(out)


class Name:
    """Hierarchical name: an immutable sequence of byte-string components."""

    __slots__ = ("_components",)

    def __init__(self, value: Union[str, "Name", Iterable[bytes | str], None] = None):
        if value is None:
            comps: tuple[bytes, ...] = ()
        elif isinstance(value, Name):
            comps = value._components
        elif isinstance(value, str):
            comps = Name._parse(value)
        else:
            comps = tuple(c.encode() if isinstance(c, str) else bytes(c) for c in value)
        self._components = comps

    @staticmethod
    def _parse(uri: str) -> tuple[bytes, ...]:
        if uri.startswith("ndn:"):
            uri = uri[4:]
        if not uri.startswith("/"):
            raise ValueError(f"name URI must start with '/': {uri!r}")
        parts = [p for p in uri.split("/")[1:] if p != ""]
        return tuple(_component_from_uri(p) for p in parts)

    @classmethod
    def parse_uri(cls, uri: str) -> "Name":
        return cls(uri)

    @property
    def components(self) -> tuple[bytes, ...]:
        return self._components

    def to_uri(self) -> str:
        if not self._components:
            return "/"
        return "".join("/" + _component_to_uri(c) for c in self._components)

    __str__ = to_uri

    def __repr__(self) -> str:
        return f"Name({self.to_uri()!r})"

    def __len__(self) -> int:
        return len(self._components)

    def __iter__(self):
        return iter(self._components)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return Name(self._components[item])
        return self._components[item]

    def __eq__(self, other) -> bool:
        return isinstance(other, Name) and self._components == other._components

    def __lt__(self, other: "Name") -> bool:
        return self._components < other._components

    def __hash__(self) -> int:
        return hash(self._components)

    def __add__(self, other) -> "Name":
        if isinstance(other, Name):
            return Name(self._components + other._components)
        if isinstance(other, (bytes, str)):
            return self.append(other)
        return Name(self._components + Name(other)._components)

    def append(self, comp: bytes | str) -> "Name":
        return Name(self._components + (comp.encode() if isinstance(comp, str) else bytes(comp),))

    def is_prefix_of(self, other: "Name") -> bool:
        n = len(self._components)
        return other._components[:n] == self._components

    def index_of(self, comp: bytes, start: int = 0) -> int:
        """Position of the first ``comp`` at or after ``start``, or -1."""
        for i in range(start, len(self._components)):
            if self._components[i] == comp:
                return i
        return -1


def is_prefix(a: Name, b: Name) -> bool:
    return a.is_prefix_of(b)


class SignatureType(enum.IntEnum):
    SHA256_ECDSA = 3


@dataclass(frozen=True)
class InterestPacket:
    name: Name
    can_be_prefix: bool = False
    lifetime: int = 4000
    nonce: int = 0


@dataclass(frozen=True)
class DataPacket:
    name: Name
    content: bytes = b""
    freshness_period: int = 10_000
    key_locator: Name = field(default_factory=Name)
    signature_type: int = SignatureType.SHA256_ECDSA
    signature_value: bytes = b""


Packet = Union[InterestPacket, DataPacket]


# ---------------------------------------------------------------- encoding

def encode_name(name: Name) -> bytes:
    return tlv.encode_tlv(T_NAME, b"".join(tlv.encode_tlv(T_COMPONENT, c) for c in name))


def decode_name_value(value: bytes) -> Name:
    comps = []
    for t, v in tlv.iter_tlvs(value):
        if t != T_COMPONENT:
            raise MalformedPacket(f"unexpected TLV {t:#x} inside Name")
        comps.append(v)
    return Name(comps)


def decode_name(buf: bytes) -> Name:
    t, v = tlv.read_single(buf)
    if t != T_NAME:
        raise MalformedPacket("expected Name TLV")
    return decode_name_value(v)


def _signed_portion(pkt: DataPacket) -> bytes:
    meta = tlv.encode_tlv(T_META_INFO, tlv.encode_tlv(T_FRESHNESS_PERIOD, tlv.encode_nonneg(pkt.freshness_period)))
    sig_info = tlv.encode_tlv(
        T_SIGNATURE_INFO,
        tlv.encode_tlv(T_SIGNATURE_TYPE, tlv.encode_nonneg(int(pkt.signature_type)))
        + tlv.encode_tlv(T_KEY_LOCATOR, encode_name(pkt.key_locator)),
    )
    return encode_name(pkt.name) + meta + tlv.encode_tlv(T_CONTENT, pkt.content) + sig_info


def encode_packet(pkt: Packet) -> bytes:
    if isinstance(pkt, InterestPacket):
        body = encode_name(pkt.name)
        if pkt.can_be_prefix:
            body += tlv.encode_tlv(T_CAN_BE_PREFIX, b"")
        body += tlv.encode_tlv(T_NONCE, pkt.nonce.to_bytes(4, "big"))
        body += tlv.encode_tlv(T_INTEREST_LIFETIME, tlv.encode_nonneg(pkt.lifetime))
        return tlv.encode_tlv(T_INTEREST, body)
    body = _signed_portion(pkt) + tlv.encode_tlv(T_SIGNATURE_VALUE, pkt.signature_value)
    return tlv.encode_tlv(T_DATA, body)


def _decode_interest(value: bytes) -> InterestPacket:
    f = tlv.decode_fields(
        value,
        {T_NAME: "Name", T_CAN_BE_PREFIX: "CanBePrefix", T_NONCE: "Nonce", T_INTEREST_LIFETIME: "InterestLifetime"},
        required={T_NAME, T_NONCE, T_INTEREST_LIFETIME},
    )
    if T_CAN_BE_PREFIX in f and f[T_CAN_BE_PREFIX] != b"":
        raise MalformedPacket("CanBePrefix must be empty")
    if len(f[T_NONCE]) != 4:
        raise MalformedPacket("Nonce must be 4 bytes")
    return InterestPacket(
        name=decode_name_value(f[T_NAME]),
        can_be_prefix=T_CAN_BE_PREFIX in f,
        lifetime=tlv.decode_nonneg(f[T_INTEREST_LIFETIME]),
        nonce=int.from_bytes(f[T_NONCE], "big"),
    )


def _decode_data(value: bytes) -> DataPacket:
    f = tlv.decode_fields(
        value,
        {T_NAME: "Name", T_META_INFO: "MetaInfo", T_CONTENT: "Content",
         T_SIGNATURE_INFO: "SignatureInfo", T_SIGNATURE_VALUE: "SignatureValue"},
        required={T_NAME, T_META_INFO, T_CONTENT, T_SIGNATURE_INFO, T_SIGNATURE_VALUE},
    )
    meta = tlv.decode_fields(f[T_META_INFO], {T_FRESHNESS_PERIOD: "FreshnessPeriod"}, required={T_FRESHNESS_PERIOD})
    sig = tlv.decode_fields(
        f[T_SIGNATURE_INFO], {T_SIGNATURE_TYPE: "SignatureType", T_KEY_LOCATOR: "KeyLocator"},
        required={T_SIGNATURE_TYPE, T_KEY_LOCATOR},
    )
    return DataPacket(
        name=decode_name_value(f[T_NAME]),
        content=f[T_CONTENT],
        freshness_period=tlv.decode_nonneg(meta[T_FRESHNESS_PERIOD]),
        key_locator=decode_name(sig[T_KEY_LOCATOR]),
        signature_type=tlv.decode_nonneg(sig[T_SIGNATURE_TYPE]),
        signature_value=f[T_SIGNATURE_VALUE],
    )


def decode_packet(buf: bytes) -> Packet:
    if not buf:
        raise MalformedPacket("empty buffer")
    t, value = tlv.read_single(bytes(buf))
    if t == T_INTEREST:
        return _decode_interest(value)
    if t == T_DATA:
        return _decode_data(value)
    raise MalformedPacket(f"unknown packet type {t:#x}")


# ---------------------------------------------------------------- signing

@dataclass(frozen=True)
class IdentityKeyPair:
    """ECDSA P-256 key pair bound to an identity name.

    ``public_key`` is the uncompressed SEC1 point, ``private_key`` the 32-byte
    big-endian scalar.
    """

    identity_name: Name
    key_id: bytes
    public_key: bytes
    private_key: bytes = field(repr=False)

    @property
    def key_name(self) -> Name:
        return self.identity_name + Name([b"KEY", self.key_id])

    @classmethod
    def generate(cls, identity_name: Name, rng) -> "IdentityKeyPair":
        order = 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551
        scalar = 1 + rng.randbelow(order - 1)
        priv = ec.derive_private_key(scalar, ec.SECP256R1())
        pub = priv.public_key().public_bytes(
            serialization.Encoding.X962, serialization.PublicFormat.UncompressedPoint
        )
        return cls(Name(identity_name), rng.hex_id().encode(), pub, scalar.to_bytes(32, "big"))


def _ecdsa():
    return ec.ECDSA(hashes.SHA256(), deterministic_signing=True)


def sign_data(name: Name, content: bytes, freshness: int, signer: IdentityKeyPair, ops=None) -> DataPacket:
    unsigned = DataPacket(name=Name(name), content=bytes(content), freshness_period=freshness,
                          key_locator=signer.key_name, signature_type=SignatureType.SHA256_ECDSA)
    priv = ec.derive_private_key(int.from_bytes(signer.private_key, "big"), ec.SECP256R1())
    sig = priv.sign(_signed_portion(unsigned), _ecdsa())
    if ops is not None:
        ops["sign"] += 1
    return DataPacket(unsigned.name, unsigned.content, freshness, unsigned.key_locator,
                      SignatureType.SHA256_ECDSA, sig)


def verify_data(pkt: DataPacket, public_key: bytes, ops=None) -> bool:
    if ops is not None:
        ops["verify"] += 1
    if pkt.signature_type != SignatureType.SHA256_ECDSA:
        return False
    try:
        pub = ec.EllipticCurvePublicKey.from_encoded_point(ec.SECP256R1(), public_key)
        pub.verify(pkt.signature_value, _signed_portion(pkt), ec.ECDSA(hashes.SHA256()))
    except (InvalidSignature, ValueError, TypeError):
        return False
    return True

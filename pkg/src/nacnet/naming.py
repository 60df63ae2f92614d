"""Construction and parsing of every NAC / NAC-ABE key name.

Conventions (``<...>`` are multi-component prefixes, ``{...}`` single components)::

    KEK            <manager>/NAC/<granularity>/KEK/{key-id}
    KDK            <manager>/NAC/<granularity>/KDK/{key-id}
    KDK Data       <KDK>/ENCRYPTED-BY/<decryptor>/KEY/{decryptor key-id}
    CK             <producer>/CK/{ck-id}
    CK Data        <CK>/ENCRYPTED-BY/<KEK>
    attribute      <authority>/ATTRIBUTE/{attribute}/ENCRYPTED-BY/<decryptor>/KEY/{key-id}
    notification   <manager>/NAC/<granularity>/NOTIFY/{epoch}

Marker components are forbidden inside every multi-component prefix, which
makes each rendering parse back unambiguously.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NameConventionViolation, NotAConventionName
from .wire import Name

NAC = b"NAC"
KEK = b"KEK"
KDK = b"KDK"
CK = b"CK"
ENCRYPTED_BY = b"ENCRYPTED-BY"
KEY = b"KEY"
ATTRIBUTE = b"ATTRIBUTE"
NOTIFY = b"NOTIFY"

RESERVED_MARKERS = frozenset({NAC, KEK, KDK, CK, ENCRYPTED_BY, KEY, ATTRIBUTE, NOTIFY})


def _comp(value: bytes | str) -> bytes:
    comp = value.encode() if isinstance(value, str) else bytes(value)
    if not comp:
        raise NameConventionViolation("empty identifier component")
    return comp


def check_prefix(prefix: Name | str, what: str = "prefix") -> Name:
    """Validate a multi-component prefix: non-empty and free of marker components."""
    prefix = Name(prefix)
    if len(prefix) == 0:
        raise NameConventionViolation(f"{what} must be non-empty")
    bad = [c for c in prefix if c in RESERVED_MARKERS]
    if bad:
        raise NameConventionViolation(f"{what} {prefix} contains reserved marker {bad[0].decode()}")
    return prefix


def _parse_prefix(name: Name, what: str) -> Name:
    try:
        return check_prefix(name, what)
    except NameConventionViolation as err:
        raise NotAConventionName(str(err)) from None


def _expect(name: Name, pos: int, marker: bytes) -> None:
    if pos >= len(name) or name[pos] != marker:
        raise NotAConventionName(f"{name}: expected {marker.decode()} at component {pos}")


@dataclass(frozen=True)
class KekName:
    manager_prefix: Name
    granularity: Name
    key_id: bytes

    @property
    def name(self) -> Name:
        return self.manager_prefix + Name([NAC]) + self.granularity + Name([KEK, self.key_id])

    def to_kdk(self) -> "KdkName":
        return KdkName(self.manager_prefix, self.granularity, self.key_id)

    @classmethod
    def parse(cls, name: Name) -> "KekName":
        mgr, gran, marker, key_id = _parse_manager_key(Name(name), 2)
        if marker != KEK:
            raise NotAConventionName(f"{name}: not a KEK name")
        return cls(mgr, gran, key_id)


@dataclass(frozen=True)
class KdkName:
    manager_prefix: Name
    granularity: Name
    key_id: bytes

    @property
    def name(self) -> Name:
        return self.manager_prefix + Name([NAC]) + self.granularity + Name([KDK, self.key_id])

    def to_kek(self) -> KekName:
        return KekName(self.manager_prefix, self.granularity, self.key_id)


def _parse_manager_key(name: Name, tail: int):
    """Split ``<mgr>/NAC/<gran>/{marker}/{key-id}`` where the marker sits ``tail`` from the end."""
    i = name.index_of(NAC)
    if i < 1:
        raise NotAConventionName(f"{name}: no NAC marker after a manager prefix")
    end = len(name) - tail
    if end <= i + 1:
        raise NotAConventionName(f"{name}: missing granularity")
    mgr = _parse_prefix(name[:i], "manager prefix")
    gran = _parse_prefix(name[i + 1:end], "granularity")
    return mgr, gran, name[end], name[end + 1]


@dataclass(frozen=True)
class KdkDataName:
    kdk: KdkName
    decryptor_prefix: Name
    decryptor_key_id: bytes

    @property
    def name(self) -> Name:
        return (self.kdk.name + Name([ENCRYPTED_BY]) + self.decryptor_prefix
                + Name([KEY, self.decryptor_key_id]))

    @classmethod
    def parse(cls, name: Name) -> "KdkDataName":
        name = Name(name)
        j = name.index_of(ENCRYPTED_BY)
        if j < 0:
            raise NotAConventionName(f"{name}: missing ENCRYPTED-BY")
        mgr, gran, marker, key_id = _parse_manager_key(name[:j], 2)
        if marker != KDK:
            raise NotAConventionName(f"{name}: not a KDK Data name")
        if len(name) < j + 4:
            raise NotAConventionName(f"{name}: truncated decryptor key name")
        _expect(name, len(name) - 2, KEY)
        dec = _parse_prefix(name[j + 1:len(name) - 2], "decryptor prefix")
        return cls(KdkName(mgr, gran, key_id), dec, name[-1])


@dataclass(frozen=True)
class CkName:
    producer_prefix: Name
    ck_id: bytes

    @property
    def name(self) -> Name:
        return self.producer_prefix + Name([CK, self.ck_id])

    @classmethod
    def parse(cls, name: Name) -> "CkName":
        name = Name(name)
        if len(name) < 3 or name[-2] != CK:
            raise NotAConventionName(f"{name}: not a CK name")
        return cls(_parse_prefix(name[:-2], "producer prefix"), name[-1])


@dataclass(frozen=True)
class CkDataName:
    ck: CkName
    kek: KekName

    @property
    def name(self) -> Name:
        return self.ck.name + Name([ENCRYPTED_BY]) + self.kek.name

    @classmethod
    def parse(cls, name: Name) -> "CkDataName":
        name = Name(name)
        i = name.index_of(CK)
        if i < 1:
            raise NotAConventionName(f"{name}: no CK marker")
        if len(name) < i + 3 or name[i + 2] != ENCRYPTED_BY:
            raise NotAConventionName(f"{name}: missing ENCRYPTED-BY after CK id")
        ck = CkName(_parse_prefix(name[:i], "producer prefix"), name[i + 1])
        return cls(ck, KekName.parse(name[i + 3:]))


@dataclass(frozen=True)
class AttributeInterestName:
    authority_prefix: Name
    attribute: bytes
    decryptor_prefix: Name
    decryptor_key_id: bytes

    @property
    def name(self) -> Name:
        return (self.authority_prefix + Name([ATTRIBUTE, self.attribute, ENCRYPTED_BY])
                + self.decryptor_prefix + Name([KEY, self.decryptor_key_id]))

    @classmethod
    def parse(cls, name: Name) -> "AttributeInterestName":
        name = Name(name)
        i = name.index_of(ATTRIBUTE)
        if i < 1:
            raise NotAConventionName(f"{name}: no ATTRIBUTE marker")
        if len(name) < i + 6:
            raise NotAConventionName(f"{name}: truncated attribute name")
        _expect(name, i + 2, ENCRYPTED_BY)
        _expect(name, len(name) - 2, KEY)
        return cls(
            _parse_prefix(name[:i], "authority prefix"),
            name[i + 1],
            _parse_prefix(name[i + 3:len(name) - 2], "decryptor prefix"),
            name[-1],
        )


@dataclass(frozen=True)
class NotifyName:
    manager_prefix: Name
    granularity: Name
    epoch: int

    @property
    def name(self) -> Name:
        return self.manager_prefix + Name([NAC]) + self.granularity + Name([NOTIFY, str(self.epoch).encode()])

    @classmethod
    def parse(cls, name: Name) -> "NotifyName":
        mgr, gran, marker, epoch = _parse_manager_key(Name(name), 2)
        if marker != NOTIFY or not epoch.isdigit():
            raise NotAConventionName(f"{name}: not a notification name")
        return cls(mgr, gran, int(epoch))


# ------------------------------------------------------------ operations

def make_kek_name(manager: Name | str, granularity: Name | str, key_id: bytes | str) -> KekName:
    return KekName(check_prefix(manager, "manager prefix"), check_prefix(granularity, "granularity"), _comp(key_id))


def parse_kek_name(name: Name) -> KekName:
    return KekName.parse(name)


def make_kdk_name(manager: Name | str, granularity: Name | str, key_id: bytes | str) -> KdkName:
    return make_kek_name(manager, granularity, key_id).to_kdk()


def kek_interest_name(manager: Name | str, granularity: Name | str) -> Name:
    """Discovery Interest name for the live KEK of a granularity (use with CanBePrefix)."""
    return check_prefix(manager, "manager prefix") + Name([NAC]) + check_prefix(granularity, "granularity") + Name([KEK])


def kek_to_kdk_data_name(kek: KekName, decryptor_prefix: Name | str, decryptor_key_id: bytes | str) -> KdkDataName:
    return KdkDataName(kek.to_kdk(), check_prefix(decryptor_prefix, "decryptor prefix"), _comp(decryptor_key_id))


def parse_kdk_data_name(name: Name) -> KdkDataName:
    return KdkDataName.parse(name)


def make_ck_name(producer: Name | str, ck_id: bytes | str) -> CkName:
    return CkName(check_prefix(producer, "producer prefix"), _comp(ck_id))


def make_ck_data_name(ck: CkName, kek: KekName) -> CkDataName:
    return CkDataName(ck, kek)


def parse_ck_data_name(name: Name) -> tuple[CkName, KekName]:
    parsed = CkDataName.parse(name)
    return parsed.ck, parsed.kek


def make_attribute_interest_name(authority: Name | str, attribute: str | bytes,
                                 decryptor_prefix: Name | str, decryptor_key_id: bytes | str) -> AttributeInterestName:
    attr = _comp(attribute)
    if b"/" in attr:
        raise NameConventionViolation(f"attribute {attr!r} must be a single name component")
    return AttributeInterestName(check_prefix(authority, "authority prefix"), attr,
                                 check_prefix(decryptor_prefix, "decryptor prefix"), _comp(decryptor_key_id))


def parse_attribute_interest_name(name: Name) -> AttributeInterestName:
    return AttributeInterestName.parse(name)


def classify(name: Name) -> str:
    """Packet-type label for reports: kek, kdk, ck, attribute-key, notify or content."""
    name = Name(name)
    for label, parser in (("kek", KekName.parse), ("kdk", KdkDataName.parse), ("ck", CkDataName.parse),
                          ("attribute-key", AttributeInterestName.parse), ("notify", NotifyName.parse)):
        try:
            parser(name)
        except NotAConventionName:
            continue
        return label
    return "content"

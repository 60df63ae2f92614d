"""The three NAC roles: access manager, encryptor and decryptor.

Network-facing operations (``Encryptor.produce``, ``Decryptor.consume``,
``Encryptor.poll_notifications``) are generator processes; run them with
``net.run(...)`` or ``net.spawn(...)``.  Every key Interest they express is
derived from configured prefixes, the entity's own identity, or names found
in packets it has already received.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from cryptography.hazmat.primitives import serialization

from .app import CONTENT_FRESHNESS, KEY_FRESHNESS, Application
from .crypto.envelope import EncryptedEnvelope
from .crypto.rsa import HybridEnvelope, KekKeyPair, RsaKeyPair, generate_kek_kdk, hybrid_unwrap, hybrid_wrap
from .crypto.rsa import unwrap_key, wrap_key
from .crypto.symmetric import ContentKey, decrypt_content, encrypt_content, generate_ck
from .errors import (
    DecryptFailed, DuplicateGranularity, FetchTimeout, InvalidState, KekUnavailable, NameConventionViolation,
    NotAConventionName, NotAuthorized, SignatureInvalid, UnknownGranularity,
)
from .naming import (
    NAC, NOTIFY, CkDataName, CkName, KdkName, KekName, NotifyName, check_prefix, kek_interest_name, kek_to_kdk_data_name,
    make_ck_name, make_kek_name,
)
from .payloads import ContentPayload, decode_notification, encode_notification
from .wire import DataPacket, Name

DEFAULT_EPOCH_DURATION = 24 * 3_600_000


@dataclass(frozen=True)
class DecryptorCredential:
    """What an access manager knows about a decryptor: its prefix and RSA encryption key."""

    prefix: Name
    key_id: bytes
    public_key: bytes


@dataclass
class AccessPolicyEntry:
    granularity: Name
    authorized: list[DecryptorCredential]
    epoch: int
    kek_kdk: KekKeyPair
    history: list[KekKeyPair] = field(default_factory=list)


class AccessManager(Application):
    def __init__(self, *args, prefix: Name | str, epoch_duration: int = DEFAULT_EPOCH_DURATION, **kwargs):
        super().__init__(*args, **kwargs)
        self.prefix = check_prefix(prefix, "manager prefix")
        self.epoch_duration = epoch_duration
        self.policies: dict[Name, AccessPolicyEntry] = {}
        self.compromised: set[Name] = set()

    def _new_pair(self, granularity: Name) -> KekKeyPair:
        key_id = self.rng.hex_id()
        kek = make_kek_name(self.prefix, granularity, key_id)
        return generate_kek_kdk(kek, kek.to_kdk(), self.rng, self.ops)

    def _publish_keys(self, entry: AccessPolicyEntry) -> list[DataPacket]:
        pair = entry.kek_kdk
        out = [self.publish(self.sign(pair.kek_name.name, pair.public_key, KEY_FRESHNESS))]
        for cred in entry.authorized:
            name = kek_to_kdk_data_name(pair.kek_name, cred.prefix, cred.key_id).name
            env = hybrid_wrap(cred.public_key, pair.private_key, self.rng, self.ops)
            out.append(self.publish(self.sign(name, env.encode(), KEY_FRESHNESS)))
        return out

    def define_policy(self, granularity: Name | str, authorized) -> list[DataPacket]:
        """Generate a KEK/KDK pair for ``granularity`` and publish the KEK plus one KDK per decryptor."""
        granularity = check_prefix(granularity, "granularity")
        if granularity in self.policies:
            raise DuplicateGranularity(str(granularity))
        entry = AccessPolicyEntry(granularity, list(authorized), 0, self._new_pair(granularity))
        self.policies[granularity] = entry
        return self._publish_keys(entry)

    def report_compromised(self, decryptor_prefix: Name | str) -> None:
        self.compromised.add(Name(decryptor_prefix))

    def rotate(self, granularity: Name | str) -> list[DataPacket]:
        """Start a new epoch: fresh pair, compromised decryptors dropped, new keys published."""
        entry = self.policies.get(Name(granularity))
        if entry is None:
            raise UnknownGranularity(str(granularity))
        entry.history.append(entry.kek_kdk)
        entry.authorized = [c for c in entry.authorized if c.prefix not in self.compromised]
        entry.epoch += 1
        entry.kek_kdk = self._new_pair(entry.granularity)
        return self._publish_keys(entry)

    def trigger_reencrypt(self, granularity: Name | str, encryptors=()) -> list:
        """Publish a re-encryption notice for the current epoch and prompt ``encryptors`` to poll it."""
        entry = self.policies.get(Name(granularity))
        if entry is None:
            raise UnknownGranularity(str(granularity))
        if entry.epoch == 0:
            raise InvalidState(f"{granularity}: re-encryption requires a prior rotation")
        name = NotifyName(self.prefix, entry.granularity, entry.epoch).name
        self.publish(self.sign(name, encode_notification(entry.kek_kdk.kek_name.name), KEY_FRESHNESS))
        return [self.net.spawn(enc.poll_notifications(), f"notify:{enc.label}") for enc in encryptors]


def _load_rsa_public(der: bytes) -> bytes:
    try:
        serialization.load_der_public_key(der)
    except ValueError:
        raise KekUnavailable("KEK content is not a public key") from None
    return der


class Encryptor(Application):
    def __init__(self, *args, producer_prefix: Name | str, manager_prefix: Name | str,
                 granularity: Name | str, embed_ck: bool = False, **kwargs):
        super().__init__(*args, **kwargs)
        self.producer_prefix = check_prefix(producer_prefix, "producer prefix")
        self.manager_prefix = check_prefix(manager_prefix, "manager prefix")
        self.granularity = check_prefix(granularity, "granularity")
        self.embed_ck = embed_ck
        self.kek_cache: tuple[KekName, object, int] | None = None
        self.ck_cache: tuple[ContentKey, KekName] | None = None
        self._ck_envelope: EncryptedEnvelope | None = None
        self.retained: dict[Name, bytes] = {}
        self.notified_epoch = 0

    # -- KEK handling
    def _kek_valid(self) -> bool:
        return self.kek_cache is not None and self.kek_cache[2] > self.net.now

    def _accept_kek(self, data: DataPacket) -> None:
        self.verify(data)
        try:
            kek = KekName.parse(data.name)
        except NotAConventionName as err:
            raise KekUnavailable(f"unexpected KEK name: {err}") from None
        if kek.manager_prefix != self.manager_prefix or kek.granularity != self.granularity:
            raise KekUnavailable(f"KEK {data.name} does not cover {self.granularity}")
        material = self._kek_material(kek, data.content)
        if self.kek_cache is None or self.kek_cache[0] != kek:
            self.ck_cache = None  # new key-id: new epoch, new CK
        self.kek_cache = (kek, material, self.net.now + data.freshness_period)

    def _kek_material(self, kek: KekName, content: bytes):
        return _load_rsa_public(content)

    def _ensure_kek(self):
        if self._kek_valid():
            return self.kek_cache
        name = kek_interest_name(self.manager_prefix, self.granularity)
        try:
            data = yield from self.fetch(name, can_be_prefix=True, purpose="kek-discovery")
        except FetchTimeout:
            raise KekUnavailable(f"no KEK for {self.granularity}") from None
        self._accept_kek(data)
        return self.kek_cache

    def _wrap_ck(self, ck: ContentKey, kek: KekName, material) -> EncryptedEnvelope:
        return wrap_key(material, ck.key_bytes, self.rng, self.ops)

    def _ensure_ck(self) -> tuple[ContentKey, list[DataPacket]]:
        kek, material, _ = self.kek_cache
        if self.ck_cache is not None and self.ck_cache[1] == kek:
            return self.ck_cache[0], []
        ck = generate_ck(self.rng)
        self.ck_cache = (ck, kek)
        self._ck_envelope = self._wrap_ck(ck, kek, material)
        if self.embed_ck:
            return ck, []
        ck_name = make_ck_name(self.producer_prefix, ck.ck_id)
        data = self.sign(CkDataName(ck_name, kek).name, self._ck_envelope.encode(), KEY_FRESHNESS)
        return ck, [data]

    # -- production
    def content_name(self, data_suffix: Name | str) -> Name:
        name = self.producer_prefix + Name(data_suffix)
        if not self.granularity.is_prefix_of(name):
            raise NameConventionViolation(f"{name} is outside granularity {self.granularity}")
        return name

    def produce(self, data_suffix: Name | str, plaintext: bytes):
        """Process: encrypt ``plaintext`` and publish it; returns the Data packets published."""
        name = self.content_name(data_suffix)
        yield from self._ensure_kek()
        packets = self._encrypt_and_publish(name, plaintext)
        self.retained[name] = plaintext
        return packets

    def _encrypt_and_publish(self, name: Name, plaintext: bytes) -> list[DataPacket]:
        ck, key_packets = self._ensure_ck()
        env = encrypt_content(ck, plaintext, self.rng, self.ops)
        kek = self.ck_cache[1]
        payload = ContentPayload(
            make_ck_name(self.producer_prefix, ck.ck_id).name, env.iv_or_params, env.ciphertext,
            self._ck_envelope if self.embed_ck else None, kek.name if self.embed_ck else None,
        )
        content = self.sign(name, payload.encode(), CONTENT_FRESHNESS)
        packets = [content] + key_packets
        for p in packets:
            self.publish(p)
        return packets

    def poll_notifications(self):
        """Process: check for a re-encryption notice; on a new epoch re-produce retained content."""
        prefix = self.manager_prefix + Name([NAC]) + self.granularity + Name([NOTIFY])
        try:
            data = yield from self.fetch(prefix, can_be_prefix=True, purpose="notify-poll")
        except FetchTimeout:
            return []
        self.verify(data)
        notice = NotifyName.parse(data.name)
        if notice.manager_prefix != self.manager_prefix or notice.epoch <= self.notified_epoch:
            return []
        kek_name = decode_notification(data.content)
        kek_data = yield from self.fetch(kek_name, purpose="kek-from-notice")
        self._accept_kek(kek_data)
        self.ck_cache = None
        self.notified_epoch = notice.epoch
        out = []
        for name, plaintext in self.retained.items():
            out.extend(self._encrypt_and_publish(name, plaintext))
        return out


def parse_payload_ck_name(payload: ContentPayload) -> CkName:
    try:
        return CkName.parse(payload.ck_name)
    except NotAConventionName as err:
        raise DecryptFailed(f"content names no valid CK: {err}") from None


def fetch_wrapped_ck(app: Application, ck_name: CkName, payload: ContentPayload):
    """Process step: locate the wrapped CK for ``payload`` and the KEK name it was wrapped under.

    The CK rides either in the content itself or in a separate CK Data whose
    name embeds the KEK name.
    """
    if payload.encrypted_ck is not None:
        try:
            return KekName.parse(payload.kek_name), payload.encrypted_ck
        except NotAConventionName as err:
            raise DecryptFailed(str(err)) from None
    ck_data = yield from app.fetch(ck_name.name, can_be_prefix=True, purpose="ck")
    app.verify(ck_data)
    try:
        parsed = CkDataName.parse(ck_data.name)
    except NotAConventionName as err:
        raise DecryptFailed(str(err)) from None
    if parsed.ck != ck_name:
        raise DecryptFailed("CK Data does not match requested CK")
    return parsed.kek, EncryptedEnvelope.decode(ck_data.content)


class Decryptor(Application):
    def __init__(self, *args, prefix: Name | str, encryption_key: RsaKeyPair, encryption_key_id: bytes | str,
                 **kwargs):
        super().__init__(*args, **kwargs)
        self.prefix = check_prefix(prefix, "decryptor prefix")
        self.encryption_key = encryption_key
        self.encryption_key_id = encryption_key_id.encode() if isinstance(encryption_key_id, str) else encryption_key_id
        self.kdk_cache: dict[KdkName, bytes] = {}
        self.ck_plain_cache: dict[CkName, ContentKey] = {}

    @property
    def credential(self) -> DecryptorCredential:
        return DecryptorCredential(self.prefix, self.encryption_key_id, self.encryption_key.public_key)

    def consume(self, content_name: Name | str):
        """Process: fetch and decrypt ``content_name`` following the key chain; returns plaintext."""
        data = yield from self.fetch(Name(content_name), purpose="content")
        self.verify(data)
        payload = ContentPayload.decode(data.content)
        ck_name = parse_payload_ck_name(payload)
        ck = self.ck_plain_cache.get(ck_name)
        if ck is None:
            kek, envelope = yield from fetch_wrapped_ck(self, ck_name, payload)
            key_bytes = yield from self._unwrap_ck(kek, envelope)
            ck = ContentKey(ck_name.ck_id, key_bytes)
            self.ck_plain_cache[ck_name] = ck
        return decrypt_content(ck, payload.envelope, self.ops)

    def _unwrap_ck(self, kek: KekName, envelope: EncryptedEnvelope):
        kdk_name = kek.to_kdk()
        private = self.kdk_cache.get(kdk_name)
        if private is None:
            name = kek_to_kdk_data_name(kek, self.prefix, self.encryption_key_id).name
            try:
                kdk_data = yield from self.fetch(name, purpose="kdk")
            except FetchTimeout:
                raise NotAuthorized(f"no KDK for {kek.granularity}") from None
            self.verify(kdk_data)
            try:
                private = hybrid_unwrap(self.encryption_key.private_key, HybridEnvelope.decode(kdk_data.content),
                                        self.ops)
            except DecryptFailed:
                raise NotAuthorized(f"KDK for {kek.granularity} not usable") from None
            self.kdk_cache[kdk_name] = private
        return unwrap_key(private, envelope, self.ops)

"""NAC-ABE roles: attribute authority, policy-KEK publication, ABE encryptor and decryptor.

Attributes may be timed.  With a :class:`WindowSchedule`, an attribute is
rendered as ``<base>-<window label>`` and the authority only issues keys for
the window covering the current simulated time.  Without a schedule the
rendered form is the bare base name.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .app import KEY_FRESHNESS, Application
from .crypto.abe import AbePublicParams, AbeUserKey, abe_decrypt, abe_encrypt, abe_keygen, abe_setup
from .crypto.policy import PolicyExpr, leaves, map_leaves, parse_policy, render, satisfies
from .crypto.rsa import HybridEnvelope, RsaKeyPair, hybrid_unwrap, hybrid_wrap
from .crypto.symmetric import ContentKey, decrypt_content
from .errors import (
    AttributeNotGranted, DecryptFailed, FetchTimeout, NacError, NotAConventionName, NotAuthorized,
    PolicySyntaxError, ProviderError, WindowExpired,
)
from .naming import ATTRIBUTE, AttributeInterestName, KekName, check_prefix, make_attribute_interest_name, make_kek_name
from .nac import DecryptorCredential, Encryptor, fetch_wrapped_ck, parse_payload_ck_name
from .payloads import ContentPayload
from .wire import DataPacket, Name


@dataclass(frozen=True)
class WindowSchedule:
    """Consecutive validity windows of equal ``duration`` starting at ``start``."""

    labels: tuple[str, ...]
    duration: int
    start: int = 0

    def __post_init__(self):
        if not self.labels or self.duration <= 0:
            raise ValueError("a window schedule needs labels and a positive duration")
        object.__setattr__(self, "labels", tuple(self.labels))

    def index_at(self, t: int) -> int | None:
        if t < self.start:
            return None
        i = (t - self.start) // self.duration
        return i if i < len(self.labels) else None

    def label_at(self, t: int) -> str | None:
        i = self.index_at(t)
        return None if i is None else self.labels[i]

    def bounds(self, label: str) -> tuple[int, int]:
        i = self.labels.index(label)
        return self.start + i * self.duration, self.start + (i + 1) * self.duration

    def split(self, rendered: str) -> tuple[str, str] | None:
        """Inverse of rendering: ``(base, label)`` or None if no known label suffix matches."""
        for label in self.labels:
            suffix = "-" + label
            if rendered.endswith(suffix) and len(rendered) > len(suffix):
                return rendered[: -len(suffix)], label
        return None


@dataclass(frozen=True)
class TimedAttribute:
    base: str
    valid_from: int | None = None
    valid_to: int | None = None
    label: str | None = None

    @property
    def rendered(self) -> str:
        return self.base if self.label is None else f"{self.base}-{self.label}"

    @classmethod
    def at(cls, base: str, schedule: WindowSchedule | None, t: int) -> "TimedAttribute":
        if schedule is None:
            return cls(base)
        label = schedule.label_at(t)
        if label is None:
            raise WindowExpired(f"no validity window covers t={t}")
        lo, hi = schedule.bounds(label)
        return cls(base, lo, hi, label)


def render_policy(policy: PolicyExpr, schedule: WindowSchedule | None, t: int) -> PolicyExpr:
    """Render every leaf of ``policy`` for the window current at ``t``."""
    return map_leaves(policy, lambda base: TimedAttribute.at(base, schedule, t).rendered)


@dataclass(frozen=True)
class PolicyKek:
    granularity: Name
    policy: PolicyExpr
    kek_name: KekName

    @property
    def policy_text(self) -> str:
        return render(self.policy)


def policy_from_key_id(key_id: bytes) -> PolicyExpr:
    try:
        text = key_id.decode()
    except UnicodeDecodeError:
        raise PolicySyntaxError("key-id is not UTF-8", 0) from None
    return parse_policy(text)


class AttributeAuthority(Application):
    def __init__(self, *args, prefix: Name | str, provider: str = "simulated",
                 schedule: WindowSchedule | None = None, **kwargs):
        super().__init__(*args, **kwargs)
        self.prefix = check_prefix(prefix, "authority prefix")
        self.schedule = schedule
        self.params, self.master = abe_setup(self.rng, provider, self.ops)
        self.registry: dict[Name, tuple[DecryptorCredential, frozenset[str]]] = {}
        self.issued: list[DataPacket] = []
        self._bundles: dict[tuple[Name, str | None], DataPacket] = {}
        self.net.register_producer(self.node, self.prefix + Name([ATTRIBUTE]), self._on_interest)

    def grant(self, credential: DecryptorCredential, attributes) -> None:
        self.registry[credential.prefix] = (credential, frozenset(attributes))

    def _current_label(self) -> str | None:
        if self.schedule is None:
            return None
        label = self.schedule.label_at(self.net.now)
        if label is None:
            raise WindowExpired(f"no validity window covers t={self.net.now}")
        return label

    def _bundle(self, prefix: Name, label: str | None) -> DataPacket:
        cached = self._bundles.get((prefix, label))
        if cached is not None:
            return cached
        cred, granted = self.registry[prefix]
        rendered = sorted(base if label is None else f"{base}-{label}" for base in granted)
        user_key = abe_keygen(self.params, self.master, rendered, self.rng, self.ops)
        env = hybrid_wrap(cred.public_key, user_key.encode(), self.rng, self.ops)
        name = make_attribute_interest_name(self.prefix, rendered[0], cred.prefix, cred.key_id).name
        data = self.sign(name, env.encode(), self._freshness(label))
        self._bundles[(prefix, label)] = data
        self.issued.append(data)
        return data

    def _freshness(self, label: str | None) -> int:
        if label is None:
            return KEY_FRESHNESS
        return max(1, min(KEY_FRESHNESS, self.schedule.bounds(label)[1] - self.net.now))

    def issue(self, decryptor_prefix: Name | str, attrs=None, window: str | None = None) -> DataPacket:
        """Issue (and publish) the bundle for a decryptor in the current window."""
        prefix = Name(decryptor_prefix)
        entry = self.registry.get(prefix)
        if entry is None:
            raise AttributeNotGranted(f"{prefix} holds no attributes")
        missing = set(attrs or ()) - entry[1]
        if missing:
            raise AttributeNotGranted(f"{prefix} not granted {sorted(missing)}")
        label = self._current_label()
        if window is not None and window != label:
            raise WindowExpired(f"window {window!r} is not current")
        if not entry[1]:
            raise AttributeNotGranted(f"{prefix} holds no attributes")
        known = (prefix, label) in self._bundles
        data = self._bundle(prefix, label)
        if not known:
            self.publish(data)
        return data

    def _on_interest(self, interest) -> DataPacket | None:
        # declining is silent: the requester cannot tell refusal from loss
        try:
            req = AttributeInterestName.parse(interest.name)
        except NotAConventionName:
            return None
        entry = self.registry.get(req.decryptor_prefix)
        if req.authority_prefix != self.prefix or entry is None or entry[0].key_id != req.decryptor_key_id:
            return None
        try:
            label = self._current_label()
            attribute = req.attribute.decode()
        except (WindowExpired, UnicodeDecodeError):
            return None
        if label is None:
            base = attribute
        else:
            parts = self.schedule.split(attribute)
            if parts is None or parts[1] != label:
                return None
            base = parts[0]
        if base not in entry[1]:
            return None
        bundle = self._bundle(req.decryptor_prefix, label)
        if bundle.name == interest.name:
            return bundle
        return self.sign(interest.name, bundle.content, bundle.freshness_period)


class AbeAccessManager(Application):
    """Publishes policy KEKs: the key-id is the canonical policy, the content the public parameters."""

    def __init__(self, *args, prefix: Name | str, params: AbePublicParams,
                 schedule: WindowSchedule | None = None, **kwargs):
        super().__init__(*args, **kwargs)
        self.prefix = check_prefix(prefix, "manager prefix")
        self.params = params
        self.schedule = schedule
        self.policies: dict[Name, list[PolicyKek]] = {}

    def publish_policy_kek(self, granularity: Name | str, policy_text: str) -> DataPacket:
        granularity = check_prefix(granularity, "granularity")
        policy = render_policy(parse_policy(policy_text), self.schedule, self.net.now)
        kek = make_kek_name(self.prefix, granularity, render(policy))
        freshness = KEY_FRESHNESS
        if self.schedule is not None:
            _, end = self.schedule.bounds(self.schedule.label_at(self.net.now))
            freshness = max(1, min(freshness, end - self.net.now))
        self.policies.setdefault(granularity, []).append(PolicyKek(granularity, policy, kek))
        return self.publish(self.sign(kek.name, self.params.encode(), freshness))


class AbeEncryptor(Encryptor):
    """Encryptor whose CK is wrapped by CP-ABE under the policy named in the discovered KEK."""

    def _kek_material(self, kek: KekName, content: bytes):
        policy = policy_from_key_id(kek.key_id)
        try:
            params = AbePublicParams.decode(content)
        except (ProviderError, NacError) as err:
            raise DecryptFailed(f"KEK content is not ABE parameters: {err}") from None
        return params, policy

    def _wrap_ck(self, ck: ContentKey, kek: KekName, material):
        params, policy = material
        return abe_encrypt(params, policy, ck.key_bytes, self.rng, self.ops)


class AbeDecryptor(Application):
    def __init__(self, *args, prefix: Name | str, encryption_key: RsaKeyPair, encryption_key_id: bytes | str,
                 authority_prefix: Name | str, attribute_hints=(), **kwargs):
        super().__init__(*args, **kwargs)
        self.prefix = check_prefix(prefix, "decryptor prefix")
        self.encryption_key = encryption_key
        self.encryption_key_id = encryption_key_id.encode() if isinstance(encryption_key_id, str) else encryption_key_id
        self.authority_prefix = check_prefix(authority_prefix, "authority prefix")
        # bases this decryptor expects to hold; tried first when requesting keys
        self.attribute_hints = tuple(attribute_hints)
        self.user_key: AbeUserKey | None = None
        self.ck_plain_cache: dict = {}

    @property
    def credential(self) -> DecryptorCredential:
        return DecryptorCredential(self.prefix, self.encryption_key_id, self.encryption_key.public_key)

    @property
    def attributes(self) -> frozenset:
        return self.user_key.attributes if self.user_key is not None else frozenset()

    def _candidates(self, policy: PolicyExpr) -> list[str]:
        seen: list[str] = []
        for leaf in leaves(policy):
            if leaf not in seen:
                seen.append(leaf)
        hinted = [x for x in seen if any(x == h or x.startswith(h + "-") for h in self.attribute_hints)]
        return hinted + [x for x in seen if x not in hinted]

    def refresh_attributes(self, policy: PolicyExpr):
        """Process step: request an attribute-key bundle via the first leaf the authority answers."""
        for leaf in self._candidates(policy):
            name = make_attribute_interest_name(self.authority_prefix, leaf, self.prefix,
                                                self.encryption_key_id).name
            try:
                data = yield from self.fetch(name, purpose="attribute-key")
            except FetchTimeout:
                continue
            self.verify(data)
            try:
                blob = hybrid_unwrap(self.encryption_key.private_key, HybridEnvelope.decode(data.content), self.ops)
                self.user_key = AbeUserKey.decode(blob)
            except (DecryptFailed, ProviderError):
                raise NotAuthorized("attribute key not usable") from None
            return self.user_key
        return None

    def consume(self, content_name: Name | str):
        """Process: fetch and decrypt ``content_name``; refreshes attributes when the policy demands."""
        data = yield from self.fetch(Name(content_name), purpose="content")
        self.verify(data)
        payload = ContentPayload.decode(data.content)
        ck_name = parse_payload_ck_name(payload)
        ck = self.ck_plain_cache.get(ck_name)
        if ck is None:
            kek, envelope = yield from fetch_wrapped_ck(self, ck_name, payload)
            try:
                policy = policy_from_key_id(kek.key_id)
            except PolicySyntaxError as err:
                raise DecryptFailed(f"KEK key-id is not a policy: {err}") from None
            if not satisfies(self.attributes, policy):
                yield from self.refresh_attributes(policy)
            if not satisfies(self.attributes, policy):
                raise NotAuthorized(f"attributes do not satisfy {render(policy)!r}")
            try:
                key_bytes = abe_decrypt(self.user_key, envelope, self.ops)
            except (NacError, ValueError) as err:
                raise NotAuthorized(f"ABE decryption failed: {err}") from None
            ck = ContentKey(ck_name.ck_id, key_bytes)
            self.ck_plain_cache[ck_name] = ck
        return decrypt_content(ck, payload.envelope, self.ops)


__all__ = [
    "AbeAccessManager", "AbeDecryptor", "AbeEncryptor", "AttributeAuthority", "PolicyKek", "TimedAttribute",
    "WindowSchedule", "policy_from_key_id", "render_policy",
]

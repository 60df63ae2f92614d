"""Ciphertext-policy ABE behind one provider-neutral contract.

Providers implement a key-encapsulation interface; this module wraps the
encapsulated key around an AES-CBC payload so that both providers produce the
same :class:`EncryptedEnvelope` shape.  ``simulated`` is a test backend with
no cryptographic security; ``bsw07`` is a pairing-based construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ... import tlv
from ...errors import DecryptFailed, MalformedPacket, PayloadTooLarge, PolicyNotSatisfied, ProviderError
from ..envelope import EncryptedEnvelope, Scheme
from ..policy import PolicyExpr, parse_policy, render, satisfies
from ..symmetric import aes_decrypt, aes_encrypt
from .base import AbeProvider

MAX_PAYLOAD = 64

T_PROVIDER = 0x90
T_BLOB = 0x91
T_ATTRIBUTE = 0x92
T_POLICY = 0x93
T_IV = 0x94
T_HEADER = 0x95

_PROVIDERS: dict[str, AbeProvider] = {}
# "reference" names the real pairing-based construction
ALIASES = {"reference": "bsw07"}


def register_provider(provider: AbeProvider) -> None:
    _PROVIDERS[provider.name] = provider


def get_provider(name: str) -> AbeProvider:
    name = ALIASES.get(name, name)
    if name not in _PROVIDERS:
        _load_builtin(name)
    try:
        return _PROVIDERS[name]
    except KeyError:
        raise ProviderError(f"unknown ABE provider {name!r}") from None


def _load_builtin(name: str) -> None:
    if name == "simulated":
        from .simulated import SimulatedProvider
        register_provider(SimulatedProvider())
    elif name == "bsw07":
        try:
            from .bsw07 import Bsw07Provider
        except ImportError as err:  # py_ecc missing
            raise ProviderError(f"bsw07 provider unavailable: {err}") from None
        register_provider(Bsw07Provider())


def available_providers() -> list[str]:
    names = ["simulated"]
    try:
        get_provider("bsw07")
        names.append("bsw07")
    except ProviderError:
        pass
    return names


@dataclass(frozen=True)
class AbePublicParams:
    provider: str
    blob: bytes

    def encode(self) -> bytes:
        return tlv.encode_tlv(T_PROVIDER, self.provider.encode()) + tlv.encode_tlv(T_BLOB, self.blob)

    @classmethod
    def decode(cls, buf: bytes) -> "AbePublicParams":
        try:
            f = tlv.decode_fields(buf, {T_PROVIDER: "Provider", T_BLOB: "Blob"}, required={T_PROVIDER, T_BLOB})
            return cls(f[T_PROVIDER].decode(), f[T_BLOB])
        except (MalformedPacket, UnicodeDecodeError) as err:
            raise ProviderError(f"malformed public parameters: {err}") from None


@dataclass(frozen=True)
class AbeMasterKey:
    provider: str
    blob: bytes = field(repr=False)


@dataclass(frozen=True)
class AbeUserKey:
    provider: str
    attributes: frozenset
    provider_blob: bytes = field(repr=False)

    def encode(self) -> bytes:
        body = tlv.encode_tlv(T_PROVIDER, self.provider.encode())
        body += b"".join(tlv.encode_tlv(T_ATTRIBUTE, a.encode()) for a in sorted(self.attributes))
        return body + tlv.encode_tlv(T_BLOB, self.provider_blob)

    @classmethod
    def decode(cls, buf: bytes) -> "AbeUserKey":
        try:
            provider, attrs, blob = None, [], None
            for t, v in tlv.iter_tlvs(buf):
                if t == T_PROVIDER and provider is None:
                    provider = v.decode()
                elif t == T_ATTRIBUTE and provider is not None and blob is None:
                    attrs.append(v.decode())
                elif t == T_BLOB and provider is not None and blob is None:
                    blob = v
                else:
                    raise MalformedPacket(f"unexpected TLV {t:#x} in user key")
            if provider is None or blob is None:
                raise MalformedPacket("incomplete user key")
            return cls(provider, frozenset(attrs), blob)
        except (MalformedPacket, UnicodeDecodeError) as err:
            raise ProviderError(f"malformed user key: {err}") from None


def abe_setup(rng, provider: str = "simulated", ops=None) -> tuple[AbePublicParams, AbeMasterKey]:
    impl = get_provider(provider)
    params, master = impl.setup(rng)
    if ops is not None:
        ops["abe_setup"] += 1
    return AbePublicParams(impl.name, params), AbeMasterKey(impl.name, master)


def abe_keygen(params: AbePublicParams, master: AbeMasterKey, attrs, rng, ops=None) -> AbeUserKey:
    attrs = frozenset(attrs)
    if not attrs:
        raise ProviderError("keygen needs at least one attribute")
    blob = get_provider(master.provider).keygen(params.blob, master.blob, sorted(attrs), rng)
    if ops is not None:
        ops["abe_keygen"] += 1
    return AbeUserKey(master.provider, attrs, blob)


def abe_encrypt(params: AbePublicParams, policy: PolicyExpr | str, payload: bytes, rng, ops=None) -> EncryptedEnvelope:
    if isinstance(policy, str):
        policy = parse_policy(policy)
    if len(payload) > MAX_PAYLOAD:
        raise PayloadTooLarge(f"ABE payload limited to {MAX_PAYLOAD} bytes")
    key, header = get_provider(params.provider).encapsulate(params.blob, policy, rng)
    inner = aes_encrypt(key, payload, rng)
    if ops is not None:
        ops["abe_encrypt"] += 1
    meta = (tlv.encode_tlv(T_PROVIDER, params.provider.encode()) + tlv.encode_tlv(T_POLICY, render(policy).encode())
            + tlv.encode_tlv(T_IV, inner.iv_or_params) + tlv.encode_tlv(T_HEADER, header))
    return EncryptedEnvelope(Scheme.CP_ABE, meta, inner.ciphertext)


def envelope_policy(env: EncryptedEnvelope) -> tuple[str, PolicyExpr, bytes, bytes]:
    """Provider name, policy, IV and provider header carried by an ABE envelope."""
    if env.scheme != Scheme.CP_ABE:
        raise DecryptFailed("not a CP-ABE envelope")
    try:
        f = tlv.decode_fields(env.iv_or_params, {T_PROVIDER: "Provider", T_POLICY: "Policy", T_IV: "IV",
                                                 T_HEADER: "Header"},
                              required={T_PROVIDER, T_POLICY, T_IV, T_HEADER})
        return f[T_PROVIDER].decode(), parse_policy(f[T_POLICY].decode()), f[T_IV], f[T_HEADER]
    except (MalformedPacket, UnicodeDecodeError) as err:
        raise DecryptFailed(f"malformed ABE envelope: {err}") from None


def abe_decrypt(userkey: AbeUserKey, env: EncryptedEnvelope, ops=None) -> bytes:
    provider, policy, iv, header = envelope_policy(env)
    if ops is not None:
        ops["abe_decrypt"] += 1
    if provider != userkey.provider:
        raise ProviderError(f"ciphertext from provider {provider!r}, key from {userkey.provider!r}")
    if not satisfies(userkey.attributes, policy):
        raise PolicyNotSatisfied(f"attributes do not satisfy {render(policy)!r}")
    key = get_provider(provider).decapsulate(userkey.provider_blob, sorted(userkey.attributes), policy, header)
    return aes_decrypt(key, EncryptedEnvelope(Scheme.AES_CBC, iv, env.ciphertext))


__all__ = [
    "AbeMasterKey", "AbePublicParams", "AbeUserKey", "abe_decrypt", "abe_encrypt", "abe_keygen", "abe_setup",
    "available_providers", "envelope_policy", "get_provider", "register_provider",
]

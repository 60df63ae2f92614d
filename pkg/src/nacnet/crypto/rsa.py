"""RSA-2048 key pairs, OAEP-SHA256 key wrapping and the hybrid envelope.

Key generation and OAEP encoding draw all randomness from the caller's rng so
that scenario runs are reproducible; decryption uses the ``cryptography``
OAEP implementation, which independently checks the encoding.
"""

from __future__ import annotations

import functools
import hashlib
from dataclasses import dataclass, field

import gmpy2
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import padding, rsa

from .. import tlv
from ..errors import DecryptFailed, MalformedPacket, PayloadTooLarge
from .envelope import EncryptedEnvelope, Scheme
from .symmetric import aes_decrypt, aes_encrypt

RSA_BITS = 2048
PUBLIC_EXPONENT = 65537
_HLEN = 32
OAEP_CAPACITY = RSA_BITS // 8 - 2 * _HLEN - 2  # 190 bytes


@dataclass(frozen=True)
class RsaKeyPair:
    """DER-encoded key pair (SubjectPublicKeyInfo / PKCS#8)."""

    public_key: bytes
    private_key: bytes = field(repr=False)


@dataclass(frozen=True)
class KekKeyPair:
    kek_name: object
    kdk_name: object
    public_key: bytes
    private_key: bytes = field(repr=False)


def _random_prime(rng, bits: int) -> int:
    while True:
        candidate = rng.getrandbits(bits) | (0b11 << (bits - 2)) | 1
        p = int(gmpy2.next_prime(candidate))
        if p.bit_length() == bits and gmpy2.gcd(PUBLIC_EXPONENT, p - 1) == 1:
            return p


def generate_rsa_keypair(rng, bits: int = RSA_BITS, ops=None) -> RsaKeyPair:
    half = bits // 2
    while True:
        p, q = _random_prime(rng, half), _random_prime(rng, half)
        n = p * q
        if p != q and n.bit_length() == bits:
            break
    if p < q:
        p, q = q, p
    d = int(gmpy2.invert(PUBLIC_EXPONENT, (p - 1) * (q - 1)))
    numbers = rsa.RSAPrivateNumbers(
        p=p, q=q, d=d,
        dmp1=rsa.rsa_crt_dmp1(d, p), dmq1=rsa.rsa_crt_dmq1(d, q), iqmp=rsa.rsa_crt_iqmp(p, q),
        public_numbers=rsa.RSAPublicNumbers(PUBLIC_EXPONENT, n),
    )
    key = numbers.private_key()
    if ops is not None:
        ops["keygen_asym"] += 1
    return RsaKeyPair(
        key.public_key().public_bytes(serialization.Encoding.DER, serialization.PublicFormat.SubjectPublicKeyInfo),
        key.private_bytes(serialization.Encoding.DER, serialization.PrivateFormat.PKCS8,
                          serialization.NoEncryption()),
    )


def generate_kek_kdk(kek_name, kdk_name, rng, ops=None) -> KekKeyPair:
    pair = generate_rsa_keypair(rng, ops=ops)
    return KekKeyPair(kek_name, kdk_name, pair.public_key, pair.private_key)


@functools.lru_cache(maxsize=256)
def _load_public(der: bytes) -> rsa.RSAPublicKey:
    return serialization.load_der_public_key(der)


@functools.lru_cache(maxsize=256)
def _load_private(der: bytes) -> rsa.RSAPrivateKey:
    return serialization.load_der_private_key(der, password=None)


def _mgf1(seed: bytes, length: int) -> bytes:
    out = b""
    counter = 0
    while len(out) < length:
        out += hashlib.sha256(seed + counter.to_bytes(4, "big")).digest()
        counter += 1
    return out[:length]


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


def oaep_encode(message: bytes, k: int, seed: bytes) -> bytes:
    """EME-OAEP encoding with SHA-256, MGF1-SHA256 and an empty label."""
    if len(message) > k - 2 * _HLEN - 2:
        raise PayloadTooLarge(f"{len(message)} bytes exceeds OAEP capacity {k - 2 * _HLEN - 2}")
    lhash = hashlib.sha256(b"").digest()
    db = lhash + b"\x00" * (k - len(message) - 2 * _HLEN - 2) + b"\x01" + message
    masked_db = _xor(db, _mgf1(seed, k - _HLEN - 1))
    masked_seed = _xor(seed, _mgf1(masked_db, _HLEN))
    return b"\x00" + masked_seed + masked_db


def wrap_key(public_key: bytes, payload: bytes, rng, ops=None) -> EncryptedEnvelope:
    pub = _load_public(public_key).public_numbers()
    k = (pub.n.bit_length() + 7) // 8
    em = oaep_encode(payload, k, rng.bytes(_HLEN))
    c = pow(int.from_bytes(em, "big"), pub.e, pub.n)
    if ops is not None:
        ops["rsa_encrypt"] += 1
    return EncryptedEnvelope(Scheme.RSA_OAEP, b"", c.to_bytes(k, "big"))


def unwrap_key(private_key: bytes, env: EncryptedEnvelope, ops=None) -> bytes:
    if ops is not None:
        ops["rsa_decrypt"] += 1
    if env.scheme != Scheme.RSA_OAEP:
        raise DecryptFailed("not an RSA-OAEP envelope")
    try:
        key = _load_private(private_key)
        return key.decrypt(env.ciphertext, padding.OAEP(padding.MGF1(hashes.SHA256()), hashes.SHA256(), None))
    except ValueError:
        raise DecryptFailed("key unwrap failed") from None


@dataclass(frozen=True)
class HybridEnvelope:
    """A fresh AES key wrapped under RSA plus the secret encrypted under that AES key."""

    wrapped_key: EncryptedEnvelope
    body: EncryptedEnvelope

    def encode(self) -> bytes:
        return self.wrapped_key.encode() + self.body.encode()

    @classmethod
    def decode(cls, buf: bytes) -> "HybridEnvelope":
        try:
            items = list(tlv.iter_tlvs(buf))
        except MalformedPacket as err:
            raise DecryptFailed(f"malformed hybrid envelope: {err}") from None
        if len(items) != 2:
            raise DecryptFailed("hybrid envelope must hold exactly two envelopes")
        return cls(*(EncryptedEnvelope.decode(tlv.encode_tlv(t, v)) for t, v in items))


def hybrid_wrap(public_key: bytes, secret: bytes, rng, ops=None) -> HybridEnvelope:
    aes_key = rng.bytes(32)
    return HybridEnvelope(wrap_key(public_key, aes_key, rng, ops), aes_encrypt(aes_key, secret, rng, ops))


def hybrid_unwrap(private_key: bytes, env: HybridEnvelope, ops=None) -> bytes:
    aes_key = unwrap_key(private_key, env.wrapped_key, ops)
    if len(aes_key) != 32:
        raise DecryptFailed("wrapped key has wrong length")
    return aes_decrypt(aes_key, env.body, ops)

"""Content keys and AES-256-CBC content encryption with PKCS#7 padding."""

from __future__ import annotations

from dataclasses import dataclass, field

from cryptography.hazmat.primitives import padding
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from ..errors import DecryptFailed
from .envelope import EncryptedEnvelope, Scheme

CK_BYTES = 32
BLOCK = 16


@dataclass(frozen=True)
class ContentKey:
    ck_id: bytes
    key_bytes: bytes = field(repr=False)


def generate_ck(rng) -> ContentKey:
    return ContentKey(rng.hex_id().encode(), rng.bytes(CK_BYTES))


def aes_encrypt(key: bytes, plaintext: bytes, rng, ops=None) -> EncryptedEnvelope:
    iv = rng.bytes(BLOCK)
    padder = padding.PKCS7(128).padder()
    padded = padder.update(plaintext) + padder.finalize()
    enc = Cipher(algorithms.AES(key), modes.CBC(iv)).encryptor()
    if ops is not None:
        ops["aes_encrypt"] += 1
    return EncryptedEnvelope(Scheme.AES_CBC, iv, enc.update(padded) + enc.finalize())


def aes_decrypt(key: bytes, env: EncryptedEnvelope, ops=None) -> bytes:
    if ops is not None:
        ops["aes_decrypt"] += 1
    if env.scheme != Scheme.AES_CBC or len(env.iv_or_params) != BLOCK:
        raise DecryptFailed("not an AES-CBC envelope")
    if not env.ciphertext or len(env.ciphertext) % BLOCK:
        raise DecryptFailed("ciphertext is not a whole number of blocks")
    try:
        dec = Cipher(algorithms.AES(key), modes.CBC(env.iv_or_params)).decryptor()
        padded = dec.update(env.ciphertext) + dec.finalize()
        unpadder = padding.PKCS7(128).unpadder()
        return unpadder.update(padded) + unpadder.finalize()
    except ValueError:
        raise DecryptFailed("decryption failed") from None


def encrypt_content(ck: ContentKey, plaintext: bytes, rng, ops=None) -> EncryptedEnvelope:
    return aes_encrypt(ck.key_bytes, plaintext, rng, ops)


def decrypt_content(ck: ContentKey, env: EncryptedEnvelope, ops=None) -> bytes:
    return aes_decrypt(ck.key_bytes, env, ops)

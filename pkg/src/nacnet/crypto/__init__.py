"""Cryptographic building blocks: AES content keys, RSA wrapping, policies and CP-ABE."""

from .envelope import EncryptedEnvelope, Scheme
from .policy import And, Attr, Or, PolicyExpr, parse_policy, render, satisfies
from .rsa import (
    OAEP_CAPACITY, HybridEnvelope, KekKeyPair, RsaKeyPair, generate_kek_kdk, generate_rsa_keypair,
    hybrid_unwrap, hybrid_wrap, unwrap_key, wrap_key,
)
from .symmetric import ContentKey, decrypt_content, encrypt_content, generate_ck

__all__ = [
    "And", "Attr", "ContentKey", "EncryptedEnvelope", "HybridEnvelope", "KekKeyPair", "OAEP_CAPACITY", "Or",
    "PolicyExpr", "RsaKeyPair", "Scheme", "decrypt_content", "encrypt_content", "generate_ck",
    "generate_kek_kdk", "generate_rsa_keypair", "hybrid_unwrap", "hybrid_wrap", "parse_policy", "render",
    "satisfies", "unwrap_key", "wrap_key",
]

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nacnet.app import CryptoOpCounter
from nacnet.crypto import (
    OAEP_CAPACITY, EncryptedEnvelope, HybridEnvelope, Scheme, decrypt_content, encrypt_content,
    generate_ck, generate_kek_kdk, generate_rsa_keypair, hybrid_unwrap, hybrid_wrap, unwrap_key, wrap_key,
)
from nacnet.crypto.rsa import oaep_encode
from nacnet.crypto.symmetric import ContentKey
from nacnet.errors import DecryptFailed, PayloadTooLarge
from nacnet.naming import make_kek_name
from nacnet.rng import DeterministicRng


@pytest.fixture(scope="module")
def pairs():
    rng = DeterministicRng(11)
    return generate_rsa_keypair(rng), generate_rsa_keypair(rng)


def test_rng_is_replayable_and_forks_independent():
    a, b = DeterministicRng(5), DeterministicRng(5)
    assert a.bytes(100) == b.bytes(100)
    assert DeterministicRng(5).fork("x").bytes(16) != DeterministicRng(5).fork("y").bytes(16)
    parent = DeterministicRng(5)
    parent.fork("x")
    assert parent.bytes(8) == DeterministicRng(5).bytes(8)


def test_generate_ck_distinct():
    rng = DeterministicRng(1)
    a, b = generate_ck(rng), generate_ck(rng)
    assert a.ck_id != b.ck_id and a.key_bytes != b.key_bytes
    assert len(a.key_bytes) == 32


def test_generate_ck_seeded_replay():
    r1, r2 = DeterministicRng(42), DeterministicRng(42)
    assert [generate_ck(r1) for _ in range(5)] == [generate_ck(r2) for _ in range(5)]


def test_ck_id_no_collision_over_10000():
    rng = DeterministicRng(3)
    ids = {generate_ck(rng).ck_id for _ in range(10000)}
    assert len(ids) == 10000


def test_1024_bit_plaintext_gives_144_byte_ciphertext():
    rng = DeterministicRng(0)
    env = encrypt_content(generate_ck(rng), bytes(128), rng)
    assert env.scheme == Scheme.AES_CBC
    assert len(env.iv_or_params) == 16
    assert len(env.ciphertext) == 144


def test_fresh_iv_per_encryption():
    rng = DeterministicRng(0)
    ck = generate_ck(rng)
    e1, e2 = encrypt_content(ck, b"same", rng), encrypt_content(ck, b"same", rng)
    assert e1.iv_or_params != e2.iv_or_params and e1.ciphertext != e2.ciphertext


def test_content_round_trip_1000_random():
    rng = DeterministicRng(8)
    r = random.Random(8)
    for _ in range(1000):
        ck = generate_ck(rng)
        m = r.randbytes(r.randint(0, 300))
        env = encrypt_content(ck, m, rng)
        assert len(env.ciphertext) % 16 == 0
        assert decrypt_content(ck, EncryptedEnvelope.decode(env.encode())) == m


def test_wrong_ck_fails_closed():
    rng = DeterministicRng(2)
    failures = 0
    for _ in range(200):
        env = encrypt_content(generate_ck(rng), b"secret report", rng)
        try:
            out = decrypt_content(generate_ck(rng), env)
        except DecryptFailed:
            failures += 1
        else:
            assert out != b"secret report"
    # PKCS#7 accepts a random last block with probability about 1/256
    assert failures >= 190


def test_truncated_ciphertext_fails():
    rng = DeterministicRng(2)
    ck = generate_ck(rng)
    env = encrypt_content(ck, bytes(64), rng)
    with pytest.raises(DecryptFailed):
        decrypt_content(ck, EncryptedEnvelope(env.scheme, env.iv_or_params, env.ciphertext[:-5]))
    with pytest.raises(DecryptFailed):
        decrypt_content(ck, EncryptedEnvelope(env.scheme, env.iv_or_params, b""))
    with pytest.raises(DecryptFailed):
        decrypt_content(ck, EncryptedEnvelope(env.scheme, env.iv_or_params[:8], env.ciphertext))


def test_envelope_decode_garbage():
    for junk in (b"", b"\x80", b"\x80\x05abc", b"\x06\x00"):
        with pytest.raises(DecryptFailed):
            EncryptedEnvelope.decode(junk)


def test_kek_kdk_wrap_unwrap():
    rng = DeterministicRng(4)
    kek = make_kek_name("/mgr", "/prod/a", "k1")
    ops = CryptoOpCounter().for_entity("m")
    pair = generate_kek_kdk(kek, kek.to_kdk(), rng, ops=ops)
    assert ops["keygen_asym"] == 1
    ck = generate_ck(rng)
    env = wrap_key(pair.public_key, ck.key_bytes, rng, ops)
    assert len(env.ciphertext) == 256
    assert unwrap_key(pair.private_key, env, ops) == ck.key_bytes
    assert ops["rsa_encrypt"] == 1 and ops["rsa_decrypt"] == 1


def test_unwrap_with_other_private_key(pairs):
    a, b = pairs
    env = wrap_key(a.public_key, bytes(32), DeterministicRng(1))
    with pytest.raises(DecryptFailed):
        unwrap_key(b.private_key, env)


def test_capacity_and_too_large(pairs):
    a, _ = pairs
    rng = DeterministicRng(1)
    assert OAEP_CAPACITY == 190
    assert unwrap_key(a.private_key, wrap_key(a.public_key, bytes(190), rng)) == bytes(190)
    with pytest.raises(PayloadTooLarge):
        wrap_key(a.public_key, bytes(191), rng)
    with pytest.raises(PayloadTooLarge):
        wrap_key(a.public_key, a.private_key, rng)


def test_tampered_rsa_envelope(pairs):
    a, _ = pairs
    rng = DeterministicRng(6)
    env = wrap_key(a.public_key, bytes(32), rng)
    for i in (0, 100, 255):
        ct = bytearray(env.ciphertext)
        ct[i] ^= 0x01
        with pytest.raises(DecryptFailed):
            unwrap_key(a.private_key, EncryptedEnvelope(Scheme.RSA_OAEP, b"", bytes(ct)))


def test_oaep_encoding_matches_library_decoder(pairs):
    """Our seeded OAEP encoder is checked by the library's independent decoder."""
    a, _ = pairs
    r = random.Random(1)
    rng = DeterministicRng(1)
    for _ in range(50):
        m = r.randbytes(r.randint(0, 190))
        assert unwrap_key(a.private_key, wrap_key(a.public_key, m, rng)) == m
    assert len(oaep_encode(b"x", 256, bytes(32))) == 256


def test_hybrid_round_trip_1000(pairs):
    a, _ = pairs
    rng = DeterministicRng(12)
    r = random.Random(12)
    for _ in range(1000):
        secret = r.randbytes(r.randint(0, 1300))
        env = HybridEnvelope.decode(hybrid_wrap(a.public_key, secret, rng).encode())
        assert hybrid_unwrap(a.private_key, env) == secret


def test_hybrid_carries_a_kdk(pairs):
    a, b = pairs
    rng = DeterministicRng(13)
    env = hybrid_wrap(a.public_key, b.private_key, rng)
    assert hybrid_unwrap(a.private_key, env) == b.private_key
    with pytest.raises(DecryptFailed):
        hybrid_unwrap(b.private_key, env)


def test_hybrid_decode_rejects_wrong_shape():
    with pytest.raises(DecryptFailed):
        HybridEnvelope.decode(b"\x80\x00")
    with pytest.raises(DecryptFailed):
        HybridEnvelope.decode(b"\xff")


def test_no_plaintext_leakage(pairs):
    """No 8-byte window of content, CK or KDK bytes appears in any ciphertext."""
    a, b = pairs
    rng = DeterministicRng(21)
    content = bytes(range(128))
    ck = generate_ck(rng)
    envs = [
        encrypt_content(ck, content, rng).ciphertext,
        wrap_key(a.public_key, ck.key_bytes, rng).ciphertext,
        hybrid_wrap(a.public_key, b.private_key, rng).encode(),
    ]
    for secret in (content, ck.key_bytes, b.private_key):
        windows = {secret[i:i + 8] for i in range(0, len(secret) - 7)}
        for blob in envs:
            assert not any(w in blob for w in windows)


@settings(max_examples=50, deadline=None)
@given(st.binary(max_size=200), st.integers(0, 2**32))
def test_content_round_trip_property(m, seed):
    rng = DeterministicRng(seed)
    ck = ContentKey(b"id", rng.bytes(32))
    assert decrypt_content(ck, encrypt_content(ck, m, rng)) == m

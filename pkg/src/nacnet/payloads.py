"""Content layouts of the Data packets exchanged by NAC entities (see docs/payloads.md)."""

from __future__ import annotations

from dataclasses import dataclass

from . import tlv
from .crypto.envelope import T_ENVELOPE, EncryptedEnvelope, Scheme
from .errors import DecryptFailed, MalformedPacket
from .wire import Name, decode_name, encode_name

T_CK_NAME = 0xA8
T_IV = 0xA9
T_ENCRYPTED_PAYLOAD = 0xAA
T_ENCRYPTED_CK = 0xAB
T_KEK_NAME = 0xAC


@dataclass(frozen=True)
class ContentPayload:
    ck_name: Name
    iv: bytes
    ciphertext: bytes
    encrypted_ck: EncryptedEnvelope | None = None
    kek_name: Name | None = None

    @property
    def envelope(self) -> EncryptedEnvelope:
        return EncryptedEnvelope(Scheme.AES_CBC, self.iv, self.ciphertext)

    def encode(self) -> bytes:
        out = (tlv.encode_tlv(T_CK_NAME, encode_name(self.ck_name)) + tlv.encode_tlv(T_IV, self.iv)
               + tlv.encode_tlv(T_ENCRYPTED_PAYLOAD, self.ciphertext))
        if self.encrypted_ck is not None:
            out += tlv.encode_tlv(T_ENCRYPTED_CK, self.encrypted_ck.encode())
            out += tlv.encode_tlv(T_KEK_NAME, encode_name(self.kek_name))
        return out

    @classmethod
    def decode(cls, buf: bytes) -> "ContentPayload":
        try:
            f = tlv.decode_fields(
                buf,
                {T_CK_NAME: "CkName", T_IV: "IV", T_ENCRYPTED_PAYLOAD: "EncryptedPayload",
                 T_ENCRYPTED_CK: "EncryptedCk", T_KEK_NAME: "KekName"},
                required={T_CK_NAME, T_IV, T_ENCRYPTED_PAYLOAD},
            )
            if (T_ENCRYPTED_CK in f) != (T_KEK_NAME in f):
                raise MalformedPacket("embedded CK needs both EncryptedCk and KekName")
            embedded = T_ENCRYPTED_CK in f
            return cls(
                decode_name(f[T_CK_NAME]), f[T_IV], f[T_ENCRYPTED_PAYLOAD],
                EncryptedEnvelope.decode(f[T_ENCRYPTED_CK]) if embedded else None,
                decode_name(f[T_KEK_NAME]) if embedded else None,
            )
        except MalformedPacket as err:
            raise DecryptFailed(f"malformed content payload: {err}") from None


def encode_notification(kek_name: Name) -> bytes:
    return tlv.encode_tlv(T_KEK_NAME, encode_name(kek_name))


def decode_notification(buf: bytes) -> Name:
    try:
        f = tlv.decode_fields(buf, {T_KEK_NAME: "KekName"}, required={T_KEK_NAME})
        return decode_name(f[T_KEK_NAME])
    except MalformedPacket as err:
        raise DecryptFailed(f"malformed notification: {err}") from None


__all__ = ["ContentPayload", "T_ENVELOPE", "decode_notification", "encode_notification"]

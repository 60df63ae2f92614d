"""Encrypted envelopes and their TLV encoding."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .. import tlv
from ..errors import DecryptFailed, MalformedPacket

T_ENVELOPE = 0x80
T_SCHEME = 0x81
T_PARAMS = 0x82
T_CIPHERTEXT = 0x83


class Scheme(enum.IntEnum):
    AES_CBC = 1
    RSA_OAEP = 2
    CP_ABE = 3


@dataclass(frozen=True)
class EncryptedEnvelope:
    scheme: Scheme
    iv_or_params: bytes
    ciphertext: bytes

    def encode(self) -> bytes:
        return tlv.encode_tlv(
            T_ENVELOPE,
            tlv.encode_tlv(T_SCHEME, tlv.encode_nonneg(int(self.scheme)))
            + tlv.encode_tlv(T_PARAMS, self.iv_or_params)
            + tlv.encode_tlv(T_CIPHERTEXT, self.ciphertext),
        )

    @classmethod
    def decode(cls, buf: bytes) -> "EncryptedEnvelope":
        """Parse an envelope; any structural problem is reported as DecryptFailed."""
        try:
            t, value = tlv.read_single(buf)
            if t != T_ENVELOPE:
                raise MalformedPacket("not an envelope")
            f = tlv.decode_fields(value, {T_SCHEME: "Scheme", T_PARAMS: "Params", T_CIPHERTEXT: "Ciphertext"},
                                  required={T_SCHEME, T_PARAMS, T_CIPHERTEXT})
            return cls(Scheme(tlv.decode_nonneg(f[T_SCHEME])), f[T_PARAMS], f[T_CIPHERTEXT])
        except (MalformedPacket, ValueError) as err:
            raise DecryptFailed(f"malformed envelope: {err}") from None

"""Bethencourt-Sahai-Waters CP-ABE on BLS12-381 (asymmetric pairing), as a KEM.

Group layout: ciphertext components C and C_y live in G1, attribute hashes
and C'_y in G2; user-key components D, D_j in G2 and D'_j in G1.  With
e: G1 x G2 -> GT the leaf check is

    e(C_y, D_j) / e(D'_j, C'_y) = e(g1, g2)^(r * q_y(0))

and decapsulation recovers e(g1, g2)^(alpha * s) as a single multi-pairing:
one Miller loop per factor and one final exponentiation.  The symmetric key
is SHA-256 of that GT element.
"""

from __future__ import annotations

import hashlib

from py_ecc.bls.hash_to_curve import hash_to_G2
from py_ecc.bls.point_compression import compress_G1, compress_G2, decompress_G1, decompress_G2
from py_ecc.fields import optimized_bls12_381_FQ12 as FQ12
from py_ecc.optimized_bls12_381 import G1, G2, add, curve_order, final_exponentiate, multiply, neg
from py_ecc.optimized_bls12_381.optimized_pairing import miller_loop

from ... import tlv
from ...errors import MalformedPacket, PolicyNotSatisfied, ProviderError
from ..policy import And, Attr, PolicyExpr, leaves

_DST = b"NACNET-BSW07-ATTR-H2G2_XMD:SHA-256_SSWU_RO_"
_G1_BYTES = 48
_G2_BYTES = 96
_FQ_BYTES = 48

T_ATTR = 0xA0
T_POINT = 0xA1


def _scalar(rng) -> int:
    return 1 + rng.randbelow(curve_order - 1)


def _g1_bytes(p) -> bytes:
    return compress_G1(p).to_bytes(_G1_BYTES, "big")


def _g1_from(b: bytes):
    if len(b) != _G1_BYTES:
        raise ProviderError("bad G1 encoding")
    try:
        return decompress_G1(int.from_bytes(b, "big"))
    except (ValueError, AssertionError) as err:
        raise ProviderError(f"bad G1 point: {err}") from None


def _g2_bytes(p) -> bytes:
    z1, z2 = compress_G2(p)
    return z1.to_bytes(_FQ_BYTES, "big") + z2.to_bytes(_FQ_BYTES, "big")


def _g2_from(b: bytes):
    if len(b) != _G2_BYTES:
        raise ProviderError("bad G2 encoding")
    try:
        return decompress_G2((int.from_bytes(b[:_FQ_BYTES], "big"), int.from_bytes(b[_FQ_BYTES:], "big")))
    except (ValueError, AssertionError) as err:
        raise ProviderError(f"bad G2 point: {err}") from None


def _gt_bytes(x) -> bytes:
    return b"".join(int(c).to_bytes(_FQ_BYTES, "big") for c in x.coeffs)


def _gt_from(b: bytes):
    if len(b) != 12 * _FQ_BYTES:
        raise ProviderError("bad GT encoding")
    return FQ12([int.from_bytes(b[i:i + _FQ_BYTES], "big") for i in range(0, len(b), _FQ_BYTES)])


def _hash_attr(attr: str):
    return hash_to_G2(attr.encode(), _DST, hashlib.sha256)


def _pair(p1, q2):
    """Unreduced Miller loop for e(p1, q2), p1 in G1 and q2 in G2."""
    return miller_loop(q2, p1, final_exponentiate=False)


def _share(policy: PolicyExpr, secret: int, rng, out: list) -> None:
    """Split ``secret`` down the access tree; appends (attribute, share) per leaf in DFS order."""
    if isinstance(policy, Attr):
        out.append((policy.name, secret))
        return
    k = len(policy.children) if isinstance(policy, And) else 1
    coeffs = [secret] + [rng.randbelow(curve_order) for _ in range(k - 1)]
    for index, child in enumerate(policy.children, start=1):
        value = 0
        for c in reversed(coeffs):
            value = (value * index + c) % curve_order
        _share(child, value, rng, out)


def _lagrange_at_zero(i: int, indices: list[int]) -> int:
    num, den = 1, 1
    for j in indices:
        if j != i:
            num = num * (-j) % curve_order
            den = den * (i - j) % curve_order
    return num * pow(den, -1, curve_order) % curve_order


def _count_leaves(policy: PolicyExpr) -> int:
    return 1 if isinstance(policy, Attr) else sum(_count_leaves(c) for c in policy.children)


def _assign(policy: PolicyExpr, held: set, offset: int):
    """Leaf-index -> reconstruction coefficient for a cheapest satisfying subset, or None."""
    if isinstance(policy, Attr):
        return {offset: 1} if policy.name in held else None
    child_offsets = []
    pos = offset
    for child in policy.children:
        child_offsets.append(pos)
        pos += _count_leaves(child)
    if isinstance(policy, And):
        subs = [_assign(c, held, o) for c, o in zip(policy.children, child_offsets)]
        if any(s is None for s in subs):
            return None
        indices = list(range(1, len(subs) + 1))
        out = {}
        for idx, sub in zip(indices, subs):
            lam = _lagrange_at_zero(idx, indices)
            for leaf, w in sub.items():
                out[leaf] = w * lam % curve_order
        return out
    best = None
    for child, o in zip(policy.children, child_offsets):
        sub = _assign(child, held, o)
        if sub is not None and (best is None or len(sub) < len(best)):
            best = sub
    return best


class Bsw07Provider:
    name = "bsw07"

    def __init__(self):
        self._hash_cache: dict[str, object] = {}
        self._egg = None

    def _h(self, attr: str):
        point = self._hash_cache.get(attr)
        if point is None:
            point = self._hash_cache[attr] = _hash_attr(attr)
        return point

    def _e_g1_g2(self):
        if self._egg is None:
            self._egg = final_exponentiate(_pair(G1, G2))
        return self._egg

    # params: h = g1^beta | f = g2^(1/beta) | e(g1,g2)^alpha ; master: beta | g2^alpha
    def setup(self, rng) -> tuple[bytes, bytes]:
        alpha, beta = _scalar(rng), _scalar(rng)
        h = multiply(G1, beta)
        f = multiply(G2, pow(beta, -1, curve_order))
        egg_alpha = self._e_g1_g2() ** alpha
        params = _g1_bytes(h) + _g2_bytes(f) + _gt_bytes(egg_alpha)
        master = beta.to_bytes(32, "big") + _g2_bytes(multiply(G2, alpha))
        return params, master

    def _parse_params(self, params: bytes):
        if len(params) != _G1_BYTES + _G2_BYTES + 12 * _FQ_BYTES:
            raise ProviderError("bad bsw07 public parameters")
        h = _g1_from(params[:_G1_BYTES])
        egg_alpha = _gt_from(params[_G1_BYTES + _G2_BYTES:])
        return h, egg_alpha

    def keygen(self, params: bytes, master: bytes, attrs, rng) -> bytes:
        if len(master) != 32 + _G2_BYTES:
            raise ProviderError("bad bsw07 master key")
        beta = int.from_bytes(master[:32], "big")
        g2_alpha = _g2_from(master[32:])
        r = _scalar(rng)
        g2_r = multiply(G2, r)
        d = multiply(add(g2_alpha, g2_r), pow(beta, -1, curve_order))
        body = tlv.encode_tlv(T_POINT, _g2_bytes(d))
        for attr in attrs:
            rj = _scalar(rng)
            dj = add(g2_r, multiply(self._h(attr), rj))
            dj_prime = multiply(G1, rj)
            body += tlv.encode_tlv(T_ATTR, attr.encode())
            body += tlv.encode_tlv(T_POINT, _g2_bytes(dj)) + tlv.encode_tlv(T_POINT, _g1_bytes(dj_prime))
        return body

    def encapsulate(self, params: bytes, policy: PolicyExpr, rng) -> tuple[bytes, bytes]:
        h, egg_alpha = self._parse_params(params)
        s = _scalar(rng)
        shares: list = []
        _share(policy, s, rng, shares)
        header = tlv.encode_tlv(T_POINT, _g1_bytes(multiply(h, s)))
        for attr, q in shares:
            header += tlv.encode_tlv(T_POINT, _g1_bytes(multiply(G1, q)))
            header += tlv.encode_tlv(T_POINT, _g2_bytes(multiply(self._h(attr), q)))
        return self._kdf(egg_alpha ** s), header

    def decapsulate(self, userkey: bytes, attrs, policy: PolicyExpr, header: bytes) -> bytes:
        try:
            key_items = list(tlv.iter_tlvs(userkey))
            hdr_items = list(tlv.iter_tlvs(header))
        except MalformedPacket as err:
            raise ProviderError(f"malformed bsw07 material: {err}") from None
        if not key_items or key_items[0][0] != T_POINT or (len(key_items) - 1) % 3:
            raise ProviderError("malformed bsw07 user key")
        d = _g2_from(key_items[0][1])
        components = {}
        for i in range(1, len(key_items), 3):
            (ta, name), (tp1, dj), (tp2, djp) = key_items[i:i + 3]
            if (ta, tp1, tp2) != (T_ATTR, T_POINT, T_POINT):
                raise ProviderError("malformed bsw07 user key")
            components[name.decode()] = (dj, djp)

        n_leaves = _count_leaves(policy)
        if len(hdr_items) != 1 + 2 * n_leaves or any(t != T_POINT for t, _ in hdr_items):
            raise ProviderError("ciphertext header does not match policy")
        assignment = _assign(policy, set(components), 0)
        if assignment is None:
            raise PolicyNotSatisfied("attributes do not satisfy policy")

        leaf_names = leaves(policy)
        c = _g1_from(hdr_items[0][1])
        acc = _pair(c, d)
        for leaf, w in sorted(assignment.items()):
            dj_b, djp_b = components[leaf_names[leaf]]
            c_y = _g1_from(hdr_items[1 + 2 * leaf][1])
            c_y_prime = _g2_from(hdr_items[2 + 2 * leaf][1])
            acc = acc * _pair(neg(multiply(c_y, w)), _g2_from(dj_b))
            acc = acc * _pair(multiply(_g1_from(djp_b), w), c_y_prime)
        return self._kdf(final_exponentiate(acc))

    @staticmethod
    def _kdf(gt) -> bytes:
        return hashlib.sha256(b"bsw07-kem" + _gt_bytes(gt)).digest()

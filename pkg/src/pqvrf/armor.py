"""Hex-armored artifact files with version headers."""

from __future__ import annotations

import re
import textwrap

from .delegation import DidKeyPair, OffchainKeys, ParticipantKeys, did_for
from .group import GroupError, GroupParams, decode_element, decode_scalar, encode_element, encode_scalar, get_group, group_exp
from .ringsig import Ring, RingMember, VrfProof
from .rlwe import RlweKeyPair, get_params
from .rlwe.scheme import deserialize_ntt_poly, serialize_poly
from .vrf import VrfKeyMaterial

ARMOR_VERSION = "1"
_BLOCK = re.compile(r"-----BEGIN PQVRF ([A-Z ]+)-----\n(.*?)\n-----END PQVRF \1-----", re.S)


class ArmorError(ValueError):
    pass


def armor(kind: str, payload: bytes, headers: dict[str, str] | None = None) -> str:
    head = {"Version": ARMOR_VERSION, **(headers or {})}
    lines = [f"-----BEGIN PQVRF {kind}-----"]
    lines += [f"{k}: {v}" for k, v in head.items()]
    lines.append("")
    lines += textwrap.wrap(payload.hex(), 64) or [""]
    lines.append(f"-----END PQVRF {kind}-----")
    return "\n".join(lines) + "\n"


def dearmor(text: str, kind: str | None = None) -> tuple[str, dict[str, str], bytes]:
    m = _BLOCK.search(text.replace("\r\n", "\n"))
    if not m:
        raise ArmorError("no armored block found")
    found, body = m.group(1), m.group(2)
    if kind is not None and found != kind:
        raise ArmorError(f"expected a {kind} block, found {found}")
    header_part, sep, hex_part = body.partition("\n\n")
    if not sep:
        raise ArmorError("missing blank line after headers")
    headers = {}
    for line in header_part.splitlines():
        key, colon, value = line.partition(":")
        if not colon:
            raise ArmorError(f"bad header line {line!r}")
        headers[key.strip()] = value.strip()
    if headers.get("Version") != ARMOR_VERSION:
        raise ArmorError(f"unsupported armor version {headers.get('Version')!r}")
    try:
        payload = bytes.fromhex("".join(hex_part.split()))
    except ValueError as exc:
        raise ArmorError("payload is not hex") from exc
    return found, headers, payload


def _group_from(headers: dict[str, str]) -> GroupParams:
    try:
        return get_group(headers["Group"])
    except (KeyError, GroupError) as exc:
        raise ArmorError("missing or unknown Group header") from exc


# --- specific artifacts -------------------------------------------------------


def armor_proof(params: GroupParams, pi: VrfProof) -> str:
    return armor("PROOF", pi.to_bytes(params), {"Group": params.name})


def load_proof(text: str) -> tuple[GroupParams, VrfProof]:
    _, headers, payload = dearmor(text, "PROOF")
    params = _group_from(headers)
    try:
        return params, VrfProof.from_bytes(params, payload)
    except ValueError as exc:
        raise ArmorError(f"malformed proof: {exc}") from exc


def armor_ring(params: GroupParams, ring: Ring) -> str:
    payload = b"".join(encode_element(params, pk) for pk in ring.pks)
    return armor("RING", payload, {"Group": params.name, "Members": str(len(ring))})


def load_ring(text: str) -> tuple[GroupParams, Ring]:
    _, headers, payload = dearmor(text, "RING")
    params = _group_from(headers)
    el = params.element_len
    if not payload or len(payload) % el:
        raise ArmorError("ring payload is not a whole number of elements")
    try:
        pks = [decode_element(params, payload[i:i + el]) for i in range(0, len(payload), el)]
        ring = Ring(tuple(RingMember(did_for(params, pk), pk) for pk in pks))
    except ValueError as exc:
        raise ArmorError(f"malformed ring: {exc}") from exc
    if headers.get("Members") not in (None, str(len(ring))):
        raise ArmorError("member count header does not match payload")
    return params, ring


def _pair(params: GroupParams, sk: int) -> DidKeyPair:
    pk = group_exp(params, params.generator_g, sk)
    return DidKeyPair(did_for(params, pk), sk, pk)


def armor_keys(km: VrfKeyMaterial) -> str:
    g = km.group
    body = b"".join(encode_scalar(g, k.onchain.sk) + encode_scalar(g, k.delegation.sk) for k in km.participants)
    body += encode_scalar(g, km.offchain.sk_off)
    body += b"".join(serialize_poly(x) for x in (km.rlwe_keys.a, km.rlwe_keys.p, km.rlwe_keys.r2))
    headers = {"Group": km.group_name, "Rlwe": km.rlwe_name, "Participants": str(len(km.participants))}
    return armor("SECRET KEYS", body, headers)


def load_keys(text: str) -> VrfKeyMaterial:
    _, headers, payload = dearmor(text, "SECRET KEYS")
    g = _group_from(headers)
    try:
        rp = get_params(headers["Rlwe"])
        n = int(headers["Participants"])
    except (KeyError, ValueError) as exc:  # RlweParamError is a ValueError
        raise ArmorError("missing or bad Rlwe/Participants header") from exc
    sl, pl = g.scalar_len, 2 * rp.n
    if len(payload) != (2 * n + 1) * sl + 3 * pl:
        raise ArmorError("key payload length does not match headers")
    try:
        scalars = [decode_scalar(g, payload[i * sl:(i + 1) * sl]) for i in range(2 * n + 1)]
        off = (2 * n + 1) * sl
        a, p, r2 = (deserialize_ntt_poly(rp, payload[off + j * pl:off + (j + 1) * pl]) for j in range(3))
    except ValueError as exc:
        raise ArmorError(f"malformed key material: {exc}") from exc
    participants = tuple(
        ParticipantKeys(_pair(g, scalars[2 * i]), _pair(g, scalars[2 * i + 1])) for i in range(n)
    )
    sk_off = scalars[-1]
    offchain = OffchainKeys(sk_off, group_exp(g, g.generator_g, sk_off))
    return VrfKeyMaterial(g.name, rp.name, participants, RlweKeyPair(a, p, r2), offchain)

"""Binary packet records for fixtures and golden files.

Little-endian layout, one packet per record::

    slot:u16 | k:u16 | m:u16 | q:u8 | coeffs: k bytes | payload: m bytes
"""
import struct

from .snc import CodedPacket

_HEAD = struct.Struct("<HHHB")


def pack_packet(pkt):
    if not 1 <= pkt.q <= 8:
        raise ValueError(f"q must be in 1..8, got {pkt.q}")
    return _HEAD.pack(pkt.slot, pkt.k, pkt.m, pkt.q) + pkt.coeffs + pkt.payload


def unpack_packet(buf, offset=0):
    """Parse one record starting at ``offset``.

    :returns: ``(packet, next_offset)``
    """
    if len(buf) - offset < _HEAD.size:
        raise ValueError("truncated packet header")
    slot, k, m, q = _HEAD.unpack_from(buf, offset)
    start = offset + _HEAD.size
    end = start + k + m
    if end > len(buf):
        raise ValueError(f"truncated packet body: need {end - offset} bytes")
    coeffs = bytes(buf[start : start + k])
    payload = bytes(buf[start + k : end])
    limit = 1 << q
    if any(b >= limit for b in coeffs) or any(b >= limit for b in payload):
        raise ValueError(f"symbol out of range for GF(2^{q})")
    return CodedPacket(slot, coeffs, payload, q), end


def dump_packets(packets):
    return b"".join(pack_packet(p) for p in packets)


def load_packets(buf):
    out = []
    off = 0
    while off < len(buf):
        pkt, off = unpack_packet(buf, off)
        out.append(pkt)
    return out

import struct

import numpy as np
import pytest

from qcfr.errors import HeaderMismatch
from qcfr.qcfmsr import NodeStore
from qcfr.shard import (
    MBR,
    MSR,
    ShardHeader,
    field_poly,
    mbr_coords,
    mbr_payload,
    msr_payload,
    msr_store,
)


def header(**kw):
    base = dict(scheme=MSR, q=256, field_poly=0x11D, k=3, node_index=2, zeta=(7, 1, 200),
                graph_hash=bytes(8), file_len=1 << 20, stripe_count=174763)
    base.update(kw)
    return ShardHeader(**base)


def test_layout_is_bit_exact():
    raw = header().pack()
    assert raw[:4] == b"QCFR"
    assert raw[4] == 1 and raw[5] == 0
    assert struct.unpack_from("<HHHH", raw, 6) == (256, 0x11D, 3, 2)
    assert raw[14:17] == bytes([7, 1, 200])
    assert raw[17:25] == bytes(8)
    assert struct.unpack_from("<QQ", raw, 25) == (1 << 20, 174763)
    assert len(raw) == header().size == 41


def test_round_trip_is_byte_identical():
    h = header(scheme=MBR, graph_hash=b"\x01" * 8, k=5, zeta=(1, 2, 3, 4, 5))
    raw = h.pack()
    assert ShardHeader.unpack(raw) == h
    assert ShardHeader.unpack(raw).pack() == raw


@pytest.mark.parametrize("mutate,msg", [
    (lambda b: b"XXXX" + b[4:], "magic"),
    (lambda b: b[:4] + b"\x09" + b[5:], "version"),
    (lambda b: b[:5] + b"\x05" + b[6:], "scheme"),
    (lambda b: b[:15] + b"\x00" + b[16:], "zero"),
    (lambda b: b[:20], "truncated"),
])
def test_rejects_corrupt_headers(mutate, msg):
    with pytest.raises(HeaderMismatch, match=msg):
        ShardHeader.unpack(mutate(header().pack()))


def test_field_poly_values():
    assert field_poly(256) == 0x11D
    assert field_poly(8) == 0b1011
    assert field_poly(7) == 0
    with pytest.raises(HeaderMismatch):
        header(q=8, field_poly=0, zeta=(1, 1, 2)).params()


def test_payload_codecs():
    store = NodeStore(4, np.array([1, 2, 3], dtype=np.uint8), np.array([9, 8, 7], dtype=np.uint8))
    raw = msr_payload(store)
    assert raw == bytes([1, 9, 2, 8, 3, 7])
    assert msr_store(4, raw) == store
    store5 = NodeStore(5, store.v, store.rho)
    coords = {5: store5, 2: NodeStore(2, np.array([4, 4, 4]), np.array([0, 1, 0]))}
    raw = mbr_payload(coords)
    assert raw[:4] == bytes([4, 0, 1, 9])  # label 2 first
    back = mbr_coords([5, 2], raw)
    assert back[5] == store5 and list(back) == [2, 5]

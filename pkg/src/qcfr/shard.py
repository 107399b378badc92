"""On-disk shard format.

Every shard is a fixed little-endian header followed by the payload::

    magic        4s   b"QCFR"
    version      u8
    scheme       u8   0 = MSR, 1 = MBR
    field        u16  q
    field_poly   u16  reduction polynomial bits for q = 2^m, 0 for prime q
    k            u16  base code dimension
    node_index   u16  1-based node (MSR) or vertex (MBR)
    zeta         k bytes
    graph_hash   8 bytes, first 8 bytes of sha256 of the edge list (MBR), else zero
    file_len     u64  original byte length
    stripe_count u64

The payload stores one byte per field symbol.  An MSR shard holds
(v_i, rho_i) per stripe, stripe-major.  An MBR shard holds its r_bar
coordinates in ascending label order, each as (v_j, rho_j), stripe-major.
MBR directories also carry a ``graph.txt`` sidecar with the edge list.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import gf
from .errors import HeaderMismatch
from .qcfmsr import CodeParams, NodeStore

MAGIC = b"QCFR"
VERSION = 1
MSR, MBR = 0, 1
_HEAD = struct.Struct("<4sBBHHHH")
_TAIL = struct.Struct("<8sQQ")
GRAPH_SIDECAR = "graph.txt"


@dataclass(frozen=True)
class ShardHeader:
    scheme: int
    q: int
    field_poly: int
    k: int
    node_index: int
    zeta: tuple[int, ...]
    graph_hash: bytes
    file_len: int
    stripe_count: int
    version: int = VERSION

    @property
    def size(self) -> int:
        return _HEAD.size + self.k + _TAIL.size

    def pack(self) -> bytes:
        if self.q > 256:
            raise HeaderMismatch("coefficients must fit in one byte (q <= 256)")
        return (
            _HEAD.pack(MAGIC, self.version, self.scheme, self.q, self.field_poly, self.k, self.node_index)
            + bytes(self.zeta)
            + _TAIL.pack(self.graph_hash, self.file_len, self.stripe_count)
        )

    @classmethod
    def unpack(cls, buf: bytes) -> ShardHeader:
        if len(buf) < _HEAD.size:
            raise HeaderMismatch("truncated shard header")
        magic, version, scheme, q, poly, k, node = _HEAD.unpack_from(buf)
        if magic != MAGIC:
            raise HeaderMismatch(f"bad magic {magic!r}")
        if version != VERSION:
            raise HeaderMismatch(f"unsupported shard version {version}")
        if scheme not in (MSR, MBR):
            raise HeaderMismatch(f"unknown scheme byte {scheme}")
        end = _HEAD.size + k
        if len(buf) < end + _TAIL.size:
            raise HeaderMismatch("truncated shard header")
        zeta = tuple(buf[_HEAD.size : end])
        if 0 in zeta:
            raise HeaderMismatch("zero coefficient in header")
        ghash, file_len, stripes = _TAIL.unpack_from(buf, end)
        return cls(scheme, q, poly, k, node, zeta, ghash, file_len, stripes, version)

    def params(self) -> CodeParams:
        p = CodeParams(self.k, self.q, self.zeta)
        if field_poly(self.q) != self.field_poly:
            raise HeaderMismatch(f"field polynomial {self.field_poly:#x} does not match F_{self.q}")
        return p

    def same_code(self, other: ShardHeader) -> bool:
        fields = ("scheme", "q", "field_poly", "k", "zeta", "graph_hash", "file_len", "stripe_count", "version")
        return all(getattr(self, f) == getattr(other, f) for f in fields)


def field_poly(q: int) -> int:
    f = gf.field_new(q)
    return f.poly if f.degree > 1 else 0


def payload_len(h: ShardHeader, r_bar: int = 1) -> int:
    per = 2 if h.scheme == MSR else 2 * r_bar
    return per * h.stripe_count


def msr_payload(store: NodeStore) -> bytes:
    return np.stack([store.v, store.rho], axis=-1).astype(np.uint8).tobytes()


def msr_store(index: int, payload: bytes) -> NodeStore:
    a = np.frombuffer(payload, dtype=np.uint8).reshape(-1, 2)
    return NodeStore(index, a[:, 0].copy(), a[:, 1].copy())


def mbr_payload(coords: dict[int, NodeStore]) -> bytes:
    cols = []
    for label in sorted(coords):
        cols += [coords[label].v, coords[label].rho]
    if not cols:
        return b""
    return np.stack(cols, axis=-1).astype(np.uint8).tobytes()


def mbr_coords(labels: list[int], payload: bytes) -> dict[int, NodeStore]:
    a = np.frombuffer(payload, dtype=np.uint8).reshape(-1, 2 * len(labels))
    return {j: NodeStore(j, a[:, 2 * t].copy(), a[:, 2 * t + 1].copy()) for t, j in enumerate(sorted(labels))}


def shard_name(index: int) -> str:
    return f"shard_{index:03d}.qcfr"


def write_shard(path: Path, header: ShardHeader, payload: bytes) -> None:
    Path(path).write_bytes(header.pack() + payload)


def read_shard(path: Path, r_bar: int = 1) -> tuple[ShardHeader, bytes]:
    buf = Path(path).read_bytes()
    h = ShardHeader.unpack(buf)
    payload = buf[h.size :]
    if h.scheme == MSR and len(payload) != payload_len(h):
        raise HeaderMismatch(f"{path}: payload is {len(payload)} bytes, header implies {payload_len(h)}")
    if h.scheme == MBR and h.stripe_count and len(payload) % (2 * h.stripe_count):
        raise HeaderMismatch(f"{path}: payload length inconsistent with stripe count")
    if h.scheme == MBR and len(payload) != payload_len(h, r_bar):
        raise HeaderMismatch(f"{path}: payload is {len(payload)} bytes, header implies {payload_len(h, r_bar)}")
    return h, payload


def scan_dir(directory: Path, r_bar: int = 1) -> dict[int, tuple[ShardHeader, bytes]]:
    """All shards in ``directory`` keyed by node index; headers must agree."""
    found: dict[int, tuple[ShardHeader, bytes]] = {}
    ref = None
    for path in sorted(Path(directory).glob("shard_*.qcfr")):
        h, payload = read_shard(path, r_bar)
        if ref is None:
            ref = h
        elif not ref.same_code(h):
            raise HeaderMismatch(f"{path.name} belongs to a different code than {shard_name(ref.node_index)}")
        if h.node_index in found:
            raise HeaderMismatch(f"duplicate shard for node {h.node_index}")
        found[h.node_index] = (h, payload)
    return found

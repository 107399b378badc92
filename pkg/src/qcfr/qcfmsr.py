"""Quasi-cyclic flexible MSR codes: construction, encoding, repair, decoding.

A code is fixed by k and nonzero coefficients zeta_1..zeta_k over F_q.  The
file is n = 2k symbols v_1..v_n; node s_i stores (v_i, rho_i) with

    rho_i = sum_{l=1..k} zeta_l * v_{i+l}        (indices taken cyclically in 1..n)

so the generator is F = (I | Z) with Z circulant.  Node indices are 1-based
in every public function; arrays are 0-based internally (index i lives at
position i - 1).

Real payloads are cut into stripes of n symbols.  Every per-node quantity
is then an array over stripes and all index arithmetic is unchanged.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import gf
from .errors import HelperUnavailable, InvalidParams, LengthMismatch, Singular, SingularSubset

Fetch = Callable[[int, str], np.ndarray]


@dataclass(frozen=True)
class CodeParams:
    k: int
    q: int
    zeta: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "zeta", tuple(int(z) for z in self.zeta))
        if self.k < 2:
            raise InvalidParams(f"k must be at least 2, got {self.k}")
        if len(self.zeta) != self.k:
            raise InvalidParams(f"expected {self.k} coefficients, got {len(self.zeta)}")
        if any(not 0 < z < self.q for z in self.zeta):
            raise InvalidParams(f"coefficients must be nonzero elements of F_{self.q}: {self.zeta}")
        gf.field_new(self.q)

    @property
    def n(self) -> int:
        return 2 * self.k

    @property
    def field(self) -> gf.FieldCtx:
        return gf.field_new(self.q)

    @property
    def alpha(self) -> Fraction:
        """Per-node storage as a fraction of the file size."""
        return Fraction(1, self.k)

    def __str__(self):
        return f"[{self.n},{self.k},{self.k + 1}] over F_{self.q}, zeta={self.zeta}"


def wrap(i: int, n: int) -> int:
    """Map any integer index onto 1..n cyclically."""
    return (i - 1) % n + 1


def circulant(p: CodeParams) -> np.ndarray:
    """The n x n matrix Z; column i holds the coefficients of rho_i."""
    n = p.n
    z = np.zeros((n, n), dtype=np.uint8)
    for i in range(1, n + 1):
        for l, coeff in enumerate(p.zeta, start=1):
            z[wrap(i + l, n) - 1, i - 1] = coeff
    return z


def build_generator(p: CodeParams) -> np.ndarray:
    """F = (I | Z), an n x 2n matrix over F_q."""
    return np.concatenate([gf.identity(p.n), circulant(p)], axis=1)


def subset_matrix(p: CodeParams, s: Sequence[int]) -> np.ndarray:
    """F^s: identity columns of s (ascending), then Z columns of s (ascending)."""
    cols = sorted(s)
    z = circulant(p)
    eye = gf.identity(p.n)
    idx = [c - 1 for c in cols]
    return np.concatenate([eye[:, idx], z[:, idx]], axis=1)


@dataclass(frozen=True, eq=False)
class NodeStore:
    """Contents of node s_i: one information and one redundancy coordinate per stripe."""

    index: int
    v: np.ndarray
    rho: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, NodeStore):
            return NotImplemented
        return (
            self.index == other.index
            and np.array_equal(self.v, other.v)
            and np.array_equal(self.rho, other.rho)
        )

    def coordinate(self, kind: str) -> np.ndarray:
        if kind == "v":
            return self.v
        if kind == "rho":
            return self.rho
        raise ValueError(f"unknown coordinate kind {kind!r}")


@dataclass(frozen=True, eq=False)
class Codeword:
    params: CodeParams
    v: np.ndarray  # (..., n)
    rho: np.ndarray  # (..., n)

    @cached_property
    def nodes(self) -> dict[int, NodeStore]:
        return {
            i: NodeStore(i, self.v[..., i - 1].copy(), self.rho[..., i - 1].copy())
            for i in range(1, self.params.n + 1)
        }


def encode(p: CodeParams, v) -> Codeword:
    """Encode one stripe (shape (n,)) or many stripes (shape (stripes, n))."""
    field = p.field
    v = np.asarray(v)
    if v.shape[-1:] != (p.n,):
        raise LengthMismatch(f"expected {p.n} symbols per stripe, got shape {v.shape}")
    if v.size and (v.min() < 0 or v.max() >= p.q):
        raise ValueError(f"symbols must lie in range({p.q})")
    v = v.astype(np.uint8)
    rho = np.zeros_like(v)
    for l, coeff in enumerate(p.zeta, start=1):
        # rho_i picks up zeta_l * v_{i+l}
        shifted = np.roll(v, -l, axis=-1)
        rho = field.add(rho, field.mul(coeff, shifted))
    return Codeword(p, v, rho)


def repair_helpers(p: CodeParams, i: int) -> tuple[tuple[int, ...], int]:
    """Fixed helper set for node i: the next k nodes, then the previous node."""
    n = p.n
    return tuple(wrap(i + l, n) for l in range(1, p.k + 1)), wrap(i - 1, n)


class NodeFetcher:
    """Serves stored coordinates from a mapping of live nodes and counts transfers.

    ``transfers`` counts coordinates served; ``symbols`` counts base-field
    symbols moved (one per stripe per coordinate).
    """

    def __init__(self, nodes: Mapping[int, object]):
        self.nodes = nodes
        self.transfers = 0
        self.symbols = 0
        self.log: list[tuple[int, str]] = []

    def __call__(self, node: int, kind: str) -> np.ndarray:
        if node not in self.nodes:
            raise HelperUnavailable(node)
        data = self.nodes[node].coordinate(kind)
        self.transfers += 1
        self.symbols += max(1, int(np.size(data)))
        self.log.append((node, kind))
        return data


def _download(fetch: Fetch, node: int, kind: str, needed) -> np.ndarray:
    try:
        return np.asarray(fetch(node, kind), dtype=np.uint8)
    except HelperUnavailable as exc:
        raise HelperUnavailable(exc.node, needed) from None
    except LookupError:
        raise HelperUnavailable(node, needed) from None


def regenerate(p: CodeParams, failed: int, fetch: Fetch) -> NodeStore:
    """Exact repair of node ``failed`` from its fixed helper set.

    Downloads v_{i+1..i+k} and rho_{i-1}; helpers only serve stored data.
    """
    field = p.field
    n, k, zeta = p.n, p.k, p.zeta
    if not 1 <= failed <= n:
        raise ValueError(f"node index {failed} outside 1..{n}")
    ahead, behind = repair_helpers(p, failed)
    needed = ahead + (behind,)

    info = [_download(fetch, j, "v", needed) for j in ahead]
    rho = field.mul(zeta[0], info[0])
    for l in range(2, k + 1):
        rho = field.add(rho, field.mul(zeta[l - 1], info[l - 1]))

    # rho_{i-1} = zeta_1 v_i + sum_{l=2..k} zeta_l v_{i+l-1}
    acc = _download(fetch, behind, "rho", needed)
    for l in range(2, k + 1):
        acc = field.sub(acc, field.mul(zeta[l - 1], info[l - 2]))
    v = field.div(acc, zeta[0])
    return NodeStore(failed, np.asarray(v, dtype=np.uint8), np.asarray(rho, dtype=np.uint8))


def reconstruct(p: CodeParams, s: Sequence[int], contents) -> np.ndarray:
    """Recover the file symbols from the contents of k distinct nodes.

    ``contents`` maps node index to a NodeStore (or a (v, rho) pair), or is a
    sequence aligned with ``sorted(s)``.
    """
    field = p.field
    s = sorted(int(i) for i in s)
    if len(s) != p.k or len(set(s)) != p.k:
        raise LengthMismatch(f"need {p.k} distinct node indices, got {s}")
    if any(not 1 <= i <= p.n for i in s):
        raise ValueError(f"node indices must lie in 1..{p.n}: {s}")
    if isinstance(contents, Mapping):
        pairs = [contents[i] for i in s]
    else:
        pairs = list(contents)
    vs, rhos = [], []
    for item in pairs:
        if isinstance(item, NodeStore):
            vs.append(item.v)
            rhos.append(item.rho)
        else:
            vs.append(item[0])
            rhos.append(item[1])
    y = np.stack([np.asarray(x, dtype=np.uint8) for x in vs + rhos], axis=0)  # (n, ...)
    fs = subset_matrix(p, s)
    try:
        x = gf.mat_solve(field, fs.T, y.reshape(p.n, -1))
    except Singular:
        raise SingularSubset(s) from None
    return np.moveaxis(x.reshape(y.shape), 0, -1)


# ---------------------------------------------------------------------------
# Payload helpers
# ---------------------------------------------------------------------------


def symbols_per_byte(q: int) -> int:
    """Number of base-q digits needed to hold one byte."""
    d = 1
    while q**d < 256:
        d += 1
    return d


def bytes_to_symbols(data: bytes, q: int) -> np.ndarray:
    """Expand bytes into F_q symbols (little-endian base-q digits per byte)."""
    raw = np.frombuffer(bytes(data), dtype=np.uint8)
    if q == 256:
        return raw.copy()
    d = symbols_per_byte(q)
    vals = raw.astype(np.int64)
    out = np.empty((raw.size, d), dtype=np.uint8)
    for j in range(d):
        out[:, j] = vals % q
        vals //= q
    return out.reshape(-1)


def symbols_to_bytes(symbols: np.ndarray, q: int, length: int) -> bytes:
    symbols = np.asarray(symbols, dtype=np.int64).reshape(-1)
    if q == 256:
        return symbols[:length].astype(np.uint8).tobytes()
    d = symbols_per_byte(q)
    digits = symbols[: length * d].reshape(length, d)
    weights = q ** np.arange(d, dtype=np.int64)
    vals = digits @ weights
    if vals.size and vals.max() > 255:
        raise ValueError("symbol stream does not decode to bytes")
    return vals.astype(np.uint8).tobytes()


def to_stripes(symbols: np.ndarray, n: int) -> np.ndarray:
    """Zero-pad a flat symbol stream to whole stripes; shape (stripes, n)."""
    symbols = np.asarray(symbols, dtype=np.uint8).reshape(-1)
    stripes = math.ceil(symbols.size / n)
    out = np.zeros(stripes * n, dtype=np.uint8)
    out[: symbols.size] = symbols
    return out.reshape(stripes, n)

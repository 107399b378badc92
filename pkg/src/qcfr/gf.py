"""Finite fields F_q (q prime, or q = 2^m) and dense linear algebra over them.

Elements are plain integers in ``range(q)``.  For prime q they are residues
mod q; for q = 2^m an element's bits are the coefficients of a polynomial
over F_2 reduced modulo a fixed irreducible polynomial:

    m=2 : x^2 + x + 1                   0b111
    m=3 : x^3 + x + 1                   0b1011
    m=4 : x^4 + x + 1                   0b10011
    m=5 : x^5 + x^2 + 1                 0b100101
    m=6 : x^6 + x + 1                   0b1000011
    m=7 : x^7 + x^3 + 1                 0b10001001
    m=8 : x^8 + x^4 + x^3 + x^2 + 1     0b100011101

All of them are primitive, so the element ``2`` (the polynomial x) generates
the multiplicative group and serves as the field's named generator ``z``.

Arithmetic is done through full q x q lookup tables, which lets every
operation accept numpy arrays and broadcast.  Matrices are 2-D ``uint8``
arrays; a stack of matrices is a 3-D array.
"""

from __future__ import annotations

import contextlib
import functools
import re
from dataclasses import dataclass

import numpy as np

from .errors import NonSquare, Singular, UnsupportedOrder

IRREDUCIBLE = {
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10001001,
    8: 0b100011101,
}

MAX_ORDER = 256
_CLOSURE_CHECK_MAX = 64


def _is_prime(q: int) -> bool:
    if q < 2:
        return False
    return all(q % d for d in range(2, int(q**0.5) + 1))


def _clmul_mod(a: int, b: int, m: int, poly: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if a >> m:
            a ^= poly
    return out


@dataclass(frozen=True, eq=False)
class FieldCtx:
    """Immutable arithmetic context for F_q."""

    q: int
    characteristic: int
    degree: int
    poly: int  # irreducible polynomial bits for 2^m fields, 0 for prime fields
    add_table: np.ndarray
    mul_table: np.ndarray
    neg_table: np.ndarray
    inv_table: np.ndarray  # inv_table[0] == 0 by convention

    def __repr__(self):
        return f"FieldCtx(q={self.q})"

    @property
    def primitive_element(self) -> int:
        """The generator named z: x for 2^m fields, smallest generator otherwise."""
        if self.degree > 1:
            return 2
        return _smallest_generator(self)

    @property
    def bits(self) -> int | None:
        """Bit width of a symbol, or None when q is not a power of two."""
        return self.degree if self.characteristic == 2 else None

    def add(self, a, b):
        _tally(max(np.size(a), np.size(b)))
        return self.add_table[a, b]

    def neg(self, a):
        _tally(np.size(a))
        return self.neg_table[a]

    def sub(self, a, b):
        _tally(max(np.size(a), np.size(b)))
        return self.add_table[a, self.neg_table[b]]

    def mul(self, a, b):
        _tally(max(np.size(a), np.size(b)))
        return self.mul_table[a, b]

    def inv(self, a):
        if np.any(np.asarray(a) == 0):
            raise ZeroDivisionError("0 has no inverse")
        _tally(np.size(a))
        return self.inv_table[a]

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def pow(self, a: int, e: int) -> int:
        out = 1
        for _ in range(e):
            out = int(self.mul_table[out, a])
        return out

    def elements(self) -> np.ndarray:
        return np.arange(self.q, dtype=np.uint8 if self.q <= 256 else np.uint16)

    def parse(self, token: str) -> int:
        """Parse an element written as an integer, ``z`` or ``z^e``."""
        token = token.strip()
        match = re.fullmatch(r"z(?:\^(\d+))?", token)
        if match:
            return self.pow(self.primitive_element, int(match.group(1) or 1))
        value = int(token, 0)
        if not 0 <= value < self.q:
            raise ValueError(f"{value} is not an element of F_{self.q}")
        return value


def _smallest_generator(ctx: FieldCtx) -> int:
    for g in range(2, ctx.q):
        x, order = g, 1
        while x != 1:
            x = int(ctx.mul_table[x, g])
            order += 1
        if order == ctx.q - 1:
            return g
    return 1


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.uint8)
    a.setflags(write=False)
    return a


def _build_prime(p: int):
    e = np.arange(p, dtype=np.int64)
    add = (e[:, None] + e[None, :]) % p
    mul = (e[:, None] * e[None, :]) % p
    neg = (-e) % p
    inv = np.zeros(p, dtype=np.int64)
    for a in range(1, p):
        inv[a] = pow(a, p - 2, p)
    return add, mul, neg, inv


def _build_binary(m: int):
    q = 1 << m
    poly = IRREDUCIBLE[m]
    exp = np.zeros(2 * q, dtype=np.int64)
    log = np.zeros(q, dtype=np.int64)
    x = 1
    for i in range(q - 1):
        exp[i] = x
        log[x] = i
        x = _clmul_mod(x, 2, m, poly)
    if x != 1:
        raise RuntimeError(f"polynomial {poly:#b} is not primitive")
    exp[q - 1 : 2 * q - 2] = exp[: q - 1]
    e = np.arange(q, dtype=np.int64)
    add = e[:, None] ^ e[None, :]
    mul = exp[log[:, None] + log[None, :]]
    mul[0, :] = 0
    mul[:, 0] = 0
    inv = np.zeros(q, dtype=np.int64)
    inv[1:] = exp[(q - 1 - log[1:]) % (q - 1)]
    return add, mul, e.copy(), inv


def _check_closure(ctx: FieldCtx) -> None:
    e = np.arange(ctx.q)
    A, M = ctx.add_table.astype(np.int64), ctx.mul_table.astype(np.int64)
    ok = (
        np.array_equal(A, A.T)
        and np.array_equal(M, M.T)
        and np.array_equal(A[A[:, :, None], e[None, None, :]], A[e[:, None, None], A[None, :, :]])
        and np.array_equal(M[M[:, :, None], e[None, None, :]], M[e[:, None, None], M[None, :, :]])
        and np.array_equal(M[e[:, None, None], A[None, :, :]], A[M[:, :, None], M[:, None, :]])
        and np.all(A[e, ctx.neg_table] == 0)
        and np.all(M[e[1:], ctx.inv_table[1:]] == 1)
    )
    if not ok:
        raise RuntimeError(f"field tables for q={ctx.q} failed the closure check")


@functools.lru_cache(maxsize=None)
def field_new(q: int) -> FieldCtx:
    """Build (and cache) the field of order ``q``.

    Raises UnsupportedOrder unless q is a prime <= 256 or a power of two
    between 2 and 256.
    """
    q = int(q)
    if not 2 <= q <= MAX_ORDER:
        raise UnsupportedOrder(f"field order {q} outside [2, {MAX_ORDER}]")
    if _is_prime(q):
        tables, p, m, poly = _build_prime(q), q, 1, 0
    elif q & (q - 1) == 0:
        m = q.bit_length() - 1
        tables, p, poly = _build_binary(m), 2, IRREDUCIBLE[m]
    else:
        raise UnsupportedOrder(f"field order {q} is neither prime nor a power of two")
    add, mul, neg, inv = (_freeze(t) for t in tables)
    ctx = FieldCtx(q, p, m, poly, add, mul, neg, inv)
    if q <= _CLOSURE_CHECK_MAX:
        _check_closure(ctx)
    return ctx


class OpCounter:
    """Tally of field element operations performed while it is active."""

    def __init__(self):
        self.ops = 0


_active_counters: list[OpCounter] = []


def _tally(n) -> None:
    if _active_counters:
        n = int(n)
        for c in _active_counters:
            c.ops += n


@contextlib.contextmanager
def count_ops():
    """Count every element operation done through this module.

    Covers FieldCtx methods and all matrix kernels.  Counters are
    process-wide, so only use this from a single thread.
    """
    counter = OpCounter()
    _active_counters.append(counter)
    try:
        yield counter
    finally:
        _active_counters.remove(counter)


# ---------------------------------------------------------------------------
# Matrices
# ---------------------------------------------------------------------------


def as_matrix(ctx: FieldCtx, rows) -> np.ndarray:
    a = np.asarray(rows)
    if a.ndim != 2 or 0 in a.shape:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    if a.min() < 0 or a.max() >= ctx.q:
        raise ValueError(f"matrix entries must lie in range({ctx.q})")
    return a.astype(np.uint8)


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=np.uint8)


def mat_mul(ctx: FieldCtx, a, b) -> np.ndarray:
    """Matrix product over F_q; leading batch axes broadcast."""
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if a.shape[-1] != b.shape[-2]:
        raise ValueError(f"shape mismatch {a.shape} @ {b.shape}")
    out = np.zeros(np.broadcast_shapes(a.shape[:-2], b.shape[:-2]) + (a.shape[-2], b.shape[-1]), dtype=np.uint8)
    for t in range(a.shape[-1]):
        out = ctx.add_table[out, ctx.mul_table[a[..., :, t, None], b[..., None, t, :]]]
    _tally(2 * out.size * a.shape[-1])
    return out


def vec_mat(ctx: FieldCtx, v, m) -> np.ndarray:
    """Row vector(s) times matrix: ``v`` has shape (..., n), ``m`` (n, c)."""
    v = np.asarray(v, dtype=np.uint8)
    m = np.asarray(m, dtype=np.uint8)
    out = np.zeros(v.shape[:-1] + (m.shape[1],), dtype=np.uint8)
    for t in range(m.shape[0]):
        out = ctx.add_table[out, ctx.mul_table[v[..., t, None], m[t]]]
    _tally(2 * out.size * m.shape[0])
    return out


def _require_square(m: np.ndarray) -> None:
    if m.shape[-1] != m.shape[-2]:
        raise NonSquare(f"matrix of shape {m.shape[-2:]} is not square")


def mat_det(ctx: FieldCtx, m) -> int:
    """Determinant by Gaussian elimination over F_q."""
    m = np.asarray(m, dtype=np.uint8)
    _require_square(m)
    return int(batch_det(ctx, m[None])[0])


def batch_det(ctx: FieldCtx, mats) -> np.ndarray:
    """Determinants of a stack of square matrices, eliminated in lockstep.

    A matrix with no pivot in some column picks up a zero pivot, which pins
    its determinant at 0 for the rest of the sweep.
    """
    a = np.array(mats, dtype=np.uint8, copy=True)
    if a.ndim != 3:
        raise ValueError("expected a stack of matrices")
    _require_square(a)
    B, n, _ = a.shape
    add, mul, neg, inv = ctx.add_table, ctx.mul_table, ctx.neg_table, ctx.inv_table
    det = np.ones(B, dtype=np.uint8)
    idx = np.arange(B)
    for c in range(n):
        piv = c + np.argmax(a[:, c:, c] != 0, axis=1)
        swapped = piv != c
        if swapped.any():
            row_c = a[idx, c].copy()
            a[idx, c] = a[idx, piv]
            a[idx, piv] = row_c
            det[swapped] = neg[det[swapped]]
        p = a[:, c, c]
        det = mul[det, p]
        if c + 1 == n:
            break
        factor = mul[a[:, c + 1 :, c], inv[p][:, None]]
        _tally(3 * B * (n - c - 1) * (n - c))
        a[:, c + 1 :, c:] = add[a[:, c + 1 :, c:], neg[mul[factor[:, :, None], a[:, None, c, c:]]]]
    return det


def _row_reduce(ctx: FieldCtx, a: np.ndarray, ncols: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over the first ``ncols`` columns (in place)."""
    add, mul, neg, inv = ctx.add_table, ctx.mul_table, ctx.neg_table, ctx.inv_table
    rows = a.shape[0]
    pivots = []
    r = 0
    for c in range(ncols):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        p = r + nz[0]
        if p != r:
            a[[r, p]] = a[[p, r]]
        a[r] = mul[a[r], inv[a[r, c]]]
        others = np.flatnonzero(a[:, c])
        others = others[others != r]
        _tally(a.shape[1] * (1 + 3 * others.size))
        if others.size:
            a[others] = add[a[others], neg[mul[a[others, c][:, None], a[r][None, :]]]]
        pivots.append(c)
        r += 1
    return a, pivots


def mat_rank(ctx: FieldCtx, m) -> int:
    a = np.array(m, dtype=np.uint8, copy=True)
    _, pivots = _row_reduce(ctx, a, a.shape[1])
    return len(pivots)


def mat_inv(ctx: FieldCtx, m) -> np.ndarray:
    m = np.asarray(m, dtype=np.uint8)
    _require_square(m)
    n = m.shape[0]
    aug = np.concatenate([m, identity(n)], axis=1)
    aug, pivots = _row_reduce(ctx, aug, n)
    if len(pivots) < n:
        raise Singular(f"matrix has rank {len(pivots)} < {n}")
    return aug[:, n:].copy()


def mat_solve(ctx: FieldCtx, a, b) -> np.ndarray:
    """Solve ``a @ x = b``.

    ``b`` may be a vector of length n or an (n, t) matrix of t right-hand
    sides; the result has the same shape.
    """
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    _require_square(a)
    n = a.shape[0]
    if b.shape[0] != n:
        raise ValueError(f"right-hand side has {b.shape[0]} rows, expected {n}")
    rhs = b.reshape(n, -1)
    aug = np.concatenate([a, rhs], axis=1)
    aug, pivots = _row_reduce(ctx, aug, n)
    if len(pivots) < n:
        raise Singular(f"matrix has rank {len(pivots)} < {n}")
    return aug[:, n:].reshape(b.shape).copy()

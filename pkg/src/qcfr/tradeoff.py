"""Storage vs repair-bandwidth tradeoff for [n, k, r] regenerating codes.

All quantities are exact ``Fraction``s.  ``M`` is the file size; pass
``M=1`` (the default) to work in units of the file size.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import Infeasible, InvalidParams, TooLarge

DC_GUARD = 200_000


def _check(k: int, r: int, i: int | None = None) -> None:
    if k < 1 or r < k:
        raise InvalidParams(f"need 1 <= k <= r, got k={k}, r={r}")
    if i is not None and not 0 <= i <= k - 1:
        raise InvalidParams(f"breakpoint index {i} outside 0..{k - 1}")


def f_of(M, k: int, r: int, i: int) -> Fraction:
    """Bandwidth at the i-th breakpoint: 2Mr / ((2k-i-1)i + 2k(r-k+1))."""
    _check(k, r, i)
    return Fraction(2 * r, (2 * k - i - 1) * i + 2 * k * (r - k + 1)) * Fraction(M)


def g_of(k: int, r: int, i: int) -> Fraction:
    _check(k, r, i)
    return Fraction((2 * r - 2 * k + i + 1) * i, 2 * r)


def threshold_alpha(M, k: int, r: int, gamma) -> Fraction:
    """Minimum per-node storage for repair bandwidth ``gamma``."""
    _check(k, r)
    M, gamma = Fraction(M), Fraction(gamma)
    if gamma >= f_of(M, k, r, 0):
        return M / k
    for i in range(1, k):
        if gamma >= f_of(M, k, r, i):
            return (M - g_of(k, r, i) * gamma) / (k - i)
    raise Infeasible(f"gamma={gamma} is below the minimum-bandwidth point {f_of(M, k, r, k - 1)}")


@dataclass(frozen=True)
class TradeoffPoint:
    gamma: Fraction
    alpha: Fraction
    i: int | None = None  # breakpoint index, None for interior points


def msr_point(M, k: int, r: int) -> TradeoffPoint:
    return TradeoffPoint(f_of(M, k, r, 0), Fraction(M) / k, 0)


def mbr_point(M, k: int, r: int) -> TradeoffPoint:
    gamma = f_of(M, k, r, k - 1)
    return TradeoffPoint(gamma, gamma, k - 1)


def breakpoints(M, k: int, r: int) -> list[TradeoffPoint]:
    """Curve corners from the MSR end (i = 0) to the MBR end (i = k - 1)."""
    out = []
    for i in range(k):
        gamma = f_of(M, k, r, i)
        out.append(TradeoffPoint(gamma, threshold_alpha(M, k, r, gamma), i))
    return out


def sample_curve(k: int, r: int, num: int = 200, span: float = 1.25) -> list[tuple[float, float]]:
    """Float (gamma, alpha) samples in units of M, for plotting."""
    lo = f_of(1, k, r, k - 1)
    hi = f_of(1, k, r, 0) * Fraction(span).limit_denominator(1000)
    pts = []
    for j in range(num):
        gamma = lo + (hi - lo) * Fraction(j, num - 1)
        pts.append((float(gamma), float(threshold_alpha(1, k, r, gamma))))
    return pts


def curve_text(M, k: int, r: int) -> str:
    """Breakpoints as tab-separated exact rationals (units of M when M=1)."""
    rows = ["i\tgamma\talpha"]
    rows += [f"{p.i}\t{p.gamma}\t{p.alpha}" for p in breakpoints(M, k, r)]
    return "\n".join(rows)


# ---------------------------------------------------------------------------
# Information flow graph
# ---------------------------------------------------------------------------


@dataclass
class FlowGraph:
    """Directed graph of source, storage nodes (in/out pairs), repairs and a collector.

    Node ``x`` is split into ("in", x) -> ("out", x) with capacity alpha.
    Initial nodes hang off the source with infinite capacity; a newcomer
    receives beta from each helper's "out" side.  Infinite capacity is
    represented by ``None``.
    """

    alpha: Fraction
    beta: Fraction
    live: list[int] = field(default_factory=list)
    edges: dict = field(default_factory=dict)
    next_label: int = 1

    @classmethod
    def initial(cls, n: int, alpha, beta) -> FlowGraph:
        g = cls(Fraction(alpha), Fraction(beta))
        for _ in range(n):
            x = g._add_storage()
            g._edge("S", ("in", x), None)
        return g

    def _edge(self, u, v, cap) -> None:
        self.edges[(u, v)] = cap

    def _add_storage(self) -> int:
        x = self.next_label
        self.next_label += 1
        self._edge(("in", x), ("out", x), self.alpha)
        self.live.append(x)
        return x

    def repair(self, failed: int, helpers: Sequence[int]) -> int:
        if failed not in self.live:
            raise InvalidParams(f"node {failed} is not live")
        helpers = list(helpers)
        if failed in helpers or len(set(helpers)) != len(helpers) or not set(helpers) <= set(self.live):
            raise InvalidParams(f"invalid helper set {helpers} for node {failed}")
        self.live.remove(failed)
        x = self._add_storage()
        for h in helpers:
            self._edge(("out", h), ("in", x), self.beta)
        return x

    def max_flow(self, collector: Sequence[int]) -> Fraction:
        edges = dict(self.edges)
        for x in collector:
            edges[(("out", x), "DC")] = None
        return _max_flow(edges, "S", "DC")


def _max_flow(edges: dict, s, t) -> Fraction:
    """Edmonds-Karp with exact rational capacities; None means infinite."""
    finite = sum((c for c in edges.values() if c is not None), Fraction(0))
    big = finite + 1  # larger than any finite cut
    cap: dict = {}
    adj: dict = {}
    for (u, v), c in edges.items():
        cap[(u, v)] = cap.get((u, v), Fraction(0)) + (big if c is None else c)
        cap.setdefault((v, u), Fraction(0))
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    flow = Fraction(0)
    while True:
        parent = {s: None}
        queue = deque([s])
        while queue and t not in parent:
            u = queue.popleft()
            for v in adj.get(u, ()):
                if v not in parent and cap[(u, v)] > 0:
                    parent[v] = u
                    queue.append(v)
        if t not in parent:
            return min(flow, big)
        path = []
        v = t
        while parent[v] is not None:
            path.append((parent[v], v))
            v = parent[v]
        push = min(cap[e] for e in path)
        for u, v in path:
            cap[(u, v)] -= push
            cap[(v, u)] += push
        flow += push


def mincut_oracle(k: int, r: int, alpha, beta, history: Sequence[tuple[int, Sequence[int]]] = (), n: int | None = None) -> Fraction:
    """Smallest source-to-collector cut over all k-subsets of live nodes.

    ``history`` lists (failed node, helper set) repairs in order; the i-th
    newcomer is labelled n + i.  ``n`` defaults to r + 1.
    """
    n = r + 1 if n is None else n
    if n <= k or r > n - 1:
        raise InvalidParams(f"need k < n and r <= n - 1, got n={n}, k={k}, r={r}")
    g = FlowGraph.initial(n, alpha, beta)
    for failed, helpers in history:
        if len(helpers) != r:
            raise InvalidParams(f"repair of node {failed} must use exactly r={r} helpers")
        g.repair(failed, helpers)
    if math.comb(len(g.live), k) > DC_GUARD:
        raise TooLarge("too many collector subsets")
    return min(g.max_flow(dc) for dc in itertools.combinations(g.live, k))


def cut_bound(k: int, r: int, alpha, beta) -> Fraction:
    """sum_{i<k} min((r - i) beta, alpha): what every collector is guaranteed."""
    alpha, beta = Fraction(alpha), Fraction(beta)
    return sum((min((r - i) * beta, alpha) for i in range(k)), Fraction(0))

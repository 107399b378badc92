"""Minimum-bandwidth codes built from a base MSR code and a regular graph.

Each of the n = 2k base nodes becomes an edge of an r_bar-regular graph on
n_bar vertices; a vertex stores the base array coordinates (v_j, rho_j) of
its incident edges.  A failed vertex is rebuilt by copying, from each
neighbour, the coordinate of the edge they share: no arithmetic anywhere.
Any k_bar vertices cover at least k distinct edges, which is enough for the
base code to rebuild the file.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import analysis
from .errors import EdgeCountMismatch, HelperUnavailable, Infeasible, InsufficientCoverage, SingularSubset, TooLarge
from .qcfmsr import CodeParams, NodeStore, encode, reconstruct
from .tradeoff import mbr_point

THETA_GUARD = 10**7
STRATEGIES = ("complete", "cycle", "clique_union", "circulant")

# (k_bar, r_bar) of the reference comparison table, small-theta rows first
TABLE_ROWS = [(2, 2), (3, 3), (2, 4), (4, 4), (4, 2), (5, 2), (5, 3), (7, 3)]


@dataclass(frozen=True)
class RegularGraph:
    """Simple undirected regular graph; edge ``edges[j - 1]`` carries label j."""

    n_bar: int
    r_bar: int
    edges: tuple[tuple[int, int], ...]
    strategy: str = "custom"

    def __post_init__(self):
        edges = tuple((min(u, v), max(u, v)) for u, v in self.edges)
        object.__setattr__(self, "edges", edges)
        if not 1 < self.r_bar < self.n_bar:
            raise Infeasible(f"degree {self.r_bar} outside (1, {self.n_bar})")
        if self.r_bar * self.n_bar != 2 * len(edges):
            raise Infeasible(f"handshake fails: {self.r_bar}*{self.n_bar} != 2*{len(edges)}")
        if any(u == v for u, v in edges) or len(set(edges)) != len(edges):
            raise Infeasible("graph has a loop or a repeated edge")
        deg = [0] * (self.n_bar + 1)
        for u, v in edges:
            if not (1 <= u <= self.n_bar and 1 <= v <= self.n_bar):
                raise Infeasible(f"edge ({u}, {v}) leaves the vertex range")
            deg[u] += 1
            deg[v] += 1
        if any(d != self.r_bar for d in deg[1:]):
            raise Infeasible("graph is not regular")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def incident(self) -> dict[int, dict[int, int]]:
        """vertex -> {edge label: other endpoint}."""
        out: dict[int, dict[int, int]] = {w: {} for w in range(1, self.n_bar + 1)}
        for label, (u, v) in enumerate(self.edges, start=1):
            out[u][label] = v
            out[v][label] = u
        return {w: dict(sorted(d.items())) for w, d in out.items()}

    def labels(self, vertex: int) -> list[int]:
        return list(self.incident[vertex])

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n_bar, self.n_bar), dtype=np.int64)
        for u, v in self.edges:
            a[u - 1, v - 1] = a[v - 1, u - 1] = 1
        return a

    def to_text(self) -> str:
        return "".join(f"{u} {v} {label}\n" for label, (u, v) in enumerate(self.edges, start=1))

    @classmethod
    def from_text(cls, text: str) -> RegularGraph:
        rows = []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                u, v, label = (int(x) for x in line.split())
                rows.append((label, u, v))
        rows.sort()
        if [r[0] for r in rows] != list(range(1, len(rows) + 1)):
            raise Infeasible("edge labels must be exactly 1..n")
        n_bar = max(max(u, v) for _, u, v in rows)
        deg = 2 * len(rows) // n_bar
        return cls(n_bar, deg, tuple((u, v) for _, u, v in rows))

    def digest(self) -> bytes:
        """8-byte fingerprint of the edge list."""
        return hashlib.sha256(self.to_text().encode()).digest()[:8]


def build_regular_graph(n_bar: int, r_bar: int, strategy: str | None = None) -> RegularGraph:
    """An r_bar-regular graph on n_bar vertices.

    Default ladder: complete graph when r_bar = n_bar - 1, cycle when
    r_bar = 2, disjoint cliques K_{r_bar+1} when (r_bar + 1) divides n_bar,
    otherwise a circulant graph.  Cycle edges are labelled in traversal
    order (edge j joins vertices j - 1 and j, vertex 0 being n_bar), so
    vertex i holds base coordinates i and i + 1; other graphs label edges
    in sorted order.
    """
    if not 1 < r_bar < n_bar:
        raise Infeasible(f"need 1 < r_bar < n_bar, got r_bar={r_bar}, n_bar={n_bar}")
    if (r_bar * n_bar) % 2:
        raise Infeasible(f"r_bar * n_bar = {r_bar * n_bar} is odd")
    if strategy is None:
        if r_bar == n_bar - 1:
            strategy = "complete"
        elif r_bar == 2:
            strategy = "cycle"
        elif n_bar % (r_bar + 1) == 0:
            strategy = "clique_union"
        else:
            strategy = "circulant"

    if strategy == "complete":
        if r_bar != n_bar - 1:
            raise Infeasible("complete graph needs r_bar = n_bar - 1")
        edges = list(itertools.combinations(range(1, n_bar + 1), 2))
    elif strategy == "cycle":
        if r_bar != 2:
            raise Infeasible("cycle needs r_bar = 2")
        edges = [(n_bar, 1)] + [(j - 1, j) for j in range(2, n_bar + 1)]
    elif strategy == "clique_union":
        size = r_bar + 1
        if n_bar % size:
            raise Infeasible(f"{size} does not divide {n_bar}")
        edges = sorted(
            pair
            for start in range(1, n_bar + 1, size)
            for pair in itertools.combinations(range(start, start + size), 2)
        )
    elif strategy == "circulant":
        offsets = list(range(1, r_bar // 2 + 1))
        if r_bar % 2:
            offsets.append(n_bar // 2)
        pairs = set()
        for w in range(n_bar):
            for d in offsets:
                u, v = w + 1, (w + d) % n_bar + 1
                pairs.add((min(u, v), max(u, v)))
        edges = sorted(pairs)
    else:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    return RegularGraph(n_bar, r_bar, tuple(edges), strategy)


def theta_bound(k_bar: int, r_bar: int) -> int:
    """Most edges any k_bar vertices of an r_bar-regular simple graph can span."""
    if k_bar <= r_bar + 1:
        return math.comb(k_bar, 2)
    return (k_bar // (r_bar + 1)) * math.comb(r_bar + 1, 2) + math.comb(k_bar % (r_bar + 1), 2)


def theta_max(g: RegularGraph, k_bar: int) -> int:
    """Brute-force maximum number of edges inside a k_bar-subset of vertices."""
    total = math.comb(g.n_bar, k_bar)
    if total > THETA_GUARD:
        raise TooLarge(f"C({g.n_bar},{k_bar}) = {total} subsets exceeds the guard")
    adj = g.adjacency()
    best = 0
    combos = itertools.combinations(range(g.n_bar), k_bar)
    while True:
        block = np.array(list(itertools.islice(combos, 8192)), dtype=np.intp)
        if block.size == 0:
            return best
        inner = adj[block[:, :, None], block[:, None, :]].sum(axis=(1, 2)) // 2
        best = max(best, int(inner.max()))


@dataclass(frozen=True)
class MbrParams:
    k: int
    n_bar: int
    k_bar: int
    r_bar: int
    theta: int

    @property
    def n(self) -> int:
        return 2 * self.k

    def __str__(self):
        return f"[{self.n_bar},{self.k_bar},{self.r_bar}] from [{self.n},{self.k},{self.k + 1}]"


def solve_mbr_params(k_bar: int, r_bar: int) -> MbrParams:
    """Base dimension and vertex count giving the least storage for (k_bar, r_bar).

    k = k_bar * r_bar - theta with theta at its upper bound; n_bar = 4k / r_bar.
    """
    if k_bar < 2 or r_bar < 2:
        raise Infeasible(f"need k_bar, r_bar > 1, got {k_bar}, {r_bar}")
    theta = theta_bound(k_bar, r_bar)
    k = k_bar * r_bar - theta
    if (4 * k) % r_bar:
        raise Infeasible(f"n_bar = 4k/r_bar = {4 * k}/{r_bar} is not an integer")
    n_bar = 4 * k // r_bar
    if not r_bar < k:
        raise Infeasible(f"need r_bar < k, got r_bar={r_bar}, k={k}")
    if not k_bar < n_bar:
        raise Infeasible(f"need k_bar < n_bar, got k_bar={k_bar}, n_bar={n_bar}")
    if k < 2:
        raise Infeasible(f"base dimension {k} too small")
    return MbrParams(k, n_bar, k_bar, r_bar, theta)


def mbr_alpha(params: MbrParams, M=1) -> Fraction:
    """Per-vertex storage, which is also the repair bandwidth: r_bar * M / k."""
    return Fraction(params.r_bar, params.k) * Fraction(M)


def classical_mbr_alpha(params: MbrParams, M=1) -> Fraction:
    """Minimum-bandwidth storage of the classical tradeoff for the same vertex counts.

    Evaluated with collector size min(k_bar, r_bar) and repair degree
    max(k_bar, r_bar), the ordering under which the threshold function is
    defined.
    """
    lo, hi = sorted((params.k_bar, params.r_bar))
    return mbr_point(M, lo, hi).alpha


# ---------------------------------------------------------------------------
# Codes over a graph
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class VertexStore:
    """Base array coordinates held by one vertex, keyed by edge label."""

    vertex: int
    coords: dict[int, NodeStore]

    def __eq__(self, other):
        if not isinstance(other, VertexStore):
            return NotImplemented
        return self.vertex == other.vertex and self.coords.keys() == other.coords.keys() and all(
            self.coords[j] == other.coords[j] for j in self.coords
        )

    def coordinate(self, label: int) -> NodeStore:
        return self.coords[label]


@dataclass(frozen=True)
class MbrCode:
    base: CodeParams
    graph: RegularGraph
    k_bar: int | None = None

    @property
    def n_bar(self) -> int:
        return self.graph.n_bar

    @property
    def r_bar(self) -> int:
        return self.graph.r_bar

    @property
    def alpha(self) -> Fraction:
        return Fraction(self.r_bar, self.base.k)

    def vertex_contents(self, vertex: int) -> list[int]:
        """Base node indices stored at ``vertex``."""
        return self.graph.labels(vertex)


def build_mbr_code(base: CodeParams, g: RegularGraph, k_bar: int | None = None) -> MbrCode:
    if g.n_edges != base.n:
        raise EdgeCountMismatch(f"graph has {g.n_edges} edges, base code has {base.n} nodes")
    return MbrCode(base, g, k_bar)


def mbr_encode(code: MbrCode, v) -> dict[int, VertexStore]:
    nodes = encode(code.base, v).nodes
    return {
        w: VertexStore(w, {j: nodes[j] for j in code.graph.labels(w)})
        for w in range(1, code.n_bar + 1)
    }


class VertexFetcher:
    """Serves one base coordinate from a live vertex; counts coordinates and symbols."""

    def __init__(self, vertices: Mapping[int, VertexStore]):
        self.vertices = vertices
        self.transfers = 0
        self.symbols = 0

    def __call__(self, vertex: int, label: int) -> NodeStore:
        if vertex not in self.vertices:
            raise HelperUnavailable(vertex)
        coord = self.vertices[vertex].coordinate(label)
        self.transfers += 1
        self.symbols += 2 * max(1, int(np.size(coord.v)))
        return coord


def mbr_helpers(code: MbrCode, vertex: int) -> dict[int, int]:
    """{neighbour: shared edge label} for ``vertex``."""
    return {u: label for label, u in code.graph.incident[vertex].items()}


def mbr_repair(code: MbrCode, failed: int, fetch: Callable[[int, int], NodeStore]) -> VertexStore:
    """Rebuild a vertex by copying the shared-edge coordinate from each neighbour."""
    helpers = mbr_helpers(code, failed)
    coords = {}
    for u, label in helpers.items():
        try:
            coords[label] = fetch(u, label)
        except HelperUnavailable as exc:
            raise HelperUnavailable(exc.node, sorted(helpers)) from None
        except LookupError:
            raise HelperUnavailable(u, sorted(helpers)) from None
    return VertexStore(failed, dict(sorted(coords.items())))


def covered_coordinates(code: MbrCode, s_bar: Sequence[int]) -> list[int]:
    return sorted({j for w in s_bar for j in code.graph.labels(w)})


def mbr_reconstruct(code: MbrCode, s_bar: Sequence[int], contents: Mapping[int, VertexStore]) -> np.ndarray:
    """Rebuild the file from the contents of the vertices in ``s_bar``."""
    s_bar = sorted(set(s_bar))
    if code.k_bar is not None and len(s_bar) != code.k_bar:
        raise InsufficientCoverage(f"expected {code.k_bar} vertices, got {len(s_bar)}")
    pool: dict[int, NodeStore] = {}
    for w in s_bar:
        pool.update(contents[w].coords)
    covered = sorted(pool)
    k = code.base.k
    if len(covered) < k:
        raise InsufficientCoverage(f"vertices {s_bar} cover only {len(covered)} < {k} coordinates")
    combos = itertools.combinations(covered, k)
    while True:
        block = list(itertools.islice(combos, 1024))
        if not block:
            break
        dets = analysis.subset_dets(code.base, block)
        good = np.flatnonzero(dets)
        if good.size:
            chosen = block[int(good[0])]
            return reconstruct(code.base, chosen, {j: pool[j] for j in chosen})
    raise SingularSubset(tuple(covered))

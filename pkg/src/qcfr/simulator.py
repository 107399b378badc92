"""Deterministic failure-injection harness over an in-memory storage cluster.

A cluster holds one file under a scheme (MSR code, MBR code, or plain
replication) and replays a scenario of node failures, repairs and integrity
checks.  Every transfer is booked in base-field symbols, so measured repair
bandwidth can be compared exactly with the theoretical value.

Scenario scripts are line oriented::

    # comment
    FAIL 3        take node 3 down (its contents are lost)
    REPAIR 3      regenerate node 3 from its fixed helper set
    RECOVER 3     rebuild node 3 by decoding from k live nodes
    CHECK         decode the file from a random k-subset of live nodes
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import gf
from .errors import HelperUnavailable, QcfrError, RepairImpossible, SchemeViolation
from .mbr import MbrCode, VertexFetcher, mbr_encode, mbr_reconstruct, mbr_repair
from .qcfmsr import CodeParams, NodeFetcher, NodeStore, encode, reconstruct, regenerate, to_stripes

EVENTS = ("FAIL", "REPAIR", "RECOVER", "CHECK")


@dataclass(frozen=True)
class Replication:
    factor: int

    def __post_init__(self):
        if self.factor < 2:
            raise ValueError("replication needs at least two copies")


@dataclass(frozen=True)
class Event:
    op: str
    node: int | None = None

    def __str__(self):
        return self.op if self.node is None else f"{self.op} {self.node}"


@dataclass(frozen=True)
class Scenario:
    seed: int
    events: tuple[Event, ...]

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> Scenario:
        events = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            op = parts[0].upper()
            if op not in EVENTS:
                raise ValueError(f"line {lineno}: unknown event {parts[0]!r}")
            if op == "CHECK":
                if len(parts) != 1:
                    raise ValueError(f"line {lineno}: CHECK takes no argument")
                events.append(Event(op))
            else:
                if len(parts) != 2:
                    raise ValueError(f"line {lineno}: {op} needs a node index")
                events.append(Event(op, int(parts[1])))
        return cls(seed, tuple(events))

    def to_text(self) -> str:
        return "".join(f"{e}\n" for e in self.events)

    @classmethod
    def rounds(cls, n_nodes: int, count: int, seed: int = 0, check_every: int = 10) -> Scenario:
        """``count`` fail-then-repair rounds on random nodes, ending with a CHECK."""
        rng = np.random.default_rng(seed)
        events = []
        for t in range(count):
            node = int(rng.integers(1, n_nodes + 1))
            events += [Event("FAIL", node), Event("REPAIR", node)]
            if check_every and (t + 1) % check_every == 0:
                events.append(Event("CHECK"))
        events.append(Event("CHECK"))
        return cls(seed, tuple(events))


@dataclass(frozen=True)
class LedgerEntry:
    event: str
    node: int | None
    transfers: int  # coordinates (or whole copies) moved
    symbols: int  # base-field symbols moved
    field_ops: int
    ok: bool = True


@dataclass
class SimReport:
    scheme: str
    file_symbols: int  # M, in base-field symbols (after stripe padding)
    symbol_bits: int | None
    ledger: list[LedgerEntry] = field(default_factory=list)

    @property
    def repairs(self) -> list[LedgerEntry]:
        return [e for e in self.ledger if e.event == "REPAIR"]

    @property
    def checks(self) -> list[bool]:
        return [e.ok for e in self.ledger if e.event == "CHECK"]

    @property
    def intact(self) -> bool:
        return all(self.checks)

    @property
    def total_symbols(self) -> int:
        return sum(e.symbols for e in self.ledger)

    @property
    def total_bytes(self) -> int | None:
        if self.symbol_bits is None:
            return None
        return self.total_symbols * self.symbol_bits // 8

    def repair_gammas(self) -> list[Fraction]:
        return [Fraction(e.symbols, self.file_symbols) for e in self.repairs]

    def to_text(self) -> str:
        lines = [f"scheme\t{self.scheme}", f"file_symbols\t{self.file_symbols}"]
        lines.append("event\tnode\ttransfers\tsymbols\tfield_ops\tok")
        for e in self.ledger:
            node = "-" if e.node is None else e.node
            lines.append(f"{e.event}\t{node}\t{e.transfers}\t{e.symbols}\t{e.field_ops}\t{int(e.ok)}")
        lines.append(f"total_symbols\t{self.total_symbols}")
        if self.total_bytes is not None:
            lines.append(f"total_bytes\t{self.total_bytes}")
        lines.append(f"intact\t{'yes' if self.intact else 'no'}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "schema": "qcfr.sim-report/1",
            "scheme": self.scheme,
            "file_symbols": self.file_symbols,
            "ledger": [e.__dict__ for e in self.ledger],
            "total_symbols": self.total_symbols,
            "total_bytes": self.total_bytes,
            "intact": self.intact,
        }


class Cluster:
    """One file stored under ``scheme``; node contents live in ``self.nodes``."""

    def __init__(self, scheme, file_symbols):
        self.scheme = scheme
        data = np.asarray(file_symbols, dtype=np.uint8).reshape(-1)
        if isinstance(scheme, CodeParams):
            self.stripes = to_stripes(data, scheme.n)
            self.nodes = dict(encode(scheme, self.stripes).nodes)
            self.n_nodes = scheme.n
            self.bits = scheme.field.bits
        elif isinstance(scheme, MbrCode):
            self.stripes = to_stripes(data, scheme.base.n)
            self.nodes = mbr_encode(scheme, self.stripes)
            self.n_nodes = scheme.n_bar
            self.bits = scheme.base.field.bits
        elif isinstance(scheme, Replication):
            self.stripes = data.reshape(1, -1)
            self.nodes = {i: self.stripes.copy() for i in range(1, scheme.factor + 1)}
            self.n_nodes = scheme.factor
            self.bits = 8
        else:
            raise TypeError(f"unsupported scheme {scheme!r}")
        self.original = {i: self.nodes[i] for i in self.nodes}
        self.failed: set[int] = set()

    @property
    def file_symbols(self) -> int:
        return int(self.stripes.size)

    @property
    def name(self) -> str:
        s = self.scheme
        if isinstance(s, CodeParams):
            return f"MSR [{s.n},{s.k},{s.k + 1}]"
        if isinstance(s, MbrCode):
            kb = "?" if s.k_bar is None else s.k_bar
            return f"MBR [{s.n_bar},{kb},{s.r_bar}]"
        return f"replication x{s.factor}"

    @property
    def live(self) -> dict:
        return {i: c for i, c in self.nodes.items() if i not in self.failed}

    @property
    def k_read(self) -> int:
        """How many live nodes a reader contacts."""
        s = self.scheme
        if isinstance(s, CodeParams):
            return s.k
        if isinstance(s, MbrCode):
            if s.k_bar is not None:
                return s.k_bar
            return self.n_nodes
        return 1

    def _check_node(self, node: int) -> None:
        if node not in self.nodes:
            raise ValueError(f"no node {node} in a {self.n_nodes}-node cluster")

    def fail(self, node: int) -> LedgerEntry:
        self._check_node(node)
        self.failed.add(node)
        return LedgerEntry("FAIL", node, 0, 0, 0)

    def repair(self, node: int) -> LedgerEntry:
        """Regeneration path: one failure at a time, fixed helpers only."""
        self._check_node(node)
        if node not in self.failed:
            raise SchemeViolation(f"node {node} is not failed")
        s = self.scheme
        with gf.count_ops() as ops:
            try:
                if isinstance(s, CodeParams):
                    fetch = NodeFetcher(self.live)
                    if len(self.failed) > 1:
                        self._raise_concurrent(node)
                    restored = regenerate(s, node, fetch)
                elif isinstance(s, MbrCode):
                    fetch = VertexFetcher(self.live)
                    if len(self.failed) > 1:
                        self._raise_concurrent(node)
                    restored = mbr_repair(s, node, fetch)
                else:
                    source = min(self.live)
                    restored = self.nodes[source].copy()
                    fetch = _CopyCount(1, restored.size)
            except HelperUnavailable as exc:
                raise RepairImpossible(f"repair of node {node}: {exc}") from None
        self.nodes[node] = restored
        self.failed.discard(node)
        return LedgerEntry("REPAIR", node, fetch.transfers, fetch.symbols, ops.ops)

    def _raise_concurrent(self, node: int) -> None:
        others = sorted(self.failed - {node})
        helpers = self._helpers(node)
        dead = [h for h in helpers if h in self.failed]
        if dead:
            raise RepairImpossible(f"repair of node {node}: helper(s) {dead} are down")
        raise SchemeViolation(f"node {node} repaired while {others} are also down")

    def _helpers(self, node: int) -> list[int]:
        s = self.scheme
        if isinstance(s, CodeParams):
            from .qcfmsr import repair_helpers

            ahead, behind = repair_helpers(s, node)
            return list(ahead) + [behind]
        if isinstance(s, MbrCode):
            return [u for u in s.graph.incident[node].values()]
        return []

    def _decode(self, chosen: list[int]) -> np.ndarray:
        s = self.scheme
        live = self.live
        if isinstance(s, CodeParams):
            return reconstruct(s, chosen, {i: live[i] for i in chosen})
        if isinstance(s, MbrCode):
            return mbr_reconstruct(s, chosen, {i: live[i] for i in chosen})
        return live[chosen[0]]

    def recover(self, node: int) -> LedgerEntry:
        """Rebuild a node by decoding the file from the lowest-numbered live readers."""
        self._check_node(node)
        if node not in self.failed:
            raise SchemeViolation(f"node {node} is not failed")
        chosen = sorted(self.live)[: self.k_read]
        if len(chosen) < self.k_read:
            raise RepairImpossible(f"only {len(self.live)} live nodes, need {self.k_read}")
        with gf.count_ops() as ops:
            data = self._decode(chosen)
            rebuilt = Cluster(self.scheme, data).nodes[node]
        symbols = sum(_stored_symbols(self.nodes[i]) for i in chosen)
        self.nodes[node] = rebuilt
        self.failed.discard(node)
        return LedgerEntry("RECOVER", node, len(chosen), symbols, ops.ops)

    def check(self, rng: np.random.Generator) -> LedgerEntry:
        live = sorted(self.live)
        if len(live) < self.k_read:
            return LedgerEntry("CHECK", None, 0, 0, 0, ok=False)
        chosen = sorted(int(x) for x in rng.choice(live, self.k_read, replace=False))
        with gf.count_ops() as ops:
            try:
                data = self._decode(chosen)
                ok = np.array_equal(np.asarray(data).reshape(-1), self.stripes.reshape(-1))
            except QcfrError:
                ok = False
        symbols = sum(_stored_symbols(self.nodes[i]) for i in chosen)
        return LedgerEntry("CHECK", None, len(chosen), symbols, ops.ops, ok)


class _CopyCount:
    def __init__(self, transfers, symbols):
        self.transfers = transfers
        self.symbols = symbols


def _stored_symbols(store) -> int:
    if isinstance(store, NodeStore):
        return 2 * int(np.size(store.v))
    if hasattr(store, "coords"):
        return sum(_stored_symbols(c) for c in store.coords.values())
    return int(np.size(store))


def run(cluster: Cluster, scenario: Scenario) -> SimReport:
    """Replay ``scenario`` against ``cluster`` and return the booked ledger."""
    rng = np.random.default_rng(scenario.seed)
    report = SimReport(cluster.name, cluster.file_symbols, cluster.bits)
    for ev in scenario.events:
        if ev.op == "FAIL":
            entry = cluster.fail(ev.node)
        elif ev.op == "REPAIR":
            entry = cluster.repair(ev.node)
        elif ev.op == "RECOVER":
            entry = cluster.recover(ev.node)
        else:
            entry = cluster.check(rng)
        report.ledger.append(entry)
    return report


# ---------------------------------------------------------------------------
# Scheme comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SchemeRow:
    scheme: str
    alpha: Fraction  # measured, in units of M
    gamma: Fraction  # measured, in units of M
    fault_tolerance: int
    alpha_theory: Fraction
    gamma_theory: Fraction
    intact: bool

    @property
    def agrees(self) -> bool:
        return self.alpha == self.alpha_theory and self.gamma == self.gamma_theory


def theory(scheme) -> tuple[Fraction, Fraction, int]:
    """(alpha/M, gamma/M, tolerated failures) from the closed forms."""
    if isinstance(scheme, CodeParams):
        return Fraction(1, scheme.k), Fraction(scheme.k + 1, 2 * scheme.k), scheme.n - scheme.k
    if isinstance(scheme, MbrCode):
        a = Fraction(scheme.r_bar, scheme.base.k)
        tol = scheme.n_bar - scheme.k_bar if scheme.k_bar is not None else 0
        return a, a, tol
    return Fraction(1), Fraction(1), scheme.factor - 1


def compare_schemes(M: int, configs, seed: int = 0) -> list[SchemeRow]:
    """Measure storage and repair bandwidth of each scheme by simulation.

    Each scheme stores a random file of ``M`` symbols; every node is failed
    and repaired once, then the file is read back.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for scheme in configs:
        q = scheme.q if isinstance(scheme, CodeParams) else scheme.base.q if isinstance(scheme, MbrCode) else 256
        data = rng.integers(0, q, size=M, dtype=np.int64).astype(np.uint8)
        cluster = Cluster(scheme, data)
        events = []
        for node in sorted(cluster.nodes):
            events += [Event("FAIL", node), Event("REPAIR", node)]
        events.append(Event("CHECK"))
        report = run(cluster, Scenario(seed, tuple(events)))
        m = report.file_symbols
        stored = max(_stored_symbols(c) for c in cluster.nodes.values())
        gammas = {e.symbols for e in report.repairs}
        if len(gammas) != 1:
            raise RuntimeError(f"uneven repair bandwidth {sorted(gammas)} for {cluster.name}")
        a_th, g_th, tol = theory(scheme)
        rows.append(
            SchemeRow(cluster.name, Fraction(stored, m), Fraction(gammas.pop(), m), tol, a_th, g_th, report.intact)
        )
    return rows


def table_text(rows: list[SchemeRow]) -> str:
    out = ["scheme\talpha\tgamma\tfault_tolerance\talpha_theory\tgamma_theory\tagrees\tintact"]
    for r in rows:
        out.append(
            f"{r.scheme}\t{r.alpha}\t{r.gamma}\t{r.fault_tolerance}\t{r.alpha_theory}\t"
            f"{r.gamma_theory}\t{int(r.agrees)}\t{int(r.intact)}"
        )
    return "\n".join(out)


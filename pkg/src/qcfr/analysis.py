"""MDS verification, coefficient search and the matching-based existence checks.

A code is MDS (any k nodes rebuild the file) exactly when every square
submatrix F^s, s a k-subset of nodes, is nonsingular.  Subsets are always
enumerated in lexicographic order so reports are stable.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import gf
from .errors import InvalidParams, NotFound, TooLarge
from .qcfmsr import CodeParams, build_generator, wrap

SUBSET_GUARD = 10**7
_CHUNK = 4096
REPORT_SCHEMA = "qcfr.mds-report/1"


@dataclass
class MdsReport:
    params: CodeParams
    total_subsets: int
    singular_subsets: list[tuple[int, ...]] = field(default_factory=list)

    @property
    def is_mds(self) -> bool:
        return not self.singular_subsets

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "n": self.params.n,
            "k": self.params.k,
            "q": self.params.q,
            "zeta": list(self.params.zeta),
            "is_mds": self.is_mds,
            "total_subsets": self.total_subsets,
            "singular_count": len(self.singular_subsets),
            "singular_subsets": [list(s) for s in self.singular_subsets],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        p = self.params
        lines = [
            f"code\t[{p.n},{p.k},{p.k + 1}]",
            f"field\t{p.q}",
            f"zeta\t{','.join(map(str, p.zeta))}",
            f"subsets\t{self.total_subsets}",
            f"singular\t{len(self.singular_subsets)}",
            f"mds\t{'yes' if self.is_mds else 'no'}",
        ]
        lines += ["fail\t" + ",".join(map(str, s)) for s in self.singular_subsets]
        return "\n".join(lines)


@dataclass(frozen=True)
class SearchConfig:
    mode: str = "exhaustive"
    trials: int = 1
    seed: int = 0
    screen: int | None = None  # check this many random subsets instead of all of them

    def __post_init__(self):
        if self.mode not in ("exhaustive", "random"):
            raise InvalidParams(f"unknown search mode {self.mode!r}")
        if self.mode == "random" and self.trials < 1:
            raise InvalidParams("random search needs at least one trial")
        if self.screen is not None and self.screen < 1:
            raise InvalidParams("screen size must be positive")


def _guard(n: int, k: int) -> int:
    total = math.comb(n, k)
    if total > SUBSET_GUARD:
        raise TooLarge(f"C({n},{k}) = {total} subsets exceeds the guard of {SUBSET_GUARD}")
    return total


def _subset_chunks(n: int, k: int, chunk: int = _CHUNK):
    """Yield (B, k) arrays of 0-based k-subsets of range(n), lexicographically."""
    it = itertools.combinations(range(n), k)
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        yield np.array(block, dtype=np.intp)


def _subset_stack(generator: np.ndarray, subsets: np.ndarray) -> np.ndarray:
    """Stack of F^s for a (B, k) array of 0-based subsets."""
    n = generator.shape[0]
    cols = np.concatenate([subsets, subsets + n], axis=1)
    return np.transpose(generator[:, cols], (1, 0, 2))


def subset_dets(p: CodeParams, subsets) -> np.ndarray:
    """det(F^s) for each 1-based subset in ``subsets``."""
    subsets = np.asarray(subsets, dtype=np.intp) - 1
    return gf.batch_det(p.field, _subset_stack(build_generator(p), subsets))


def verify_mds(p: CodeParams) -> MdsReport:
    total = _guard(p.n, p.k)
    generator = build_generator(p)
    report = MdsReport(p, total)
    for block in _subset_chunks(p.n, p.k):
        dets = gf.batch_det(p.field, _subset_stack(generator, block))
        for row in block[dets == 0]:
            report.singular_subsets.append(tuple(int(i) + 1 for i in row))
    return report


def det_product(p: CodeParams) -> int:
    """Product of det(F^s) over all k-subsets s; nonzero iff the code is MDS."""
    _guard(p.n, p.k)
    field = p.field
    generator = build_generator(p)
    acc = 1
    for block in _subset_chunks(p.n, p.k):
        for d in gf.batch_det(field, _subset_stack(generator, block)):
            acc = int(field.mul_table[acc, d])
    return acc


def _is_mds_fast(field, generator: np.ndarray, blocks: list[np.ndarray]) -> bool:
    for block in blocks:
        if not gf.batch_det(field, _subset_stack(generator, block)).all():
            return False
    return True


def search_coefficients(k: int, q: int, cfg: SearchConfig = SearchConfig()) -> CodeParams:
    """Find coefficients making the [2k, k] code MDS over F_q.

    Exhaustive mode walks (F_q \\ {0})^k lexicographically and returns the
    first hit; running out proves nonexistence.  Random mode draws
    ``cfg.trials`` vectors from a seeded generator; a miss is inconclusive.
    With ``cfg.screen`` set, candidates are only checked on that many
    seeded random subsets, so a hit is likely but not proven MDS.
    """
    field = gf.field_new(q)
    n = 2 * k
    if cfg.screen is None:
        _guard(n, k)
        subsets = np.array(list(itertools.combinations(range(n), k)), dtype=np.intp)
    else:
        if k < 1 or q < 2:
            raise InvalidParams(f"bad search parameters k={k}, q={q}")
        srng = np.random.default_rng([cfg.seed, 1])
        subsets = np.array([np.sort(srng.choice(n, k, replace=False)) for _ in range(cfg.screen)], dtype=np.intp)
    # small first block so bad candidates are rejected cheaply
    blocks = [subsets[:64]] + [subsets[i : i + _CHUNK] for i in range(64, len(subsets), _CHUNK)]

    if cfg.mode == "exhaustive":
        candidates = itertools.product(range(1, q), repeat=k)
    else:
        rng = np.random.default_rng(cfg.seed)
        candidates = (tuple(int(x) for x in rng.integers(1, q, size=k)) for _ in range(cfg.trials))

    for zeta in candidates:
        p = CodeParams(k, q, zeta)
        if _is_mds_fast(field, build_generator(p), blocks):
            return p
    if cfg.mode == "exhaustive" and cfg.screen is None:
        raise NotFound(f"no MDS [{n},{k},{k + 1}] code exists over F_{q}", conclusive=True)
    raise NotFound(
        f"no MDS coefficients among the candidates tried over F_{q} (inconclusive)",
        conclusive=False,
    )


def random_success_rate(k: int, q: int, trials: int, seed: int = 0) -> tuple[int, int]:
    """Count how many of ``trials`` random coefficient draws give an MDS code."""
    field = gf.field_new(q)
    n = 2 * k
    _guard(n, k)
    subsets = np.array(list(itertools.combinations(range(n), k)), dtype=np.intp)
    blocks = [subsets[i : i + _CHUNK] for i in range(0, len(subsets), _CHUNK)]
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(trials):
        p = CodeParams(k, q, rng.integers(1, q, size=k))
        hits += _is_mds_fast(field, build_generator(p), blocks)
    return hits, trials


def sz_bound(k: int, q: int) -> Fraction:
    """Schwartz-Zippel lower bound on the chance that random coefficients work.

    The product of all subset determinants has degree at most k * C(2k, k).
    """
    return max(Fraction(0), 1 - Fraction(k * math.comb(2 * k, k), q))


# ---------------------------------------------------------------------------
# Matching view of F^s
# ---------------------------------------------------------------------------


def generator_pattern(n: int, k: int) -> np.ndarray:
    """Boolean nonzero pattern of F = (I | Z) for any nonzero coefficients."""
    if n != 2 * k:
        raise InvalidParams(f"n must equal 2k, got n={n}, k={k}")
    pat = np.zeros((n, 2 * n), dtype=bool)
    pat[:, :n] = np.eye(n, dtype=bool)
    for i in range(1, n + 1):
        for l in range(1, k + 1):
            pat[wrap(i + l, n) - 1, n + i - 1] = True
    return pat


def has_perfect_matching(adj: np.ndarray) -> bool:
    """Kuhn's augmenting-path algorithm on a square biadjacency matrix."""
    rows, cols = adj.shape
    if rows != cols:
        return False
    match_col = [-1] * cols
    neighbours = [np.flatnonzero(adj[r]).tolist() for r in range(rows)]

    def augment(r, seen):
        for c in neighbours[r]:
            if seen[c]:
                continue
            seen[c] = True
            if match_col[c] < 0 or augment(match_col[c], seen):
                match_col[c] = r
                return True
        return False

    return all(augment(r, [False] * cols) for r in range(rows))


def hall_matching_check(n: int, k: int, s, pattern: np.ndarray | None = None) -> bool:
    """Does the bipartite graph of F^s's nonzero pattern have a perfect matching?

    A perfect matching means det(F^s) is not the zero polynomial in the
    coefficients.  ``pattern`` overrides the n x 2n pattern of F.
    """
    s = sorted(s)
    if len(s) != k:
        raise InvalidParams(f"subset must have {k} elements, got {s}")
    pat = generator_pattern(n, k) if pattern is None else np.asarray(pattern, dtype=bool)
    idx = [i - 1 for i in s]
    sub = np.concatenate([pat[:, idx], pat[:, [n + i for i in idx]]], axis=1)
    return has_perfect_matching(sub)

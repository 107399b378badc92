import itertools
import json
import math
from fractions import Fraction

import numpy as np
import pytest
import sympy

from qcfr import gf
from qcfr.analysis import (
    MdsReport,
    SearchConfig,
    det_product,
    generator_pattern,
    hall_matching_check,
    has_perfect_matching,
    random_success_rate,
    search_coefficients,
    subset_dets,
    sz_bound,
    verify_mds,
)
from qcfr.errors import InvalidParams, NotFound, TooLarge
from qcfr.qcfmsr import CodeParams, subset_matrix

Z1, Z2, Z3 = sympy.symbols("z1 z2 z3")


def symbolic_generator(k, zs):
    n = 2 * k
    g = sympy.zeros(n, 2 * n)
    for i in range(n):
        g[i, i] = 1
    for i in range(1, n + 1):
        for l in range(1, k + 1):
            g[(i + l - 1) % n, n + i - 1] = zs[l - 1]
    return g


def symbolic_subset(k, zs, s):
    g = symbolic_generator(k, zs)
    n = 2 * k
    cols = [i - 1 for i in s] + [n + i - 1 for i in s]
    return g.extract(list(range(n)), cols)


@pytest.fixture(scope="module")
def symbolic_dets_k3():
    return {s: sympy.expand(symbolic_subset(3, (Z1, Z2, Z3), s).det())
            for s in itertools.combinations(range(1, 7), 3)}


def test_subset_dets_match_symbolic(symbolic_dets_k3):
    for q, zeta in [(5, (1, 1, 2)), (7, (3, 5, 6)), (101, (17, 4, 99))]:
        p = CodeParams(3, q, zeta)
        subsets = list(symbolic_dets_k3)
        got = subset_dets(p, subsets)
        for s, d in zip(subsets, got):
            want = int(symbolic_dets_k3[s].subs({Z1: zeta[0], Z2: zeta[1], Z3: zeta[2]})) % q
            assert d == want, s


def test_det_product_factorization(symbolic_dets_k3):
    prod = sympy.factor(sympy.Mul(*symbolic_dets_k3.values()))
    closed = Z1**6 * Z2**12 * Z3**24 * (Z1 * Z3 - Z2**2) ** 6 * (Z1**3 + Z3**3) ** 2
    assert sympy.expand(prod - closed) == 0 or sympy.expand(prod + closed) == 0
    # the mirrored form (z1 and z3 exchanged) differs by z3^18 / z1^18
    mirrored = closed.subs({Z1: Z3, Z3: Z1}, simultaneous=True)
    assert sympy.simplify(closed / mirrored) == Z3**18 / Z1**18


def test_f7_has_mds_codes(symbolic_dets_k3):
    # the product is a nonzero residue at (1, 1, 2) mod 7, so every subset is invertible
    prod = sympy.Mul(*symbolic_dets_k3.values())
    assert int(prod.subs({Z1: 1, Z2: 1, Z3: 2})) % 7 == 4
    assert verify_mds(CodeParams(3, 7, (1, 1, 2))).is_mds


def test_f5_golden():
    rep = verify_mds(CodeParams(3, 5, (1, 1, 2)))
    assert rep.total_subsets == 20 and rep.is_mds


def test_f8_golden():
    f = gf.field_new(8)
    assert verify_mds(CodeParams(3, 8, (1, 1, f.parse("z")))).is_mds


def test_all_ones_over_f5_fails():
    rep = verify_mds(CodeParams(3, 5, (1, 1, 1)))
    assert not rep.is_mds
    for s in rep.singular_subsets:
        assert gf.mat_det(gf.field_new(5), subset_matrix(rep.params, s)) == 0


def test_ten_node_golden_over_f7():
    assert verify_mds(CodeParams(5, 7, (1, 5, 2, 1, 1))).is_mds


@pytest.mark.parametrize("k,q", [(2, 3), (2, 4), (3, 3), (3, 4), (3, 5), (2, 8)])
def test_mds_iff_det_product_nonzero(k, q):
    for zeta in itertools.product(range(1, q), repeat=k):
        p = CodeParams(k, q, zeta)
        assert verify_mds(p).is_mds == (det_product(p) != 0)


@pytest.mark.parametrize("q", [2, 3, 4])
def test_exhaustive_nonexistence_small_fields(q):
    with pytest.raises(NotFound) as err:
        search_coefficients(3, q, SearchConfig("exhaustive"))
    assert err.value.conclusive


@pytest.mark.parametrize("q", [5, 7])
def test_exhaustive_returns_lexicographically_first(q):
    p = search_coefficients(3, q, SearchConfig("exhaustive"))
    assert verify_mds(p).is_mds
    for zeta in itertools.product(range(1, q), repeat=3):
        if zeta == p.zeta:
            break
        assert not verify_mds(CodeParams(3, q, zeta)).is_mds
    assert p.zeta == (1, 1, 2)


def test_random_search_deterministic_and_flagged():
    a = search_coefficients(3, 101, SearchConfig("random", 50, seed=4))
    b = search_coefficients(3, 101, SearchConfig("random", 50, seed=4))
    assert a == b and verify_mds(a).is_mds
    with pytest.raises(NotFound) as err:
        search_coefficients(3, 4, SearchConfig("random", 5, seed=1))
    assert not err.value.conclusive


def test_screened_search():
    p = search_coefficients(6, 256, SearchConfig("random", 50, seed=2, screen=200))
    assert p.k == 6
    with pytest.raises(InvalidParams):
        SearchConfig("random", 5, screen=0)


def test_guard():
    with pytest.raises(TooLarge):
        verify_mds(CodeParams(13, 256, tuple(range(1, 14))))


def test_sz_bound_values():
    assert sz_bound(3, 5) == 0
    assert sz_bound(3, 1009) == Fraction(949, 1009)
    assert float(sz_bound(3, 1009)) == pytest.approx(0.9405, abs=1e-4)


def test_random_success_rate_above_bound():
    hits, trials = random_success_rate(3, 101, 1000, seed=9)
    bound = float(sz_bound(3, 101))
    sigma = math.sqrt(bound * (1 - bound) / trials)
    assert hits / trials >= bound - 3 * sigma


def hall_condition_brute(adj):
    """Every set of rows has at least as many neighbouring columns."""
    rows = adj.shape[0]
    for size in range(1, rows + 1):
        for t in itertools.combinations(range(rows), size):
            if adj[list(t)].any(axis=0).sum() < size:
                return False
    return True


def test_matching_agrees_with_hall_condition_k3():
    pat = generator_pattern(6, 3)
    for s in itertools.combinations(range(1, 7), 3):
        cols = [i - 1 for i in s] + [6 + i - 1 for i in s]
        sub = pat[:, cols]
        assert has_perfect_matching(sub) == hall_condition_brute(sub) is True
        assert hall_matching_check(6, 3, s)


@pytest.mark.parametrize("k", [4, 5, 6])
def test_matching_exists_for_sampled_subsets(k, rng):
    n = 2 * k
    for _ in range(50):
        s = sorted(rng.choice(np.arange(1, n + 1), k, replace=False).tolist())
        assert hall_matching_check(n, k, s)


def test_corrupted_pattern_breaks_matching():
    pat = generator_pattern(6, 3)
    pat[:, 6] = False  # zero the first Z column
    results = [hall_matching_check(6, 3, s, pattern=pat) for s in itertools.combinations(range(1, 7), 3)]
    assert not all(results)


def test_report_serialisation():
    rep = verify_mds(CodeParams(3, 5, (1, 1, 1)))
    d = json.loads(rep.to_json())
    assert d["schema"] == "qcfr.mds-report/1"
    assert d["singular_count"] == len(d["singular_subsets"]) > 0
    text = rep.to_text().splitlines()
    assert text[0] == "code\t[6,3,4]" and "mds\tno" in text
    assert isinstance(MdsReport(rep.params, 20).is_mds, bool)


def test_wide_k9_code_is_mds():
    # pinned in the acceptance suite; random draws at this width almost never are
    rep = verify_mds(CodeParams(9, 256, (140, 62, 89, 231, 149, 225, 19, 118, 87)))
    assert rep.total_subsets == 48620 and rep.is_mds

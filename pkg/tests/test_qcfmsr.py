import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcfr import gf
from qcfr.errors import HelperUnavailable, InvalidParams, LengthMismatch, SingularSubset
from qcfr.qcfmsr import (
    CodeParams,
    NodeFetcher,
    build_generator,
    bytes_to_symbols,
    circulant,
    encode,
    reconstruct,
    regenerate,
    repair_helpers,
    subset_matrix,
    symbols_per_byte,
    symbols_to_bytes,
    to_stripes,
)


def rho_by_definition(p, v):
    """rho_i = sum_{l=1..k} zeta_l v_{i+l}, indices cyclic, written out term by term."""
    f = p.field
    n = p.n
    out = []
    for i in range(1, n + 1):
        acc = 0
        for l in range(1, p.k + 1):
            j = (i + l - 1) % n + 1
            acc = int(f.add_table[acc, f.mul_table[p.zeta[l - 1], v[j - 1]]])
        out.append(acc)
    return np.array(out)


def test_params_validation():
    with pytest.raises(InvalidParams):
        CodeParams(3, 5, (1, 0, 2))
    with pytest.raises(InvalidParams):
        CodeParams(3, 5, (1, 1))
    with pytest.raises(InvalidParams):
        CodeParams(1, 5, (1,))
    with pytest.raises(InvalidParams):
        CodeParams(3, 5, (1, 1, 7))
    p = CodeParams(3, 8, (1, 1, 2))
    assert p.n == 6 and p.alpha == pytest.approx(1 / 3)


def test_circulant_k2_by_hand():
    a, b = 3, 4
    z = circulant(CodeParams(2, 5, (a, b)))
    want = np.array([[0, 0, b, a], [a, 0, 0, b], [b, a, 0, 0], [0, b, a, 0]])
    assert np.array_equal(z, want)
    g = build_generator(CodeParams(2, 5, (a, b)))
    assert np.array_equal(g, np.hstack([np.eye(4, dtype=int), want]))


def test_subset_matrix_column_order():
    p = CodeParams(2, 5, (3, 4))
    g = build_generator(p)
    fs = subset_matrix(p, [3, 1])
    assert np.array_equal(fs, g[:, [0, 2, 4, 6]])


@pytest.mark.parametrize("params", [CodeParams(3, 5, (1, 1, 2)), CodeParams(3, 8, (1, 1, 2)),
                                    CodeParams(5, 7, (1, 5, 2, 1, 1)), CodeParams(4, 256, (9, 200, 3, 77))])
def test_encode_matches_definition(params, rng):
    v = rng.integers(0, params.q, size=params.n)
    cw = encode(params, v)
    assert np.array_equal(cw.v, v)
    assert np.array_equal(cw.rho, rho_by_definition(params, v))
    # generator view: codeword = v @ F
    assert np.array_equal(np.concatenate([cw.v, cw.rho]), gf.vec_mat(params.field, v, build_generator(params)))


def test_encode_stripes_independent(rng):
    p = CodeParams(3, 8, (1, 1, 2))
    v = rng.integers(0, 8, size=(7, 6))
    cw = encode(p, v)
    for s in range(7):
        assert np.array_equal(cw.rho[s], rho_by_definition(p, v[s]))


def test_helper_sets():
    p = CodeParams(3, 5, (1, 1, 2))
    assert repair_helpers(p, 1) == ((2, 3, 4), 6)
    assert repair_helpers(p, 5) == ((6, 1, 2), 4)


@pytest.mark.parametrize("params", [CodeParams(3, 5, (1, 1, 2)), CodeParams(3, 8, (1, 1, 2)),
                                    CodeParams(5, 7, (1, 5, 2, 1, 1)), CodeParams(2, 256, (1, 2))])
def test_exact_repair_every_node(params, rng):
    v = rng.integers(0, params.q, size=(11, params.n))
    nodes = encode(params, v).nodes
    for i in range(1, params.n + 1):
        live = {j: s for j, s in nodes.items() if j != i}
        fetch = NodeFetcher(live)
        got = regenerate(params, i, fetch)
        assert got == nodes[i]
        assert fetch.transfers == params.k + 1
        assert fetch.symbols == (params.k + 1) * 11
        ahead, behind = repair_helpers(params, i)
        assert sorted(fetch.log) == sorted([(j, "v") for j in ahead] + [(behind, "rho")])


def test_repair_missing_helper_names_set(f5_code, rng):
    nodes = encode(f5_code, rng.integers(0, 5, size=6)).nodes
    live = {j: s for j, s in nodes.items() if j not in (1, 3)}
    with pytest.raises(HelperUnavailable) as err:
        regenerate(f5_code, 1, NodeFetcher(live))
    assert err.value.node == 3
    assert err.value.needed == (2, 3, 4, 6)


def test_reconstruct_every_subset_f5(f5_code, rng):
    v = rng.integers(0, 5, size=(4, 6))
    nodes = encode(f5_code, v).nodes
    for s in itertools.combinations(range(1, 7), 3):
        assert np.array_equal(reconstruct(f5_code, s, nodes), v)


def test_reconstruct_accepts_pairs_sequence(f8_code, rng):
    v = rng.integers(0, 8, size=6)
    nodes = encode(f8_code, v).nodes
    pairs = [(nodes[i].v, nodes[i].rho) for i in (2, 4, 5)]
    assert np.array_equal(reconstruct(f8_code, [5, 2, 4], pairs), v)


def test_reconstruct_singular_subset_reported():
    p = CodeParams(3, 5, (1, 1, 1))
    nodes = encode(p, np.arange(6) % 5).nodes
    bad = []
    for s in itertools.combinations(range(1, 7), 3):
        try:
            reconstruct(p, s, nodes)
        except SingularSubset as exc:
            bad.append(exc.subset)
    assert bad and all(len(s) == 3 for s in bad)


def test_reconstruct_wrong_count(f5_code):
    with pytest.raises(LengthMismatch):
        reconstruct(f5_code, [1, 2], {})


@pytest.mark.parametrize("q,d", [(2, 8), (3, 6), (5, 4), (7, 3), (8, 3), (16, 2), (251, 2), (256, 1)])
def test_symbols_per_byte(q, d):
    assert symbols_per_byte(q) == d


@settings(max_examples=60, deadline=None)
@given(st.binary(max_size=300), st.sampled_from([2, 3, 5, 7, 8, 16, 251, 256]))
def test_byte_packing_round_trip(data, q):
    sym = bytes_to_symbols(data, q)
    assert sym.size == len(data) * symbols_per_byte(q)
    assert (sym < q).all()
    stripes = to_stripes(sym, 6)
    assert symbols_to_bytes(stripes, q, len(data)) == data


def test_to_stripes_pads_with_zero():
    s = to_stripes(np.array([1, 2, 3, 4, 5]), 4)
    assert s.shape == (2, 4)
    assert s.tolist() == [[1, 2, 3, 4], [5, 0, 0, 0]]
    assert to_stripes(np.array([], dtype=np.uint8), 4).shape == (0, 4)

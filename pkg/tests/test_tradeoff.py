import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcfr.errors import Infeasible, InvalidParams
from qcfr.tradeoff import (
    FlowGraph,
    breakpoints,
    curve_text,
    cut_bound,
    f_of,
    g_of,
    mbr_point,
    mincut_oracle,
    msr_point,
    sample_curve,
    threshold_alpha,
)

F = Fraction


def test_f_and_g_values():
    assert f_of(1, 5, 9, 0) == F(9, 25)
    assert f_of(1, 5, 9, 4) == F(9, 35)
    assert f_of(7, 5, 9, 4) == 7 * F(9, 35)
    for k, r in [(2, 2), (5, 9), (4, 7)]:
        assert g_of(k, r, 0) == 0


def test_threshold_examples():
    assert threshold_alpha(1, 5, 9, F(9, 25)) == F(1, 5)
    assert threshold_alpha(1, 5, 9, F(9, 35)) == F(9, 35)
    assert threshold_alpha(1, 5, 9, 10**6) == F(1, 5)
    with pytest.raises(Infeasible):
        threshold_alpha(1, 5, 9, F(9, 35) - F(1, 10**9))


def test_argument_checks():
    with pytest.raises(InvalidParams):
        f_of(1, 5, 4, 0)
    with pytest.raises(InvalidParams):
        f_of(1, 5, 9, 5)


@pytest.mark.parametrize("k", range(1, 11))
def test_continuity_and_monotonicity(k):
    for r in range(k, 2 * k + 1):
        fs = [f_of(1, k, r, i) for i in range(k)]
        assert all(a > b for a, b in zip(fs, fs[1:]))
        for i in range(1, k):
            # piece i (on [f(i), f(i-1))) meets piece i-1 at f(i-1)
            edge = fs[i - 1]
            inner = (1 - g_of(k, r, i) * edge) / (k - i)
            outer = F(1, k) if i == 1 else (1 - g_of(k, r, i - 1) * edge) / (k - i + 1)
            assert inner == outer
            assert threshold_alpha(1, k, r, edge) == outer
        grid = sorted(set(fs) | {(a + b) / 2 for a, b in zip(fs, fs[1:])} | {fs[0] * 2})
        alphas = [threshold_alpha(1, k, r, g) for g in grid]
        assert all(a >= b for a, b in zip(alphas, alphas[1:]))


@pytest.mark.parametrize("k,r", [(3, 4), (5, 9), (4, 4), (6, 11)])
def test_extreme_points(k, r):
    msr, mbr = msr_point(1, k, r), mbr_point(1, k, r)
    assert msr.alpha == F(1, k)
    assert mbr.alpha == mbr.gamma
    assert threshold_alpha(1, k, r, mbr.gamma) == mbr.alpha


@pytest.mark.parametrize("k", range(2, 9))
def test_msr_bandwidth_at_r_k_plus_1(k):
    assert msr_point(1, k, k + 1).gamma == F(k + 1, 2 * k)


def test_mbr_point_values():
    assert mbr_point(1, 2, 2).alpha == F(2, 3)
    assert mbr_point(1, 3, 4).alpha == F(4, 9)
    assert mbr_point(1, 5, 6).alpha == F(3, 10)
    assert mbr_point(1, 4, 2 + 2).alpha == F(2, 5)


def test_breakpoints_and_text():
    bp = breakpoints(1, 5, 9)
    assert [(p.gamma, p.alpha) for p in (bp[0], bp[-1])] == [(F(9, 25), F(1, 5)), (F(9, 35), F(9, 35))]
    lines = curve_text(1, 5, 9).splitlines()
    assert lines[0] == "i\tgamma\talpha" and lines[-1] == "4\t9/35\t9/35"
    pts = sample_curve(5, 9, num=50)
    assert len(pts) == 50 and pts[0][0] == pytest.approx(9 / 35)


def test_fresh_graph_mincut_is_k_alpha():
    for k, r in [(2, 3), (3, 4)]:
        assert mincut_oracle(k, r, F(1, 3), F(1, 10)) == k * F(1, 3)


def test_zero_beta_limits_to_survivors():
    # after one repair with beta = 0 the newcomer contributes nothing,
    # so a collector holding it sees only the other original node
    cut = mincut_oracle(2, 3, F(1, 2), 0, [(1, [2, 3, 4])])
    assert cut == F(1, 2)


def test_flow_graph_rejects_bad_helpers():
    g = FlowGraph.initial(4, 1, 1)
    with pytest.raises(InvalidParams):
        g.repair(1, [1, 2, 3])
    with pytest.raises(InvalidParams):
        g.repair(9, [2, 3, 4])


FIG_HISTORY = [(1, [2, 3, 4]), (2, [3, 4, 5])]


@pytest.mark.parametrize("which", ["msr", "mbr"])
def test_fig1_topology_on_curve(which):
    k, r = 2, 3
    pt = msr_point(1, k, r) if which == "msr" else mbr_point(1, k, r)
    beta = pt.gamma / r
    assert mincut_oracle(k, r, pt.alpha, beta, FIG_HISTORY) == 1
    assert cut_bound(k, r, pt.alpha, beta) == 1
    assert mincut_oracle(k, r, pt.alpha - F(1, 100), beta, FIG_HISTORY) < 1


def single_failure_histories(n, r, length):
    """All repair sequences where each failed node is replaced before the next failure."""
    def rec(live, nxt, depth):
        if depth == 0:
            yield []
            return
        for failed in live:
            rest = [x for x in live if x != failed]
            for helpers in itertools.combinations(rest, r):
                for tail in rec(rest + [nxt], nxt + 1, depth - 1):
                    yield [(failed, list(helpers))] + tail
    yield from rec(list(range(1, n + 1)), n + 1, length)


def chained_history(k, r):
    """k repairs where every newcomer helps all later ones; collecting the k
    newcomers meets the cut bound with equality."""
    live = list(range(1, r + 2))
    nxt = r + 2
    newcomers, hist = [], []
    for _ in range(k):
        failed = next(x for x in live if x not in newcomers)
        others = [x for x in live if x != failed and x not in newcomers]
        helpers = newcomers + others[: r - len(newcomers)]
        hist.append((failed, helpers))
        live = [x for x in live if x != failed] + [nxt]
        newcomers.append(nxt)
        nxt += 1
    return hist


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 3).flatmap(lambda k: st.tuples(st.just(k), st.integers(k, k + 2))),
       st.integers(0, 2), st.data())
def test_curve_points_meet_the_file_size(kr, length, data):
    k, r = kr
    i = data.draw(st.integers(0, k - 1))
    gamma = f_of(1, k, r, i)
    alpha = threshold_alpha(1, k, r, gamma)
    beta = gamma / r
    history = data.draw(st.sampled_from(list(single_failure_histories(r + 1, r, length))))
    assert mincut_oracle(k, r, alpha, beta, history) >= 1
    eps = data.draw(st.fractions(min_value=F(1, 1000), max_value=alpha / 2))
    assert mincut_oracle(k, r, alpha - eps, beta, chained_history(k, r)) < 1

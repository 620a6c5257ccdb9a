import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cohortflow.linker import (
    Candidates,
    LinkerConfig,
    Weights,
    default_lambda_grid,
    gen_candidates,
    link_cost,
    pareto_select,
    penalty_components,
    solve_assignment,
    track_sequence,
)
from cohortflow.linker.pareto import is_monotone, utopia_index
from cohortflow.sim import preset_scenario, simulate


# -- candidates ---------------------------------------------------------------


def test_gate_examples():
    assert len(gen_candidates([[0, 0]], [[3, 4]], 12.4)) == 1
    assert len(gen_candidates([[0, 0]], [[12, 16]], 12.4)) == 0
    assert len(gen_candidates(np.zeros((0, 2)), [[1, 1]], 12.4)) == 0


pts = st.lists(st.tuples(st.floats(0, 60), st.floats(0, 60)), max_size=25)


@given(pts, pts, st.floats(0.5, 20))
def test_candidates_match_brute_force(a, b, r):
    p0, p1 = np.array(a).reshape(-1, 2), np.array(b).reshape(-1, 2)
    c = gen_candidates(p0, p1, r)
    expected = sorted((i, j) for i in range(len(p0)) for j in range(len(p1))
                      if math.dist(p0[i], p1[j]) <= r)
    assert list(zip(c.src.tolist(), c.dst.tolist())) == expected
    if len(c):
        assert np.allclose(c.disp, p1[c.dst] - p0[c.src])
        assert np.all(np.hypot(*c.disp.T) <= r + 1e-9)


# -- costs --------------------------------------------------------------------


def test_cost_examples():
    cb = link_cost((3.0, 0.0), (3.0, 0.0), [0.0])
    assert (cb.c_eq, cb.c_turn, cb.c_cohort, cb.total) == (0.0, 0.0, 0.0, 0.0)
    assert link_cost((2.0, 0.0), (-2.0, 0.0)).c_turn == pytest.approx(1.0)
    # 1 - 2 sqrt(15) / 8
    assert link_cost((3.0, 0.0), (0.0, 5.0)).c_eq == pytest.approx(0.031754, abs=5e-7)
    first = link_cost(None, (1.0, 1.0), [math.pi])
    assert first.c_eq == 0.0 and first.c_turn == 0.0 and first.c_cohort > 0


def test_total_is_variance_normalized():
    w = Weights(0.5, 0.3, 0.2, 2.0, 0.5, 4.0)
    cb = link_cost((3.0, 0.0), (4.0, 1.0), [0.5], w)
    expected = 0.5 * cb.c_eq / 2.0 + 0.3 * cb.c_turn / 0.5 + 0.2 * cb.c_cohort / 4.0
    assert cb.total == pytest.approx(expected)


def test_stationary_has_no_turn():
    cb = link_cost((0.1, 0.0), (-0.1, 0.0), [1.0])
    assert cb.c_turn == 0.0 and cb.c_cohort == 0.0


vec = st.tuples(st.floats(0.3, 12), st.floats(-math.pi, math.pi))


@given(vec, vec, st.floats(-math.pi, math.pi), st.floats(-4, 4))
def test_cost_rotation_invariance(p, l, mu, delta):
    def disp(v, rot=0.0):
        return (v[0] * math.cos(v[1] + rot), v[0] * math.sin(v[1] + rot))

    a = link_cost(disp(p), disp(l), [mu])
    b = link_cost(disp(p, delta), disp(l, delta), [mu + delta])
    assert b.c_turn == pytest.approx(a.c_turn, abs=1e-9)
    assert b.c_cohort == pytest.approx(a.c_cohort, abs=1e-9)
    for c in (a.c_eq, a.c_turn, a.c_cohort):
        assert 0.0 <= c <= 1.0


@given(st.floats(0.3, 12), st.floats(0.3, 12))
def test_ceq_zero_iff_equal(d1, d2):
    c = penalty_components([[d1, 0.0]], [[0.0, d2]])[0, 0]
    if d1 == d2:
        assert c == 0.0
    else:
        assert c > 0.0


def test_weight_update_is_precision_weighting():
    comps = np.random.default_rng(0).random((50, 3)) * [0.1, 0.5, 1.0]
    w = Weights().updated(comps)
    var = comps.var(axis=0)
    prec = 1 / (var + 1e-9)
    assert np.allclose(w.w, prec / prec.sum())
    assert w.w.sum() == pytest.approx(1.0)
    # inactive components keep their variance
    w2 = Weights().updated(comps, (True, False, True))
    assert w2.var_turn == 1.0


# -- assignment ---------------------------------------------------------------


def brute_force(pairs, costs, lam):
    """Best objective over every one-to-one subset of candidate links."""
    best = 0.0
    idx = range(len(pairs))
    for r in range(1, len(pairs) + 1):
        for sub in itertools.combinations(idx, r):
            s = [pairs[i][0] for i in sub]
            d = [pairs[i][1] for i in sub]
            if len(set(s)) == r and len(set(d)) == r:
                best = max(best, sum(lam - costs[i] for i in sub))
    return best


@st.composite
def instances(draw):
    n0, n1 = draw(st.integers(1, 4)), draw(st.integers(1, 4))
    all_pairs = [(i, j) for i in range(n0) for j in range(n1)]
    mask = draw(st.lists(st.booleans(), min_size=len(all_pairs), max_size=len(all_pairs)))
    pairs = [p for p, m in zip(all_pairs, mask) if m]
    costs = draw(st.lists(st.floats(0, 1), min_size=len(pairs), max_size=len(pairs)))
    lam = draw(st.floats(0, 1.2))
    return n0, n1, pairs, costs, lam


@given(instances())
def test_assignment_matches_enumeration(inst):
    n0, n1, pairs, costs, lam = inst
    cands = Candidates.from_pairs(pairs, n_from=n0, n_to=n1) if pairs else Candidates.from_pairs(
        np.zeros((0, 2)), n_from=n0, n_to=n1)
    c = np.asarray(costs, dtype=float)
    # from_pairs sorts; align costs with the sorted order
    order = np.lexsort((np.array([p[1] for p in pairs]), np.array([p[0] for p in pairs]))) if pairs else []
    sol = solve_assignment(cands, c[order] if pairs else c, lam)
    assert sol.objective == pytest.approx(brute_force(pairs, costs, lam), abs=1e-12)
    assert len(set(sol.src.tolist())) == sol.n_links
    assert len(set(sol.dst.tolist())) == sol.n_links


def test_assignment_trivial_cases():
    empty = Candidates.from_pairs(np.zeros((0, 2)), n_from=0, n_to=0)
    sol = solve_assignment(empty, np.zeros(0), 1.0)
    assert sol.n_links == 0 and sol.total_cost == 0.0
    cands = Candidates.from_pairs([(0, 0), (1, 1)])
    assert solve_assignment(cands, np.array([0.5, 0.7]), 0.4).n_links == 0


def test_assignment_ties_prefer_lowest_pair():
    cands = Candidates.from_pairs([(0, 0), (0, 1), (1, 0), (1, 1)])
    sol = solve_assignment(cands, np.zeros(4), 1.0)
    assert sorted(sol.pairs()) == [(0, 0), (1, 1)]
    star = Candidates.from_pairs([(0, 0), (0, 1), (0, 2)])
    assert solve_assignment(star, np.array([0.2, 0.1, 0.1]), 1.0).pairs() == {(0, 1)}


def test_assignment_large_random_block():
    # many overlapping components exercise the batched dense path
    rng = np.random.default_rng(5)
    p0 = rng.uniform(0, 300, (400, 2))
    p1 = p0 + rng.normal(0, 3, p0.shape)
    cands = gen_candidates(p0, p1, 12.0)
    costs = rng.random(len(cands))
    sol = solve_assignment(cands, costs, 0.8)
    from scipy.optimize import linear_sum_assignment
    # independent dense oracle: square matrix with opt-out columns
    n0, n1 = cands.n_from, cands.n_to
    big = 1e6
    m = np.full((n0, n1 + n0), big)
    m[cands.src, cands.dst] = np.where(costs <= 0.8, costs - 0.8, big)
    m[np.arange(n0), n1 + np.arange(n0)] = 0.0
    r, c = linear_sum_assignment(m)
    assert -sol.objective == pytest.approx(m[r, c].sum(), abs=1e-9)


# -- pareto -------------------------------------------------------------------


def test_pareto_hand_oracle():
    cands = Candidates.from_pairs([(0, 0)])
    frontier, sol = pareto_select(cands, np.array([0.1]), [0.05, 0.5, 1.0])
    assert [(n, pytest.approx(c)) for n, c, _ in frontier.points] == [(0, 0.0), (1, 0.1), (1, 0.1)]
    assert frontier.points[frontier.chosen][0] == 1 and sol.n_links == 1


def test_pareto_identical_costs_step():
    cands = Candidates.from_pairs([(i, i) for i in range(5)])
    frontier, _ = pareto_select(cands, np.full(5, 0.3), [0.1, 0.2, 0.3, 0.4])
    assert frontier.link_counts == [0, 0, 5, 5]


def test_pareto_grid_validation():
    cands = Candidates.from_pairs([(0, 0)])
    with pytest.raises(ValueError):
        pareto_select(cands, np.array([0.1]), [0.5])
    with pytest.raises(ValueError):
        pareto_select(cands, np.array([0.1]), [0.5, 0.5])


def test_utopia_degenerate_and_ties():
    assert utopia_index([3, 3], [1.0, 1.0]) == (0, True)
    # (0, 0) and (1, 1) are equidistant from (1, 0); the larger count wins
    assert utopia_index([0, 2], [0.0, 5.0])[0] == 1


@given(st.integers(0, 10_000))
def test_default_grid_monotone(seed):
    rng = np.random.default_rng(seed)
    p0 = rng.uniform(0, 80, (rng.integers(1, 30), 2))
    p1 = rng.uniform(0, 80, (rng.integers(1, 30), 2))
    cands = gen_candidates(p0, p1, 12.0)
    costs = rng.random(len(cands)) ** 2
    grid = default_lambda_grid(costs)
    assert len(grid) == 16 and np.all(np.diff(grid) > 0)
    frontier, _ = pareto_select(cands, costs, grid)
    assert is_monotone(frontier)


# -- tracker ------------------------------------------------------------------


def test_single_straight_object():
    frames = [np.array([[10.0 + 3.0 * t, 20.0 + 1.0 * t]]) for t in range(5)]
    res = track_sequence(frames)
    assert sum(fr.solution.n_links for fr in res.frames) == 4
    for fr in res.frames:
        assert fr.costs[fr.solution.selected].tolist() == [0.0]
        assert fr.converged and fr.n_iter == 1


def test_tracker_needs_three_frames():
    with pytest.raises(ValueError):
        track_sequence([np.zeros((1, 2))] * 2)


def test_tracker_invariants_on_preset():
    sim = simulate(preset_scenario("interdigitated", seed=2).replace(n_frames=6))
    res = track_sequence(sim.frames)
    for fr in res.frames:
        sol = fr.solution
        assert len(set(sol.src.tolist())) == sol.n_links == len(set(sol.dst.tolist()))
        assert is_monotone(fr.frontier)
        last = fr.iterations[-1]
        assert fr.converged == (last.frac_changed < 0.05)
        if not fr.converged:
            assert len(fr.iterations) == LinkerConfig().max_iter + 1
    again = track_sequence(sim.frames)
    assert [fr.solution.pairs() for fr in again.frames] == [fr.solution.pairs() for fr in res.frames]


def test_empty_frames_give_no_vectors():
    frames = [np.zeros((0, 2)), np.array([[1.0, 1.0]]), np.zeros((0, 2))]
    res = track_sequence(frames)
    assert all(len(fr.vectors) == 0 for fr in res.frames)


def _isolated_pair_penalty(**kw):
    a = [(10.0 + 4 * t, 10.0) for t in range(4)]
    frames = [np.array([a[0]]), np.array([a[1], (100.0, 100.0)]), np.array([a[2], (103.0, 100.0)]),
              np.array([a[3]])]
    res = track_sequence(frames, linker=LinkerConfig(**kw))
    fr = res.frames[1]
    k = int(np.flatnonzero((fr.candidates.src == 1) & (fr.candidates.dst == 1))[0])
    return fr.penalties[k]


def test_unsupported_link_penalized():
    # no selected predecessor and no successor candidate in t+2
    np.testing.assert_array_equal(_isolated_pair_penalty()[:2], [1.0, 1.0])
    np.testing.assert_array_equal(_isolated_pair_penalty(unsupported_penalty=0.0)[:2], [0.0, 0.0])
    np.testing.assert_array_equal(_isolated_pair_penalty(lookahead=False)[:2], [0.0, 0.0])


def test_unsupported_penalty_range():
    with pytest.raises(ValueError):
        LinkerConfig(unsupported_penalty=1.5)


def test_damped_update_is_log_space_blend():
    comps = np.random.default_rng(1).random((40, 3)) * [0.1, 0.5, 1.0]
    w0 = Weights(var_eq=2.0, var_turn=0.5, var_cohort=1.0)
    full = w0.updated(comps)
    half = w0.updated(comps, damping=0.5)
    np.testing.assert_allclose(half.var, np.sqrt(w0.var * full.var), rtol=1e-12)
    # a fixed point of the undamped update is a fixed point of the damped one
    again = full.updated(comps, damping=0.9)
    np.testing.assert_allclose(again.var, full.var, rtol=1e-12)
    with pytest.raises(ValueError):
        w0.updated(comps, damping=1.0)


def test_cycle_damping_range():
    with pytest.raises(ValueError):
        LinkerConfig(cycle_damping=1.0)


@given(st.integers(1, 40), st.lists(st.tuples(st.integers(0, 39), st.integers(0, 39)), max_size=60))
def test_components_match_scipy(n, edges):
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    from cohortflow.linker.assignment import _components

    e = np.array([(a % n, b % n) for a, b in edges], dtype=int).reshape(-1, 2)
    g = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
    _, expected = connected_components(g, directed=False)
    assert _components(n, e[:, 0], e[:, 1]).tolist() == expected.tolist()

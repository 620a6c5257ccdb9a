import math

import numpy as np
import pytest

from cohortflow.alert import CohortReport
from cohortflow.evaluate import (
    NOT_DETECTED,
    EvaluationError,
    evaluate,
    ground_truth_links,
    link_scores,
    match_directions,
    onset_latency,
)
from cohortflow.sim import PRESETS, preset_scenario, simulate


def rep(frame, direction, cid=0):
    return CohortReport(frame, cid, 10, 0.0, 0.0, direction, 3.0, 3.0, 0.9)


def truth_reports(scenario):
    return [rep(t, c.direction, k) for t in range(scenario.n_frames - 1)
            for k, c in enumerate(scenario.cohorts) if c.onset_frame <= t]


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_truth_is_fixed_point(name):
    scen = preset_scenario(name, seed=1)
    sim = simulate(scen)
    gt = sim.truth
    links = ground_truth_links(gt.positions, gt.object_ids)
    r = evaluate(links, truth_reports(scen), gt.positions, gt.object_ids, scen, gt.cohort_ids)
    assert (r.link_precision, r.link_recall, r.cohort_count_error) == (1.0, 1.0, 0)
    assert r.mean_direction_error_deg == 0.0
    assert r.onset_latency_frames == 0


def small_truth():
    pos = [np.array([[0.0, 0.0], [10.0, 0.0], [50.0, 50.0]]),
           np.array([[1.0, 0.0], [11.0, 0.0]]),
           np.array([[2.0, 0.0], [12.0, 0.0]])]
    ids = [np.array([0, 1, -1]), np.array([0, 1]), np.array([1, 0])]
    return pos, ids


def test_zero_predictions():
    pos, ids = small_truth()
    p, r, tp, n_pred, n_true = link_scores({}, pos, ids)
    assert (p, r, tp, n_pred, n_true) == (1.0, 0.0, 0, 0, 4)


def test_swapped_and_clutter_links():
    pos, ids = small_truth()
    links = {
        0: np.array([[0.0, 0.0, 1.0, 0.0], [50.0, 50.0, 11.0, 0.0]]),  # good, clutter
        1: np.array([[1.0, 0.0, 2.0, 0.0]]),  # object 0 -> object 1: wrong
    }
    p, r, tp, _, _ = link_scores(links, pos, ids)
    assert (tp, p, r) == (1, 1 / 3, 1 / 4)


def test_match_radius_inclusive():
    pos, ids = small_truth()
    ok = {0: np.array([[0.0, 1.0, 1.0, 0.0]])}
    assert link_scores(ok, pos, ids)[2] == 1
    far = {0: np.array([[0.0, 1.0001, 1.0, 0.0]])}
    assert link_scores(far, pos, ids)[2] == 0


def test_frame_mismatch():
    pos, ids = small_truth()
    with pytest.raises(EvaluationError):
        link_scores({5: np.zeros((1, 4))}, pos, ids)
    with pytest.raises(EvaluationError):
        evaluate({}, [], pos, ids, final_frame=2)


def test_greedy_direction_matching():
    pairs = match_directions([0.1, 3.0], [math.pi, 0.0, 1.5])
    assert sorted((i, j) for i, j, _ in pairs) == [(0, 1), (1, 0)]
    assert pairs[0][2] == pytest.approx(0.1)


def test_onset_latency():
    reports = [rep(9, 0.0), rep(12, 2.0), rep(13, 0.2)]
    assert onset_latency(reports, 10, 0.0) == 3
    assert onset_latency(reports, 10, -2.0) == NOT_DETECTED


def test_count_error_without_scenario():
    pos, ids = small_truth()
    cids = [np.array([0, 0, -1]), np.array([0, 0]), np.array([0, 0])]
    r = evaluate({}, [rep(1, 0.0), rep(1, 1.0, 1)], pos, ids, gt_cohort_ids=cids)
    assert r.cohort_count_error == 1
    assert math.isnan(r.mean_direction_error_deg)
    assert r.onset_latency_frames == NOT_DETECTED

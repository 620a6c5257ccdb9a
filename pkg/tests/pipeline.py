"""Shared simulate -> track -> score helper for the scenario-level tests."""
import time

import numpy as np

from cohortflow import CalibrationConfig, simulate, track_sequence
from cohortflow.alert import cohort_report
from cohortflow.evaluate import evaluate


def run_scenario(scen, calib=None, linker=None, cohort=None):
    """Returns (sim, track result, EvalReport, per-step seconds)."""
    calib = calib or CalibrationConfig()
    sim = simulate(scen, calib)
    t0 = time.perf_counter()
    res = track_sequence(sim.frames, calib, linker, cohort, seed=scen.seed)
    wall = time.perf_counter() - t0
    links, reports = {}, []
    for fr in res.frames:
        s = fr.solution
        links[fr.frame] = np.hstack([res.positions[fr.frame][s.src], res.positions[fr.frame + 1][s.dst]])
        reports.extend(cohort_report(fr.cohort, fr.vectors, calib))
    rep = evaluate(links, reports, sim.truth.positions, sim.truth.object_ids, scenario=scen)
    steps = [fr.elapsed for fr in res.frames]
    return sim, res, rep, steps, wall

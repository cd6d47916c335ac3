"""Randomized scenario generator: reproducibility and validity."""

import numpy as np

from vczsim.randomized import WORKSPACE, random_scenario, run_campaign
from vczsim.scenario import validate
from vczsim.scenario_io import scenario_hash


def test_same_seed_same_scenario():
    a = random_scenario(4242)
    b = random_scenario(4242)
    assert scenario_hash(a) == scenario_hash(b)
    np.testing.assert_array_equal(a.x0, b.x0)
    assert a.t_f == b.t_f
    assert len(a.obstacles) == len(b.obstacles)
    for oa, ob in zip(a.obstacles, b.obstacles):
        assert oa.kind == ob.kind and oa.radius == ob.radius
        np.testing.assert_array_equal(oa.center(1.0), ob.center(1.0))


def test_generated_scenarios_validate_and_fit_workspace():
    lo, hi = WORKSPACE
    for seed in range(100, 110):
        scenario = random_scenario(seed)
        assert validate(scenario, 101).all_passed
        assert np.all(scenario.x0 >= lo) and np.all(scenario.x0 <= hi)
        assert np.all(scenario.target.center >= lo) and np.all(scenario.target.center <= hi)


def test_small_campaign_is_reproducible():
    a = run_campaign(count=3, base_seed=77)
    b = run_campaign(count=3, base_seed=77)
    assert a.runs == b.runs
    assert a.infeasible_count == b.infeasible_count

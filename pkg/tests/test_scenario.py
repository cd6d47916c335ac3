"""Scenario validation checks and set-geometry helpers."""

import math
from dataclasses import replace

import numpy as np
import pytest

from vczsim.barriers import Obstacle, ShrinkSchedule, TargetSet
from vczsim.confinement import ConfinementLaw
from vczsim.plant import integrator_plant
from vczsim.scenario import (
    Scenario,
    benchmark_scenario,
    sphere_containment_violations,
    tightened_unsafe_distance,
    uniform_alphas,
    validate,
)
from vczsim.virtual import VirtualSystem

BENCH = benchmark_scenario()


def simple_scenario(obstacles, x0=(0.0, 0.0), r_c=0.5, target=None, shrink=None):
    target = target or TargetSet([10.0, 10.0], 1.1)
    shrink = shrink or ShrinkSchedule(max(15.0, float(np.linalg.norm(np.asarray(x0) - target.center)) + 1), 0.5, 10.0)
    return Scenario(
        plant=integrator_plant(2),
        obstacles=tuple(obstacles),
        target=target,
        r_c=r_c,
        t_f=shrink.t_f,
        x0=np.asarray(x0, dtype=float),
        shrink=shrink,
        virtual_system=VirtualSystem.single_integrator(2),
        alphas=uniform_alphas(len(obstacles) + 1),
        qp_h=np.eye(2),
        qp_f=np.zeros(2),
        confinement=ConfinementLaw(10.0, r_c),
        dt=1e-3,
    )


class TestValidate:
    def test_benchmark_passes_with_expected_margins(self):
        report = validate(BENCH, 1001)
        assert report.all_passed
        assert report.check("V2").worst_margin == pytest.approx(math.sqrt(82.0) - 2.6)
        assert report.check("V3").worst_margin == pytest.approx(1.5)
        assert report.check("V4").worst_margin == pytest.approx(0.1)

    def test_boundary_separation_margin_zero(self):
        # distance exactly 2 r_c + r_1 + r_2 = 2.0
        obstacles = [Obstacle.static([4.0, 6.0], 0.5), Obstacle.static([6.0, 6.0], 0.5)]
        report = validate(simple_scenario(obstacles), 101)
        v1 = report.check("V1")
        assert v1.passed
        assert v1.worst_margin == pytest.approx(0.0, abs=1e-12)

    def test_initial_state_inside_obstacle_fails_v3(self):
        report = validate(simple_scenario([Obstacle.static([0.2, 0.0], 0.5)]), 101)
        v3 = report.check("V3")
        assert not v3.passed and v3.worst_margin < 0
        assert not report.all_passed

    def test_radius_ordering_fails_v4(self):
        bad = simple_scenario([], r_c=1.2)  # r_c >= r_R = 1.1
        report = validate(bad, 101)
        assert not report.check("V4").passed

    def test_moving_obstacle_separation_tracked_over_time(self):
        # converging obstacles violate separation only late in the horizon
        obstacles = [
            Obstacle.linear([3.0, 6.0], [0.3, 0.0], 0.5),
            Obstacle.linear([9.0, 6.0], [-0.3, 0.0], 0.5),
        ]
        report = validate(simple_scenario(obstacles), 201)
        v1 = report.check("V1")
        assert not v1.passed
        assert v1.worst_time == pytest.approx(10.0)

    def test_determinism(self):
        a = validate(BENCH, 501)
        b = validate(BENCH, 501)
        assert a == b

    def test_rejects_tiny_time_grid(self):
        with pytest.raises(ValueError):
            validate(BENCH, 1)


class TestTightenedUnsafeDistance:
    def test_benchmark_start(self):
        assert tightened_unsafe_distance([0.0, 0.0], 0.0, BENCH) == pytest.approx(1.5)

    def test_boundary_is_zero(self):
        assert tightened_unsafe_distance([2.5, 2.0], 0.0, BENCH) == pytest.approx(0.0, abs=1e-12)

    def test_no_obstacles_is_infinite(self):
        assert tightened_unsafe_distance([0.0, 0.0], 0.0, simple_scenario([])) == math.inf


class TestContainmentImplication:
    def test_safe_centers_contain_safe_spheres(self):
        # any center outside the tightened set keeps the whole sphere outside
        # the true obstacles (triangle inequality made concrete)
        rng = np.random.default_rng(21)
        checked = 0
        while checked < 50:
            c = rng.uniform(-2.0, 12.0, size=2)
            t = float(rng.uniform(0.0, 10.0))
            if tightened_unsafe_distance(c, t, BENCH) < 0.0:
                continue
            assert sphere_containment_violations(c, t, BENCH, count=64, seed=checked) == 0
            checked += 1

    def test_unsafe_center_is_detected(self):
        c = BENCH.obstacles[0].center(0.0)  # dead center of the static obstacle
        assert sphere_containment_violations(c, 0.0, BENCH, count=64, seed=0) > 0


class TestScenarioConstruction:
    def test_rejects_gain_sign_mismatch(self):
        with pytest.raises(ValueError):
            replace(BENCH, confinement=ConfinementLaw(-10.0, 0.5))

    def test_rejects_inconsistent_confinement_radius(self):
        with pytest.raises(ValueError):
            replace(BENCH, confinement=ConfinementLaw(10.0, 0.4))

    def test_rejects_wrong_alpha_count(self):
        with pytest.raises(ValueError):
            replace(BENCH, alphas=uniform_alphas(2))

    def test_rejects_shrink_horizon_mismatch(self):
        with pytest.raises(ValueError):
            replace(BENCH, shrink=ShrinkSchedule(15.0, 0.5, 9.0))

    def test_with_overrides_keeps_shrink_consistent(self):
        shorter = BENCH.with_overrides(t_f=5.0)
        assert shorter.shrink.t_f == 5.0
        assert shorter.shrink.r_start == BENCH.shrink.r_start

"""Scenario text format: parsing, canonical serialization, error reporting."""

import numpy as np
import pytest

from conftest import bundled_benchmark_text
from vczsim.plant import PlantModel
from vczsim.scenario import benchmark_scenario, validate
from vczsim.scenario_io import (
    ScenarioParseError,
    SerializationError,
    parse_scenario,
    scenario_hash,
    serialize_scenario,
)

CUSTOM_TEXT = """
[plant]
f = (* 2 (sin x2)) (* 2 (cos x1))
g = 1.0 0.0 ; 0.0 1.0
omega = (* 0.1 (cos t)) 0.0
sign_class = positive_definite

[obstacle]
path = (+ 5 (* 0.4 t)) (- 5 (* 0.4 t))
radius = 1.5

[target]
center = 10 10
radius = 1.1

[vcz]
r_c = 0.5

[horizon]
t_f = 10
dt = 0.001

[shrink]
r_start = 15
r_end = 0.5

[controller]
gain = 10
alpha = 1 2

[initial_state]
x0 = 0 0
"""


class TestParse:
    def test_bundled_benchmark_matches_programmatic(self):
        parsed = parse_scenario(bundled_benchmark_text())
        assert serialize_scenario(parsed) == serialize_scenario(benchmark_scenario())
        assert scenario_hash(parsed) == scenario_hash(benchmark_scenario())

    def test_round_trip_is_fixed_point(self):
        parsed = parse_scenario(bundled_benchmark_text())
        canonical = serialize_scenario(parsed)
        assert serialize_scenario(parse_scenario(canonical)) == canonical

    def test_custom_plant_and_path(self):
        scenario = parse_scenario(CUSTOM_TEXT)
        assert scenario.plant.descriptor[0] == "exprs"
        assert scenario.obstacles[0].kind == "custom"
        np.testing.assert_allclose(scenario.obstacles[0].center(5.0), [7.0, 3.0])
        np.testing.assert_allclose(scenario.obstacles[0].velocity(2.0), [0.4, -0.4], atol=1e-8)
        assert scenario.alphas[0].slope == 1.0 and scenario.alphas[1].slope == 2.0
        assert validate(scenario, 101).all_passed
        canonical = serialize_scenario(scenario)
        assert serialize_scenario(parse_scenario(canonical)) == canonical

    def test_defaults_for_optional_keys(self):
        scenario = parse_scenario(bundled_benchmark_text())
        np.testing.assert_array_equal(scenario.qp_h, np.eye(2))
        np.testing.assert_array_equal(scenario.qp_f, np.zeros(2))
        assert scenario.seed == 0


class TestParseErrors:
    def test_malformed_numeric_names_key_and_line(self):
        text = bundled_benchmark_text().replace("r_c = 0.5", "r_c = abc")
        with pytest.raises(ScenarioParseError) as exc_info:
            parse_scenario(text)
        assert "r_c" in str(exc_info.value)
        assert "line" in str(exc_info.value)

    def test_missing_section(self):
        text = bundled_benchmark_text().replace("[vcz]", "[run]").replace("r_c = 0.5", "seed = 1")
        with pytest.raises(ScenarioParseError) as exc_info:
            parse_scenario(text)
        assert "vcz" in str(exc_info.value)

    def test_unknown_section(self):
        with pytest.raises(ScenarioParseError):
            parse_scenario("[nonsense]\nkey = 1\n")

    def test_duplicate_key(self):
        text = bundled_benchmark_text().replace("r_c = 0.5", "r_c = 0.5\nr_c = 0.4")
        with pytest.raises(ScenarioParseError) as exc_info:
            parse_scenario(text)
        assert "duplicate" in str(exc_info.value)

    def test_obstacle_path_may_not_use_state(self):
        text = CUSTOM_TEXT.replace("(+ 5 (* 0.4 t))", "(+ 5 x1)")
        with pytest.raises(ScenarioParseError) as exc_info:
            parse_scenario(text)
        assert "path" in str(exc_info.value)

    def test_wrong_vector_length(self):
        text = bundled_benchmark_text().replace("x0 = 0.0 0.0", "x0 = 0.0 0.0 0.0")
        with pytest.raises(ScenarioParseError):
            parse_scenario(text)

    def test_non_integer_seed(self):
        text = bundled_benchmark_text().replace("seed = 0", "seed = 0.5")
        with pytest.raises(ScenarioParseError):
            parse_scenario(text)

    def test_bad_expression_reports_key(self):
        text = CUSTOM_TEXT.replace("(* 2 (sin x2))", "(* 2 (sin x2)")
        with pytest.raises(ScenarioParseError):
            parse_scenario(text)


class TestHash:
    def test_hash_ignores_integration_step(self):
        a = parse_scenario(bundled_benchmark_text())
        b = a.with_overrides(dt=5e-4)
        assert scenario_hash(a) == scenario_hash(b)

    def test_hash_tracks_problem_changes(self):
        a = parse_scenario(bundled_benchmark_text())
        b = a.with_overrides(t_f=8.0)
        assert scenario_hash(a) != scenario_hash(b)

    def test_opaque_plant_falls_back_to_structural_digest(self):
        base = benchmark_scenario()
        opaque = PlantModel(
            lambda x: np.zeros(2), lambda x: np.eye(2), lambda t: np.zeros(2),
            "positive_definite", 2,
        )
        scenario = base.with_overrides(plant=opaque)
        with pytest.raises(SerializationError):
            serialize_scenario(scenario)
        assert len(scenario_hash(scenario)) == 16
        assert scenario_hash(scenario) == scenario_hash(scenario)

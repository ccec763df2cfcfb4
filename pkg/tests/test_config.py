import os
import tempfile
import unittest
from unittest import mock

from bootstrap import add_src_path

add_src_path()

from nrlight.config import RunConfig, load_config, load_runtime_env, parse_config, resolve_output_path, serialize_config
from nrlight.errors import RangeError, SchemaError
from nrlight.models import Direction, SweepAxis, SystemParams


class TestParseConfig(unittest.TestCase):
    def test_empty_object_gives_defaults(self) -> None:
        config = parse_config("{}")
        self.assertEqual(config.params, SystemParams())
        self.assertEqual(config.params.kappa1, -7.4)
        self.assertEqual(config.params.kappa_e, 3.2)
        self.assertEqual(config.solver.rtol, 1e-9)
        self.assertEqual(config.solver.atol, 1e-12)
        self.assertEqual(config.output.format, "csv")
        self.assertIsNone(config.sweep)

    def test_out_of_range_value(self) -> None:
        with self.assertRaises(RangeError) as ctx:
            parse_config('{"params": {"gamma": -1}}')
        self.assertEqual(ctx.exception.path, "params.gamma")

    def test_unknown_key(self) -> None:
        with self.assertRaises(SchemaError) as ctx:
            parse_config('{"params": {"kappa3": 1.0}}')
        self.assertEqual(ctx.exception.path, "params.kappa3")

    def test_wrong_type(self) -> None:
        with self.assertRaises(SchemaError):
            parse_config('{"params": {"g": "strong"}}')

    def test_invalid_json(self) -> None:
        with self.assertRaises(SchemaError):
            parse_config('{"params": ')
        with self.assertRaises(SchemaError):
            parse_config("[1, 2]")

    def test_kappa2_is_the_unit(self) -> None:
        with self.assertRaises(RangeError):
            parse_config('{"params": {"kappa2": 2.0}}')

    def test_scenario_and_sweep_are_exclusive(self) -> None:
        text = '{"scenario": "fig7", "sweep": {"axis1": {"axis": "g", "values": [1.0]}}}'
        with self.assertRaises(SchemaError):
            parse_config(text)

    def test_sweep_section(self) -> None:
        text = '{"sweep": {"axis1": {"axis": "eps_p_sq", "start": 0, "stop": 1, "points": 3}, "directions": ["backward"]}}'
        config = parse_config(text)
        self.assertEqual(config.sweep.axis1.axis, SweepAxis.EPS_P_SQ)
        self.assertEqual(config.sweep.axis1.grid(), [0.0, 0.5, 1.0])
        self.assertEqual(config.sweep.directions, [Direction.BACKWARD])

    def test_non_monotone_values_rejected(self) -> None:
        with self.assertRaises(RangeError):
            parse_config('{"sweep": {"axis1": {"axis": "g", "values": [1, 3, 2]}}}')

    def test_round_trip(self) -> None:
        config = parse_config('{"params": {"g": 2.5, "delta1": -0.5}, "output": {"format": "json"}}')
        text = serialize_config(config)
        self.assertEqual(parse_config(text), config)
        self.assertEqual(serialize_config(parse_config(text)), text)
        self.assertTrue(text.endswith("\n"))

    def test_load_config_missing_file(self) -> None:
        with self.assertRaises(SchemaError):
            load_config("/nonexistent/run.json")

    def test_load_config_from_file(self) -> None:
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "run.json")
            with open(path, "w", encoding="utf-8") as handle:
                handle.write('{"scenario": "fig7"}')
            self.assertEqual(load_config(path), RunConfig(scenario="fig7"))


class TestRuntimeEnv(unittest.TestCase):
    def test_defaults(self) -> None:
        with mock.patch.dict(os.environ, {}, clear=True):
            env = load_runtime_env()
        self.assertEqual(env.threads, 1)
        self.assertTrue(env.cache_enabled)
        self.assertEqual(env.cache_capacity, 64)
        self.assertEqual(env.log_level, "WARNING")

    def test_overrides(self) -> None:
        overrides = {"NRLIGHT_THREADS": "4", "NRLIGHT_CACHE_ENABLED": "0", "NRLIGHT_LOG_LEVEL": "debug"}
        with mock.patch.dict(os.environ, overrides, clear=True):
            env = load_runtime_env()
        self.assertEqual(env.threads, 4)
        self.assertFalse(env.cache_enabled)
        self.assertEqual(env.log_level, "DEBUG")

    def test_bad_values_name_the_variable(self) -> None:
        for name, value in (("NRLIGHT_THREADS", "0"), ("NRLIGHT_THREADS", "many"), ("NRLIGHT_CACHE_ENABLED", "yes"), ("NRLIGHT_CACHE_CAPACITY", "0")):
            with mock.patch.dict(os.environ, {name: value}, clear=True):
                with self.assertRaises(RangeError) as ctx:
                    load_runtime_env()
            self.assertEqual(ctx.exception.path, name)

    def test_relative_output_paths_land_in_output_dir(self) -> None:
        with mock.patch.dict(os.environ, {"NRLIGHT_OUTPUT_DIR": "/tmp/nrlight-out"}, clear=True):
            self.assertEqual(resolve_output_path("fig7.csv"), "/tmp/nrlight-out/fig7.csv")
            self.assertEqual(resolve_output_path("/abs/fig7.csv"), "/abs/fig7.csv")


if __name__ == "__main__":
    unittest.main()

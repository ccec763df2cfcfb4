import io
import json
import os
import tempfile
import unittest
from unittest import mock

from bootstrap import add_src_path

add_src_path()

from nrlight.cli import EXIT_OK, EXIT_SOLVER, EXIT_USAGE, NrlightCli, build_parser, main


def _run(*argv: str):
    out = io.StringIO()
    with mock.patch("sys.stderr", new_callable=io.StringIO) as err:
        code = main(list(argv), out=out)
    return code, out.getvalue(), err.getvalue()


class TestCli(unittest.TestCase):
    def test_steady_at_operating_point(self) -> None:
        code, out, _ = _run("steady")
        self.assertEqual(code, EXIT_OK)
        self.assertIn("forward: 1 branch(es)", out)
        self.assertIn("backward: 1 branch(es)", out)
        # both balanced-pair branches are unstable, so the detector output comes from a time-domain run
        self.assertEqual(out.count("no stable branch; observed T="), 2)
        self.assertNotIn(" selected", out)
        self.assertIn("isolation (observed output): ", out)

    def test_steady_flags_override_params(self) -> None:
        code, out, _ = _run("steady", "--g", "4", "--J", "4", "--kappa1", "1", "--kappa-e", "3", "--eps-p", "0.7071", "--dir", "forward")
        self.assertEqual(code, EXIT_OK)
        self.assertIn("forward: 3 branch(es)", out)
        self.assertNotIn("backward", out)
        self.assertEqual(out.count(" selected"), 1)
        self.assertIn("[0] ", [line for line in out.splitlines() if line.endswith(" selected")][0])

    def test_stability_lists_eigenvalues(self) -> None:
        code, out, _ = _run("stability", "--dir", "backward")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(out.count("i\n"), 7)

    def test_singular_point_is_a_solver_error(self) -> None:
        code, _, err = _run("steady", "--g", "0", "--J", "2", "--kappa1", "-7", "--kappa-e", "3")
        self.assertEqual(code, EXIT_SOLVER)
        self.assertIn("SingularLinearSystem", err)

    def test_invalid_parameter_is_a_usage_error(self) -> None:
        code, _, err = _run("steady", "--gamma", "-1")
        self.assertEqual(code, EXIT_USAGE)
        self.assertIn("RangeError", err)

    def test_unknown_flag(self) -> None:
        code, _, _ = _run("steady", "--temperature", "3")
        self.assertEqual(code, EXIT_USAGE)

    def test_validate_echoes_canonical_config(self) -> None:
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "run.json")
            with open(path, "w", encoding="utf-8") as handle:
                handle.write('{"params": {"g": 2}}')
            code, out, _ = _run("validate", path)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(json.loads(out)["params"]["g"], 2.0)

    def test_validate_rejects_bad_config(self) -> None:
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "run.json")
            with open(path, "w", encoding="utf-8") as handle:
                handle.write('{"params": {"gamma": -1}}')
            code, _, err = _run("validate", path)
        self.assertEqual(code, EXIT_USAGE)
        self.assertIn("params.gamma", err)

    def test_sweep_from_config(self) -> None:
        config = {
            "params": {"g": 4, "J": 4, "kappa1": 1, "kappa_e": 3},
            "sweep": {"axis1": {"axis": "eps_p_sq", "values": [0.1, 0.5]}, "directions": ["forward"]},
        }
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "run.json")
            with open(path, "w", encoding="utf-8") as handle:
                json.dump(config, handle)
            code, out, _ = _run("sweep", path)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(len(out.splitlines()), 1 + 1 + 3)

    def test_figure_writes_data_and_plot_script(self) -> None:
        with tempfile.TemporaryDirectory() as tmpdir:
            data = os.path.join(tmpdir, "fig4b.csv")
            script = os.path.join(tmpdir, "plot.py")
            code, out, _ = _run(
                "figure",
                "fig4b",
                "--set",
                "points=2",
                "--set",
                "values2=[3.0]",
                "--set",
                "hysteresis=false",
                "--no-cache",
                "--out",
                data,
                "--plot-script",
                script,
            )
            self.assertEqual(code, EXIT_OK)
            self.assertIn("wrote", out)
            self.assertTrue(os.path.exists(data))
            with open(script, "r", encoding="utf-8") as handle:
                self.assertIn(data, handle.read())

    def test_unwritable_output_is_a_usage_error(self) -> None:
        with tempfile.TemporaryDirectory() as tmpdir:
            blocker = os.path.join(tmpdir, "blocker")
            with open(blocker, "w", encoding="utf-8") as handle:
                handle.write("")
            code, _, err = _run(
                "figure", "fig5e", "--set", "points=2", "--no-cache", "--out", os.path.join(blocker, "fig5e.csv")
            )
        self.assertEqual(code, EXIT_USAGE)
        self.assertIn("cannot write", err)
        self.assertNotIn("Traceback", err)

    def test_hysteresis_settings_follow_config_solver(self) -> None:
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "run.json")
            with open(path, "w", encoding="utf-8") as handle:
                handle.write('{"solver": {"t_hold": 120, "newton_max_iter": 20}}')
            args = build_parser().parse_args(["hysteresis", "--config", path, "--rtol", "1e-6"])
            settings = NrlightCli()._hysteresis_settings(args)
        self.assertEqual(settings, {"t_hold": 120.0, "rtol": 1e-6, "atol": 1e-10, "newton_max_iter": 20})

    def test_figure_list(self) -> None:
        code, out, _ = _run("figure", "--list")
        self.assertEqual(code, EXIT_OK)
        self.assertIn("fig7", out.split())

    def test_unknown_figure(self) -> None:
        code, _, err = _run("figure", "fig9")
        self.assertEqual(code, EXIT_USAGE)
        self.assertIn("UnknownScenario", err)

    def test_figure_rejects_unknown_override(self) -> None:
        code, _, err = _run("figure", "fig7", "--set", "colour=red", "--no-cache")
        self.assertEqual(code, EXIT_USAGE)
        self.assertIn("colour", err)


if __name__ == "__main__":
    unittest.main()
